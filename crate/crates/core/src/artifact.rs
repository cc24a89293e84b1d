//! Provenance headers for emitted CSV and JSON artifacts.

use serde::Serialize;

use crate::error::{Error, Result};

/// Flattens a serializable config into dotted `key = value` pairs.
pub fn flatten<T: Serialize>(value: &T) -> Result<Vec<(String, String)>> {
    let v = toml::Value::try_from(value).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = Vec::new();
    walk("", &v, &mut out);
    Ok(out)
}

fn walk(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                walk(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// `# key = value` lines, one per pair.
pub fn comment_header(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Inner {
        width: u32,
    }

    #[derive(Serialize)]
    struct Outer {
        name: &'static str,
        inner: Inner,
    }

    #[test]
    fn nested_tables_become_dotted_keys() {
        let pairs = flatten(&Outer {
            name: "x",
            inner: Inner { width: 3 },
        })
        .unwrap();
        assert_eq!(comment_header(&pairs), "# name = \"x\"\n# inner.width = 3\n");
    }
}
