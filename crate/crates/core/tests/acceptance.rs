//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs in a single process so the memory figure for the breadth-first table
//! is the peak resident size before anything else has been allocated.

use std::process::ExitCode;
use std::time::Instant;

use aqsolve::bench::{self, HeuristicSource, HeuristicSpec, Models, StatesSpec, SweepSpec};
use aqsolve::model::{CostModel, Learner, OutputKind, QFromHeuristic, TableModel, ZeroHeuristic};
use aqsolve::nn::{Matrix, NetArchitecture, NetworkParams, Target};
use aqsolve::oracle::{
    bfs_distances, corner_permutation_graph, induced_subgraph, tabular_q_iteration, tabular_value_iteration,
    DistanceTable, ExactDqn, ExactHeuristic,
};
use aqsolve::puzzle::{ActionSpace, PuzzleKind, PuzzleState, CUBE2_STATES};
use aqsolve::search::{aqstar, astar, replay, Counters, Method, Outcome, SearchConfig};
use aqsolve::training::{
    davi_update, eval_greedy, qlearn_update, train_loop, BoltzmannSign, Exploration, TargetUpdate, TrainConfig,
    TrainMode, TrainOptions,
};
use aqsolve::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn cube2(l: usize) -> ActionSpace {
    ActionSpace::new(PuzzleKind::Cube2, l).unwrap()
}

/// Peak resident set size in MiB, if the platform reports it.
fn peak_rss_mib() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kib: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib / 1024.0)
}

fn c1_oracle(space: &ActionSpace) -> Result<(Verdict, DistanceTable)> {
    let t = Instant::now();
    let table = bfs_distances(space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0u64;
    for _ in 0..1_000_000 {
        let s = PuzzleKind::Cube2.unrank(rng.random_range(0..CUBE2_STATES as u32))?;
        let c = space.step(&s, rng.random_range(0..space.len()));
        let d = table.distance(&s)? as i32;
        let dc = table.distance(&c)? as i32;
        if (d - dc).abs() > 1 {
            violations += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let rss = peak_rss_mib();
    let goal = table.distance(&PuzzleState::GOAL)?;
    let pass = table.visited() == 3_674_160
        && goal == 0
        && violations == 0
        && secs <= 300.0
        && rss.is_none_or(|m| m <= 1024.0);
    let detail = format!(
        "visited {}, d(goal) = {goal}, {violations} Lipschitz violations in 10^6 samples, {secs:.1} s, peak RSS {}",
        table.visited(),
        rss.map_or("unknown".into(), |m| format!("{m:.0} MiB"))
    );
    Ok((Verdict::new(pass, detail), table))
}

fn c2_bellman(space: &ActionSpace, table: &DistanceTable) -> Result<Verdict> {
    let t = Instant::now();
    let (graph, states) = induced_subgraph(space, 6);
    let j = tabular_value_iteration(&graph, 1.0, 1e-9, 1000)?;
    let q = tabular_q_iteration(&graph, 1.0, 1e-9, 1000)?;
    let na = space.len();
    let (mut j_err, mut q_err) = (0.0f64, 0.0f64);
    for (i, s) in states.iter().enumerate() {
        j_err = j_err.max((j[i] - table.distance(s)? as f64).abs());
        if !s.is_goal() {
            let min_q = q[i * na..(i + 1) * na].iter().copied().fold(f64::INFINITY, f64::min);
            q_err = q_err.max((min_q - j[i]).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = j_err <= 1e-9 && q_err <= 1e-9 && secs <= 60.0;
    Ok(Verdict::new(
        pass,
        format!(
            "{} states, max |j - d| = {j_err:.1e}, max |min q - j| = {q_err:.1e} (non-goal states), {secs:.1} s",
            states.len()
        ),
    ))
}

fn c3_optimality(space: &ActionSpace, table: &DistanceTable) -> Result<Verdict> {
    let t = Instant::now();
    let cfg = SearchConfig::new(1.0, 1);
    let h = ExactHeuristic::new(table);
    let q = ExactDqn::new(table, space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut wrong = 0;
    for i in 0..100 {
        let s = PuzzleKind::Cube2.scramble(1 + i % 14, &mut rng);
        let d = table.distance(&s)? as f64;
        let ra = astar(space, &s, &h, &cfg)?;
        let rq = aqstar(space, &s, &q, &cfg)?;
        let ok = |r: &aqsolve::search::SearchResult| -> Result<bool> {
            Ok(r.outcome == Outcome::Solved && r.path_cost == d && replay(space, &s, &r.solution)? == d)
        };
        if !ok(&ra)? || !ok(&rq)? {
            wrong += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok(Verdict::new(
        wrong == 0 && secs <= 120.0,
        format!("{wrong}/100 non-optimal across both methods, {secs:.1} s"),
    ))
}

/// Small cost-to-go network trained briefly; any fixed heuristic will do.
fn quick_value_net() -> Result<aqsolve::model::NetModel> {
    let mut cfg = TrainConfig::new(TrainMode::Davi, PuzzleKind::Cube2, 10, 500, 300);
    cfg.network.hidden = vec![128];
    cfg.network.res_blocks = 0;
    cfg.eval_every = 0;
    cfg.seed = 4;
    let out = train_loop(&cfg, &TrainOptions::default(), |_| {})?;
    Ok(out.learner.model().clone())
}

fn c4_equivalence(space: &ActionSpace, table: &DistanceTable) -> Result<Verdict> {
    let t = Instant::now();
    let cfg = SearchConfig::new(1.0, 1);
    let net = quick_value_net()?;
    let mut parts = Vec::new();
    let mut pass = true;
    let heuristics: [(&str, &dyn CostModel<PuzzleState>, usize); 3] = [
        // Uniform-cost search grows fast with depth, so the zero heuristic gets shallower instances.
        ("zero", &ZeroHeuristic, 8),
        ("oracle", &ExactHeuristic::new(table), 14),
        ("net", &net, 10),
    ];
    for (name, h, max_depth) in heuristics {
        let q = QFromHeuristic::new(space, h);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut equal = 0;
        for i in 0..50 {
            let s = PuzzleKind::Cube2.scramble(1 + i % max_depth, &mut rng);
            let ra = astar(space, &s, h, &cfg)?;
            let rq = aqstar(space, &s, &q, &cfg)?;
            if ra.outcome == Outcome::Solved && rq.outcome == Outcome::Solved && ra.path_cost == rq.path_cost {
                equal += 1;
            }
        }
        pass &= equal == 50;
        parts.push(format!("{name} {equal}/50"));
    }
    Ok(Verdict::new(
        pass,
        format!("equal path costs: {}, {:.1} s", parts.join(", "), t.elapsed().as_secs_f64()),
    ))
}

fn astar_identities(c: &Counters, na: u64) -> bool {
    c.heuristic_states_evaluated == c.nodes_generated - c.closed_skips
        && c.nodes_generated == na * c.expansions
        && c.node_actions_pushed == c.heuristic_states_evaluated
}

fn aqstar_identities(c: &Counters, na: u64) -> bool {
    c.heuristic_states_evaluated == c.surviving_pops
        && c.nodes_generated == c.surviving_pops
        && c.node_actions_pushed == na * c.surviving_pops
        && c.expansions == 0
}

fn c5_counters() -> Result<Verdict> {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for l in 1..=3 {
        let space = cube2(l);
        let table = bfs_distances(&space)?;
        let h = ExactHeuristic::new(&table);
        let q_exact = ExactDqn::new(&table, &space)?;
        let q_zero = QFromHeuristic::new(&space, ZeroHeuristic);
        let na = space.len() as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (mut evals, mut pops) = (0u64, 0u64);
        let mut runs = 0;
        for i in 0..20 {
            let s = PuzzleKind::Cube2.scramble(20 + i, &mut rng);
            let shallow = PuzzleKind::Cube2.scramble(1 + i % 5, &mut rng);
            let lambda = [0.2, 0.6, 1.0][i % 3];
            let n = [1, 10, 100][i % 3];
            let cfg = SearchConfig::new(lambda, n);
            for c in [
                astar(&space, &s, &h, &cfg)?.counters,
                astar(&space, &shallow, &ZeroHeuristic, &cfg)?.counters,
            ] {
                pass &= astar_identities(&c, na);
                runs += 1;
            }
            for c in [
                aqstar(&space, &s, &q_exact, &cfg)?.counters,
                aqstar(&space, &shallow, &q_zero, &cfg)?.counters,
            ] {
                pass &= aqstar_identities(&c, na);
                evals += c.heuristic_states_evaluated;
                pops += c.surviving_pops;
                runs += 1;
            }
        }
        pass &= evals == pops;
        parts.push(format!("L={l} |A|={na} {runs} runs, AQ* evals/pop = {:.3}", evals as f64 / pops.max(1) as f64));
    }
    Ok(Verdict::new(pass, format!("{}, {:.1} s", parts.join("; "), t.elapsed().as_secs_f64())))
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
}

fn max_gradient_error(params: &NetworkParams<f64>, x: &Matrix<f64>, target: Target<'_, f64>) -> Result<f64> {
    let analytic = params.loss_and_grad(x, target)?.grads;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..params.values.len() {
        let loss_at = |offset: f64| -> Result<f64> {
            let mut p = params.clone();
            p.values[i] += offset;
            Ok(p.loss_and_grad(x, target)?.loss)
        };
        // Fourth-order central difference; the second-order one leaves an
        // O(h²) bias that dominates on gradients near the 1e-5 floor.
        let d1 = loss_at(h)? - loss_at(-h)?;
        let d2 = loss_at(2.0 * h)? - loss_at(-2.0 * h)?;
        let numeric = (8.0 * d1 - d2) / (12.0 * h);
        let a = analytic.values[i];
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-5));
    }
    Ok(worst)
}

fn c6_gradients() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for trial in 0..12u64 {
        let depth = rng.random_range(0..3);
        let arch = NetArchitecture {
            input_dim: rng.random_range(2..7),
            hidden: (0..depth).map(|_| rng.random_range(2..8)).collect(),
            res_blocks: rng.random_range(0..3),
            output_dim: rng.random_range(1..5),
            batch_norm: trial % 2 == 1,
        };
        let mut params: NetworkParams<f64> = NetworkParams::init(&arch, trial)?;
        // Zero biases put dead-unit rows exactly on a rectifier kink; move off it.
        for v in &mut params.values {
            *v += rng.random_range(-0.5..0.5);
        }
        let rows = rng.random_range(3..9);
        let x = random_matrix(&mut rng, rows, arch.input_dim);
        let full = random_matrix(&mut rng, rows, arch.output_dim);
        worst = worst.max(max_gradient_error(&params, &x, Target::Full(&full))?);
        let values: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..2.0)).collect();
        let index: Vec<usize> = (0..rows).map(|_| rng.random_range(0..arch.output_dim)).collect();
        worst = worst.max(max_gradient_error(
            &params,
            &x,
            Target::Masked {
                values: &values,
                index: &index,
            },
        )?);
        cases += 2;
    }
    Ok(Verdict::new(
        worst < 1e-4,
        format!("{cases} cases (dense, residual, batch norm; masked and full), max relative error {worst:.2e}"),
    ))
}

fn c7_tabular(space: &ActionSpace) -> Result<Verdict> {
    let t = Instant::now();
    let graph = corner_permutation_graph(space)?;
    let env = graph.env()?;
    let n = graph.num_states();
    let na = graph.num_actions();
    let states: Vec<u32> = (0..n as u32).collect();
    let j_star = tabular_value_iteration(&graph, 1.0, 1e-12, 1000)?;
    let q_star = tabular_q_iteration(&graph, 1.0, 1e-12, 1000)?;
    let max_err = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    let mut j = TableModel::zeros(n, 1);
    let mut davi_iters = 0;
    while max_err(j.values(), &j_star) >= 1e-6 && davi_iters < 1000 {
        let frozen = j.snapshot();
        davi_update(&mut j, &frozen, &env, &states, 1.0)?;
        davi_iters += 1;
    }
    let j_err = max_err(j.values(), &j_star);

    let mut q = TableModel::zeros(n, na);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Near-uniform exploration so every state-action pair keeps being updated.
    let explore = Exploration {
        temperature: 100.0,
        sign: BoltzmannSign::PreferLow,
    };
    let mut q_iters = 0;
    while max_err(q.values(), &q_star) >= 1e-6 && q_iters < 5000 {
        let frozen = q.snapshot();
        qlearn_update(&mut q, &frozen, &env, &states, 1.0, explore, &mut rng)?;
        q_iters += 1;
    }
    let q_err = max_err(q.values(), &q_star);
    Ok(Verdict::new(
        j_err < 1e-6 && q_err < 1e-6,
        format!(
            "{n}-state graph: value update error {j_err:.1e} after {davi_iters} iterations, \
             Q update error {q_err:.1e} after {q_iters} iterations, {:.1} s",
            t.elapsed().as_secs_f64()
        ),
    ))
}

/// Q-learning run used for the end-to-end criterion.
fn end_to_end_config(seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::new(TrainMode::Qlearn, PuzzleKind::Cube2, 14, 1000, 50_000);
    cfg.network.hidden = vec![256, 128];
    cfg.network.res_blocks = 1;
    cfg.target_update = TargetUpdate::Period { period: 200 };
    cfg.lr_decay = 0.99995;
    cfg.eval_every = 10_000;
    cfg.eval_states = 200;
    cfg.seed = seed;
    cfg
}

fn c8_end_to_end(space: &ActionSpace, table: &DistanceTable) -> Result<Verdict> {
    let t = Instant::now();
    let test = bench::test_states(PuzzleKind::Cube2, &StatesSpec::default())?;
    let oracle_avg = test.iter().map(|s| table.distance(s).map(f64::from)).sum::<Result<f64>>()? / test.len() as f64;
    let search_cfg = SearchConfig::new(0.6, 100);
    let mut passes = 0;
    let mut lines = Vec::new();
    for (run, seed) in [1u64, 2, 3].into_iter().enumerate() {
        let cfg = end_to_end_config(seed);
        let started = Instant::now();
        let out = train_loop(&cfg, &TrainOptions::default(), |r| {
            eprintln!(
                "  seed {seed} itr {} loss {:.4} greedy {:.3} ({:.0} s)",
                r.iteration,
                r.loss,
                r.greedy_solve_frac,
                started.elapsed().as_secs_f64()
            )
        })?;
        let model = out.learner.model();

        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let greedy_states: Vec<PuzzleState> = PuzzleKind::Cube2
            .sample_training_states(1000, 14, &mut rng)
            .into_iter()
            .map(|(s, _)| s)
            .collect();
        let greedy = eval_greedy(model, OutputKind::QFactors, space, &greedy_states, 28, 1.0)?;

        let (mut solved, mut cost, mut optimal) = (0usize, 0.0, 0.0);
        for s in &test {
            let r = aqstar(space, s, model, &search_cfg)?;
            if r.outcome == Outcome::Solved {
                solved += 1;
                cost += r.path_cost;
                optimal += table.distance(s)? as f64;
            }
        }
        let ratio = if solved > 0 { cost / optimal } else { f64::INFINITY };
        let frac = solved as f64 / test.len() as f64;
        let ok = greedy >= 0.9 && frac >= 0.95 && ratio <= 1.3;
        passes += ok as usize;
        lines.push(format!(
            "seed {seed}: greedy {greedy:.3}, AQ* solved {frac:.2}, cost ratio {ratio:.3} ({:.0} s) {}",
            started.elapsed().as_secs_f64(),
            if ok { "ok" } else { "fail" }
        ));
        eprintln!("  {}", lines.last().unwrap());
        // Majority is settled once two seeds agree.
        let fails = run + 1 - passes;
        if passes >= 2 || fails >= 2 {
            break;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok(Verdict::new(
        passes >= 2 && secs <= 7200.0,
        format!(
            "{}; oracle average cost {oracle_avg:.2}; {passes} seed(s) passed, {:.0} min",
            lines.join("; "),
            secs / 60.0
        ),
    ))
}

fn throughput(mode: TrainMode) -> Result<f64> {
    let mut cfg = TrainConfig::new(mode, PuzzleKind::Cube2, 10, 200, 30);
    cfg.max_len = 2;
    cfg.network.hidden = vec![256, 128];
    cfg.network.res_blocks = 1;
    cfg.eval_every = 0;
    Ok(train_loop(&cfg, &TrainOptions::default(), |_| {})?.itrs_per_sec)
}

fn c9_directions(l1: &DistanceTable) -> Result<Verdict> {
    let t = Instant::now();
    let q_rate = throughput(TrainMode::Qlearn)?;
    let v_rate = throughput(TrainMode::Davi)?;
    let a = q_rate >= v_rate;

    let space = cube2(2);
    let table = bfs_distances(&space)?;
    let c = table.max_distance() < l1.max_distance();

    let spec = SweepSpec {
        puzzle: PuzzleKind::Cube2,
        max_len: 2,
        methods: vec![Method::Astar, Method::Aqstar],
        lambdas: vec![0.2, 0.6, 1.0],
        batch_sizes: vec![1, 10, 100],
        heuristic: HeuristicSpec {
            source: HeuristicSource::Oracle,
            checkpoints: vec![],
            oracle_cache: None,
        },
        states: StatesSpec {
            count: 30,
            ..StatesSpec::default()
        },
        budget: Default::default(),
    };
    let models = Models::from_table(table.clone(), space)?;
    let states = bench::test_states(PuzzleKind::Cube2, &spec.states)?;
    let out = bench::run_sweep(&spec, &models, &states, |_| {})?;
    let matched = bench::matched_cost_nodes(&out.rows);
    let b = matched.is_some_and(|(_, astar_nodes, aq_nodes)| aq_nodes < astar_nodes);
    let b_text = match matched {
        Some((threshold, an, qn)) => {
            format!("at avg cost ≤ {threshold:.2} A* generates {an:.1} nodes, AQ* {qn:.1}")
        }
        None => "no fully solved rows to compare".into(),
    };
    Ok(Verdict::new(
        a && b && c,
        format!(
            "(a) L=2 itr/s qlearn {q_rate:.2} vs davi {v_rate:.2} (ratio {:.1}) {}; (b) {b_text} {}; \
             (c) max distance L=2 {} vs L=1 {} {}; {:.1} s",
            q_rate / v_rate,
            mark(a),
            mark(b),
            table.max_distance(),
            l1.max_distance(),
            mark(c),
            t.elapsed().as_secs_f64()
        ),
    ))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "fail"
    }
}

fn c10_action_counts() -> Result<Verdict> {
    let counts = |kind| -> Result<Vec<usize>> { (1..=3).map(|l| Ok(ActionSpace::new(kind, l)?.len())).collect() };
    let c3 = counts(PuzzleKind::Cube3)?;
    let c2 = counts(PuzzleKind::Cube2)?;
    Ok(Verdict::new(
        c3 == [12, 156, 1884] && c2 == [6, 42, 258],
        format!("cube3 {c3:?}, cube2 {c2:?}"),
    ))
}

fn report(n: usize, name: &str, v: Result<Verdict>) -> bool {
    let v = v.unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
    println!("criterion {n:>2} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    v.pass
}

fn main() -> ExitCode {
    let space = cube2(1);
    let mut all = true;
    let table = match c1_oracle(&space) {
        Ok((v, table)) => {
            all &= report(1, "oracle exactness", Ok(v));
            table
        }
        Err(e) => {
            report(1, "oracle exactness", Err(e));
            return ExitCode::FAILURE;
        }
    };
    all &= report(2, "Bellman machinery", c2_bellman(&space, &table));
    all &= report(3, "search optimality", c3_optimality(&space, &table));
    all &= report(4, "A* / AQ* equivalence", c4_equivalence(&space, &table));
    all &= report(5, "scaling counters", c5_counters());
    all &= report(6, "gradient correctness", c6_gradients());
    all &= report(7, "tabular-update equivalence", c7_tabular(&space));
    all &= report(9, "direction checks", c9_directions(&table));
    all &= report(10, "meta-action counts", c10_action_counts());
    all &= report(8, "end-to-end learning", c8_end_to_end(&space, &table));
    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
