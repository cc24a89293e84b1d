use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Sub};

/// Floating-point element type of a network.
///
/// Parameters live in `f32`; the `f64` instantiation exists so gradient
/// checks can run the same code with enough precision for finite differences.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + 'static
{
    const ZERO: Self;
    const ONE: Self;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;

    /// `c = alpha * a * b + beta * c` on strided views.
    ///
    /// # Safety
    /// Strides and dimensions must describe in-bounds views of the pointers.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// `x · wᵀ + b` for `x: n×in`, `w: out×in` (row-major), `b: out`.
pub(crate) fn affine<T: Scalar>(x: &Matrix<T>, w: &[T], b: &[T], out_dim: usize) -> Matrix<T> {
    let n = x.rows;
    let in_dim = x.cols;
    assert_eq!(w.len(), out_dim * in_dim);
    let mut y = Matrix::zeros(n, out_dim);
    for r in 0..n {
        y.row_mut(r).copy_from_slice(b);
    }
    if n == 0 {
        return y;
    }
    unsafe {
        T::gemm(
            n,
            in_dim,
            out_dim,
            T::ONE,
            x.data.as_ptr(),
            in_dim as isize,
            1,
            w.as_ptr(),
            1,
            in_dim as isize,
            T::ONE,
            y.data.as_mut_ptr(),
            out_dim as isize,
            1,
        );
    }
    y
}

/// Accumulates `dyᵀ · x` into `dw` (out×in).
pub(crate) fn accumulate_weight_grad<T: Scalar>(dy: &Matrix<T>, x: &Matrix<T>, dw: &mut [T]) {
    let (n, out_dim, in_dim) = (dy.rows, dy.cols, x.cols);
    assert_eq!(dw.len(), out_dim * in_dim);
    if n == 0 {
        return;
    }
    unsafe {
        T::gemm(
            out_dim,
            n,
            in_dim,
            T::ONE,
            dy.data.as_ptr(),
            1,
            out_dim as isize,
            x.data.as_ptr(),
            in_dim as isize,
            1,
            T::ONE,
            dw.as_mut_ptr(),
            in_dim as isize,
            1,
        );
    }
}

/// `dy · w` for `dy: n×out`, `w: out×in`.
pub(crate) fn input_grad<T: Scalar>(dy: &Matrix<T>, w: &[T], in_dim: usize) -> Matrix<T> {
    let (n, out_dim) = (dy.rows, dy.cols);
    let mut dx = Matrix::zeros(n, in_dim);
    if n == 0 {
        return dx;
    }
    unsafe {
        T::gemm(
            n,
            out_dim,
            in_dim,
            T::ONE,
            dy.data.as_ptr(),
            out_dim as isize,
            1,
            w.as_ptr(),
            in_dim as isize,
            1,
            T::ZERO,
            dx.data.as_mut_ptr(),
            in_dim as isize,
            1,
        );
    }
    dx
}
