#![allow(dead_code)]

use sensit_core::control::ModulationFunction;

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre on `[a, b]` split into `pieces` equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let rule = gauss_legendre(20);
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for p in 0..pieces {
        let lo = a + h * p as f64;
        for &(x, w) in &rule {
            total += 0.5 * h * w * f(lo + 0.5 * h * (x + 1.0));
        }
    }
    total
}

/// `½ ∫∫ f(t₁) f(t₂) k(t₁, t₂)` for a kernel symmetric in its arguments and
/// smooth away from the diagonal. Each pair of constant-sign segments is a
/// smooth rectangle; diagonal blocks are folded onto the triangle `t₂ < t₁`.
pub fn half_double_integral(m: &ModulationFunction, k: impl Fn(f64, f64) -> f64, pieces: usize) -> f64 {
    let segs = m.segments();
    let mut total = 0.0;
    for (i, si) in segs.iter().enumerate() {
        for sj in &segs[..i] {
            let inner = |t1: f64| integrate(|t2| k(t1, t2), sj.start, sj.end, pieces);
            total += 2.0 * si.sign.value() * sj.sign.value() * integrate(inner, si.start, si.end, pieces);
        }
        let tri = |t1: f64| integrate(|t2| k(t1, t2), si.start, t1, pieces);
        total += 2.0 * integrate(tri, si.start, si.end, pieces);
    }
    0.5 * total
}

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Single-spin operators in the basis (↑, ↓).
pub fn iz() -> [[Complex64; 2]; 2] {
    [[c(0.5), c(0.0)], [c(0.0), c(-0.5)]]
}

pub fn ix() -> [[Complex64; 2]; 2] {
    [[c(0.0), c(0.5)], [c(0.5), c(0.0)]]
}

pub fn iy() -> [[Complex64; 2]; 2] {
    [[c(0.0), Complex64::new(0.0, -0.5)], [Complex64::new(0.0, 0.5), c(0.0)]]
}

/// Operator `o` acting on spin `i` of `n`, where bit `i` of a basis label is
/// set when that spin is down.
pub fn embed(o: [[Complex64; 2]; 2], i: usize, n: usize) -> CMat {
    let dim = 1 << n;
    CMat::from_fn(dim, dim, |a, b| {
        if (a ^ b) & !(1 << i) != 0 {
            c(0.0)
        } else {
            o[a >> i & 1][b >> i & 1]
        }
    })
}

pub fn dense_b(d: &[f64]) -> CMat {
    let n = d.len();
    let mut out = CMat::zeros(1 << n, 1 << n);
    for (i, di) in d.iter().enumerate() {
        out += embed(iz(), i, n) * c(*di);
    }
    out
}

pub fn dense_h(dij: &DMatrix<f64>) -> CMat {
    let n = dij.nrows();
    let mut out = CMat::zeros(1 << n, 1 << n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let zz = embed(iz(), i, n) * embed(iz(), j, n) * c(2.0);
            let xx = embed(ix(), i, n) * embed(ix(), j, n);
            let yy = embed(iy(), i, n) * embed(iy(), j, n);
            out += (zz - xx - yy) * c(dij[(i, j)]);
        }
    }
    out
}

/// `e^{−iHt}` for Hermitian `H`.
pub fn expm_i(h: &CMat, t: f64) -> CMat {
    let e = SymmetricEigen::new(h.clone());
    let mut scaled = e.eigenvectors.clone();
    for (k, l) in e.eigenvalues.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -l * t);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= ph);
    }
    scaled * e.eigenvectors.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn tr(m: &CMat) -> Complex64 {
    m.trace()
}

/// All set partitions of `{0, …, n−1}` as lists of bitmask blocks.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..cur.len() {
            cur[k] |= 1 << i;
            go(i + 1, n, cur, out);
            cur[k] &= !(1 << i);
        }
        cur.push(1 << i);
        go(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
