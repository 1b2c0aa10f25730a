//! Small dense helpers on top of nalgebra's dynamic matrices.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn sym_part(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn skew_part(m: &Mat) -> Mat {
    (m - m.transpose()) * 0.5
}

/// Largest singular value. Zero for empty matrices.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0, |a, &s| a.max(s))
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// Orthonormal tangent frame of a positive-definite metric.
///
/// With `g = L Lᵀ` (Cholesky), returns `(P, P⁻¹)` where `P = L⁻ᵀ`. Column `a` of `P`
/// holds the coordinate components of the frame vector `e_a`; `P⁻¹ = Lᵀ` maps
/// coordinate components to frame components. `e_1` is parallel to `∂_1` and the frame
/// is positively oriented.
pub fn orthonormal_frame(g: &Mat) -> Option<(Mat, Mat)> {
    let chol = g.clone().cholesky()?;
    let l = chol.l();
    let lt = l.transpose();
    let p = lt.clone().try_inverse()?;
    Some((p, lt))
}

pub fn spd_inverse(g: &Mat) -> Option<Mat> {
    g.clone().cholesky().map(|c| c.inverse())
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor polynomial.
pub fn expm(a: &Mat) -> Mat {
    let n = a.nrows();
    let norm = a.iter().fold(0.0, |s, x| s + x.abs());
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * scale;
    let mut term = Mat::identity(n, n);
    let mut sum = Mat::identity(n, n);
    for k in 1..=18 {
        term = &term * &x / (k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Numerical rank: singular values above `rel * σ_max`.
pub fn numerical_rank(m: &Mat, rel: f64) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(0.0, |a: f64, &s| a.max(s));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * smax).count()
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

/// `out += w · m`.
pub fn axpy(out: &mut Mat, w: f64, m: &Mat) {
    out.zip_apply(m, |a, b| *a += w * b);
}
