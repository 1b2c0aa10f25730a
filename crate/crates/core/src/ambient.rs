//! The target multiproduct `M₁ × ⋯ × M_m` of space forms and its pseudo-Euclidean model.
//!
//! A factor of curvature `c > 0` is the sphere `|x|² = 1/c` in `ℝ^{n+1}`, `c < 0` the
//! upper sheet of `⟨x,x⟩ = 1/c` in Minkowski space with the first axis timelike, and
//! `c = 0` is `ℝ^n` itself.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::AmbientError;
use crate::linalg::{expm, Mat, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormFactor {
    pub dim: usize,
    pub curvature: f64,
}

impl SpaceFormFactor {
    pub fn new(dim: usize, curvature: f64) -> Self {
        Self { dim, curvature }
    }

    pub fn is_curved(&self) -> bool {
        self.curvature != 0.0
    }

    /// Coordinates used by the model space: `n + 1` for curved factors, `n` otherwise.
    pub fn ambient_dim(&self) -> usize {
        if self.is_curved() {
            self.dim + 1
        } else {
            self.dim
        }
    }

    /// Diagonal of the quadratic form of the model space.
    pub fn signature(&self) -> Vector {
        let mut s = Vector::from_element(self.ambient_dim(), 1.0);
        if self.curvature < 0.0 {
            s[0] = -1.0;
        }
        s
    }

    pub fn inner(&self, x: &Vector, y: &Vector) -> f64 {
        let s = self.signature();
        (0..x.len()).map(|k| s[k] * x[k] * y[k]).sum()
    }

    /// Geodesic distance between two model points.
    ///
    /// Uses the chord forms `2r·asin(|x−y|/2r)` and `2r·asinh(√⟨x−y,x−y⟩/2r)`, which
    /// stay accurate for nearby points.
    pub fn geodesic_distance(&self, x: &Vector, y: &Vector) -> f64 {
        let diff = x - y;
        let c = self.curvature;
        if c == 0.0 {
            return diff.norm();
        }
        let r = 1.0 / libm::sqrt(c.abs());
        let q = self.inner(&diff, &diff).max(0.0);
        let half = libm::sqrt(q) / (2.0 * r);
        if c > 0.0 {
            2.0 * r * libm::asin(half.min(1.0))
        } else {
            2.0 * r * libm::asinh(half)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiproductSpec {
    factors: Vec<SpaceFormFactor>,
}

impl MultiproductSpec {
    pub fn new(factors: Vec<SpaceFormFactor>) -> Result<Self, AmbientError> {
        if factors.is_empty() {
            return Err(AmbientError::InvalidFactor {
                index: 0,
                reason: "a multiproduct needs at least one factor".into(),
            });
        }
        let last = factors.len() - 1;
        for (index, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(AmbientError::InvalidFactor {
                    index,
                    reason: "dimension must be at least 1".into(),
                });
            }
            if !f.curvature.is_finite() {
                return Err(AmbientError::InvalidFactor {
                    index,
                    reason: "curvature must be finite".into(),
                });
            }
            if f.curvature == 0.0 && index != last {
                return Err(AmbientError::InvalidFactor {
                    index,
                    reason: format!("only the last factor may be flat (factor {index} has c = 0)"),
                });
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[SpaceFormFactor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn ambient_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.ambient_dim()).collect()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dims().iter().sum()
    }

    /// `Σ nᵢ`, the dimension of the product manifold.
    pub fn manifold_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).sum()
    }

    pub fn signature(&self) -> Vector {
        let mut out = Vec::with_capacity(self.ambient_dim());
        for f in &self.factors {
            out.extend(f.signature().iter().copied());
        }
        Vector::from_vec(out)
    }

    pub fn is_s2_x_s2(&self) -> bool {
        self.factors.len() == 2
            && self
                .factors
                .iter()
                .all(|f| f.dim == 2 && f.curvature == 1.0)
    }
}

/// Per-factor coordinate blocks of a point or vector of `𝔼₁ × ⋯ × 𝔼_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    pub blocks: Vec<Vector>,
}

pub type AmbientPoint = BlockVector;
pub type AmbientVector = BlockVector;

impl BlockVector {
    pub fn zeros(spec: &MultiproductSpec) -> Self {
        Self {
            blocks: spec.ambient_dims().into_iter().map(Vector::zeros).collect(),
        }
    }

    /// Splits a flat row (factor order) into blocks.
    pub fn from_flat(spec: &MultiproductSpec, flat: &[f64]) -> Result<Self, AmbientError> {
        let dims = spec.ambient_dims();
        let total: usize = dims.iter().sum();
        if flat.len() != total {
            return Err(AmbientError::DimensionMismatch {
                factor: 0,
                expected: total,
                found: flat.len(),
            });
        }
        let mut blocks = Vec::with_capacity(dims.len());
        let mut offset = 0;
        for d in dims {
            blocks.push(Vector::from_column_slice(&flat[offset..offset + d]));
            offset += d;
        }
        Ok(Self { blocks })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.iter().copied()).collect()
    }

    pub fn check(&self, spec: &MultiproductSpec) -> Result<(), AmbientError> {
        if self.blocks.len() != spec.len() {
            return Err(AmbientError::BlockCount {
                expected: spec.len(),
                found: self.blocks.len(),
            });
        }
        for (factor, (b, f)) in self.blocks.iter().zip(spec.factors()).enumerate() {
            if b.len() != f.ambient_dim() {
                return Err(AmbientError::DimensionMismatch {
                    factor,
                    expected: f.ambient_dim(),
                    found: b.len(),
                });
            }
        }
        Ok(())
    }

    /// Pseudo-Euclidean inner product of the product model.
    pub fn inner(&self, other: &Self, spec: &MultiproductSpec) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .zip(spec.factors())
            .map(|((a, b), f)| f.inner(a, b))
            .sum()
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.axpy(s, b, 1.0);
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b * s).collect(),
        }
    }

    /// Restriction to factor `i` (other blocks zeroed).
    pub fn project(&self, i: usize) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| if k == i { b.clone() } else { Vector::zeros(b.len()) })
                .collect(),
        }
    }

    pub fn euclidean_norm(&self) -> f64 {
        libm::sqrt(self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>())
    }
}

/// `|⟨xⁱ,xⁱ⟩ᵢ − 1/cᵢ|` per curved factor, `0` for a flat factor.
pub fn factor_constraint_residual(
    p: &AmbientPoint,
    spec: &MultiproductSpec,
) -> Result<Vec<f64>, AmbientError> {
    p.check(spec)?;
    Ok(p
        .blocks
        .iter()
        .zip(spec.factors())
        .map(|(x, f)| {
            if f.is_curved() {
                (f.inner(x, x) - 1.0 / f.curvature).abs()
            } else {
                0.0
            }
        })
        .collect())
}

/// `R̃(X,Y)Z = Σᵢ cᵢ[⟨πᵢY,πᵢZ⟩πᵢX − ⟨πᵢX,πᵢZ⟩πᵢY]`.
pub fn ambient_curvature(
    spec: &MultiproductSpec,
    x: &AmbientVector,
    y: &AmbientVector,
    z: &AmbientVector,
) -> Result<AmbientVector, AmbientError> {
    x.check(spec)?;
    y.check(spec)?;
    z.check(spec)?;
    let blocks = spec
        .factors()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let (xi, yi, zi) = (&x.blocks[i], &y.blocks[i], &z.blocks[i]);
            let c = f.curvature;
            (xi * f.inner(yi, zi) - yi * f.inner(xi, zi)) * c
        })
        .collect();
    Ok(BlockVector { blocks })
}

/// One factor's part of an ambient isometry: `x ↦ linear·x + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMap {
    pub linear: Mat,
    pub translation: Vector,
}

impl FactorMap {
    pub fn identity(dim: usize) -> Self {
        Self {
            linear: Mat::identity(dim, dim),
            translation: Vector::zeros(dim),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.translation
    }

    /// `max |Mᵀ η M − η|` for the factor's quadratic form `η`.
    pub fn form_error(&self, factor: &SpaceFormFactor) -> f64 {
        let eta = Mat::from_diagonal(&factor.signature());
        let d = self.linear.transpose() * &eta * &self.linear - eta;
        d.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsometryAlignment {
    pub blocks: Vec<FactorMap>,
    /// Sup over points of the per-factor geodesic distances summed in quadrature.
    pub residual: f64,
}

impl IsometryAlignment {
    pub fn apply(&self, p: &AmbientPoint) -> AmbientPoint {
        BlockVector {
            blocks: self
                .blocks
                .iter()
                .zip(&p.blocks)
                .map(|(m, x)| m.apply(x))
                .collect(),
        }
    }

    /// Applies only the linear parts (for tangent vectors).
    pub fn apply_linear(&self, v: &AmbientVector) -> AmbientVector {
        BlockVector {
            blocks: self
                .blocks
                .iter()
                .zip(&v.blocks)
                .map(|(m, x)| &m.linear * x)
                .collect(),
        }
    }

    pub fn form_error(&self, spec: &MultiproductSpec) -> f64 {
        self.blocks
            .iter()
            .zip(spec.factors())
            .fold(0.0, |a, (m, f)| a.max(m.form_error(f)))
    }
}

/// Sup over paired points of the quadrature sum of per-factor geodesic distances.
pub fn sup_geodesic_distance(
    spec: &MultiproductSpec,
    a: &[AmbientPoint],
    b: &[AmbientPoint],
) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (p, q)| {
        let s: f64 = spec
            .factors()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let d = f.geodesic_distance(&p.blocks[i], &q.blocks[i]);
                d * d
            })
            .sum();
        acc.max(libm::sqrt(s))
    })
}

/// Least-squares isometry `α` of the product with `α(a[k]) ≈ b[k]`.
///
/// Sphere blocks use orthogonal Procrustes, flat blocks rigid registration (both allow
/// reflections), hyperbolic blocks a Lorentz Procrustes: unconstrained least squares,
/// projection to `O(1,n)` by the group polar iteration, then Gauss–Newton refinement on
/// the group.
pub fn align_isometry(
    a: &[AmbientPoint],
    b: &[AmbientPoint],
    spec: &MultiproductSpec,
) -> Result<IsometryAlignment, AmbientError> {
    if a.len() != b.len() {
        return Err(AmbientError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(AmbientError::EmptyCloud);
    }
    for p in a.iter().chain(b) {
        p.check(spec)?;
        for (factor, blk) in p.blocks.iter().enumerate() {
            if blk.iter().any(|x| !x.is_finite()) {
                return Err(AmbientError::NonFinite { factor });
            }
        }
    }
    let mut blocks = Vec::with_capacity(spec.len());
    for (i, f) in spec.factors().iter().enumerate() {
        let xs: Vec<&Vector> = a.iter().map(|p| &p.blocks[i]).collect();
        let ys: Vec<&Vector> = b.iter().map(|p| &p.blocks[i]).collect();
        let map = if f.curvature > 0.0 {
            orthogonal_procrustes(i, &xs, &ys, false)?
        } else if f.curvature == 0.0 {
            orthogonal_procrustes(i, &xs, &ys, true)?
        } else {
            lorentz_procrustes(i, &xs, &ys)?
        };
        blocks.push(map);
    }
    let mut out = IsometryAlignment {
        blocks,
        residual: 0.0,
    };
    let moved: Vec<AmbientPoint> = a.iter().map(|p| out.apply(p)).collect();
    out.residual = sup_geodesic_distance(spec, &moved, b);
    Ok(out)
}

fn centroid(xs: &[&Vector]) -> Vector {
    let mut c = Vector::zeros(xs[0].len());
    for x in xs {
        c += *x;
    }
    c / xs.len() as f64
}

fn orthogonal_procrustes(
    factor: usize,
    xs: &[&Vector],
    ys: &[&Vector],
    with_translation: bool,
) -> Result<FactorMap, AmbientError> {
    let dim = xs[0].len();
    let (cx, cy) = if with_translation {
        (centroid(xs), centroid(ys))
    } else {
        (Vector::zeros(dim), Vector::zeros(dim))
    };
    let mut cov = Mat::zeros(dim, dim);
    for (x, y) in xs.iter().zip(ys) {
        cov += (*y - &cy) * (*x - &cx).transpose();
    }
    let scale = cov.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if scale == 0.0 {
        if with_translation {
            // Every point coincides with its centroid; the translation alone aligns.
            return Ok(FactorMap {
                linear: Mat::identity(dim, dim),
                translation: cy - cx,
            });
        }
        return Err(AmbientError::Degenerate { factor });
    }
    let svd = SVD::new(cov, true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let q = u * vt;
    let t = &cy - &q * &cx;
    Ok(FactorMap {
        linear: q,
        translation: t,
    })
}

fn sheet_sign(factor: usize, xs: &[&Vector]) -> Result<f64, AmbientError> {
    let pos = xs.iter().filter(|x| x[0] > 0.0).count();
    if pos == xs.len() {
        Ok(1.0)
    } else if pos == 0 {
        Ok(-1.0)
    } else {
        Err(AmbientError::MixedSheets { factor })
    }
}

/// `X⁻♯ = η X⁻ᵀ η`; the fixed points of `X ↦ ½(X + X⁻♯)` are the `η`-isometries.
fn lorentz_polar(m: &Mat, eta: &Mat) -> Option<Mat> {
    let mut x = m.clone();
    for _ in 0..100 {
        let inv_t = x.transpose().try_inverse()?;
        let next = (&x + eta * inv_t * eta) * 0.5;
        let delta = (&next - &x).amax();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn lorentz_cost(x: &Mat, xs: &[&Vector], ys: &[&Vector]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(a, b)| (x * *a - *b).norm_squared())
        .sum()
}

fn lorentz_procrustes(
    factor: usize,
    xs: &[&Vector],
    ys: &[&Vector],
) -> Result<FactorMap, AmbientError> {
    let sa = sheet_sign(factor, xs)?;
    let sb = sheet_sign(factor, ys)?;
    if sa != sb {
        return Err(AmbientError::MixedSheets { factor });
    }
    let dim = xs[0].len();
    let mut eta = Mat::identity(dim, dim);
    eta[(0, 0)] = -1.0;

    let mut cov = Mat::zeros(dim, dim);
    let mut gram = Mat::zeros(dim, dim);
    for (x, y) in xs.iter().zip(ys) {
        cov += *y * x.transpose();
        gram += *x * x.transpose();
    }
    if cov.amax() == 0.0 {
        return Err(AmbientError::Degenerate { factor });
    }
    let unconstrained = gram
        .clone()
        .pseudo_inverse(1e-12 * gram.amax())
        .ok()
        .map(|gi| &cov * gi);
    let mut x = unconstrained
        .and_then(|m| lorentz_polar(&m, &eta))
        .filter(|x| x[(0, 0)] > 0.0)
        .unwrap_or_else(|| Mat::identity(dim, dim));

    // Gauss–Newton on X·exp(ηW), W skew.
    let pairs: Vec<(usize, usize)> = (0..dim)
        .flat_map(|p| (p + 1..dim).map(move |q| (p, q)))
        .collect();
    let mut cost = lorentz_cost(&x, xs, ys);
    for _ in 0..50 {
        let rows = xs.len() * dim;
        let mut jac = Mat::zeros(rows, pairs.len());
        let mut res = Vector::zeros(rows);
        for (k, (a, b)) in xs.iter().zip(ys).enumerate() {
            let r = &x * *a - *b;
            res.rows_mut(k * dim, dim).copy_from(&r);
            for (col, &(p, q)) in pairs.iter().enumerate() {
                let mut gen = Mat::zeros(dim, dim);
                gen[(p, q)] = 1.0;
                gen[(q, p)] = -1.0;
                let d = &x * (&eta * gen) * *a;
                jac.view_mut((k * dim, col), (dim, 1)).copy_from(&d);
            }
        }
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let rhs = -(&jt * &res);
        let Ok(pinv) = normal.clone().pseudo_inverse(1e-14 * normal.amax().max(1e-300)) else {
            break;
        };
        let step = pinv * rhs;
        if step.amax() < 1e-15 {
            break;
        }
        let mut w = Mat::zeros(dim, dim);
        for (col, &(p, q)) in pairs.iter().enumerate() {
            w[(p, q)] = step[col];
            w[(q, p)] = -step[col];
        }
        let candidate = &x * expm(&(&eta * w));
        let candidate = lorentz_polar(&candidate, &eta).unwrap_or(candidate);
        let new_cost = lorentz_cost(&candidate, xs, ys);
        if new_cost > cost {
            break;
        }
        let improvement = cost - new_cost;
        x = candidate;
        cost = new_cost;
        if improvement <= 1e-30 {
            break;
        }
    }
    Ok(FactorMap {
        linear: x,
        translation: Vector::zeros(dim),
    })
}

/// Lorentz boost mixing the timelike axis with spatial axis `axis` by rapidity `t`.
pub fn lorentz_boost(dim: usize, axis: usize, t: f64) -> Mat {
    let mut m = Mat::identity(dim, dim);
    let (ch, sh) = (libm::cosh(t), libm::sinh(t));
    m[(0, 0)] = ch;
    m[(axis, axis)] = ch;
    m[(0, axis)] = sh;
    m[(axis, 0)] = sh;
    m
}

/// Rotation by `angle` in the coordinate plane `(p, q)`.
pub fn plane_rotation(dim: usize, p: usize, q: usize, angle: f64) -> Mat {
    let mut m = Mat::identity(dim, dim);
    let (c, s) = (libm::cos(angle), libm::sin(angle));
    m[(p, p)] = c;
    m[(q, q)] = c;
    m[(p, q)] = -s;
    m[(q, p)] = s;
    m
}
