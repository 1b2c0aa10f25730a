//! Residuals of the compatibility system: algebraic relations among the factor
//! operators, their parallelism, and the Gauss, Codazzi and Ricci equations.
//!
//! Algebraic residuals are spectral norms of the block maps in orthonormal frames.
//! Differential and curvature residuals are Frobenius norms of the defect tensors in
//! orthonormal frames. Derivatives come from the chart's finite-difference stencils.

use alloc::format;
use alloc::vec::Vec;

use crate::dataset::{apply_by, apply_mat, Dir, GeometricDataset, OperatorQuadruple};
use crate::error::DatasetError;
use crate::linalg::{numerical_rank, spectral_norm, Mat};
use crate::orthonormal::{block_norms, OrthonormalFields};
use crate::report::{Accumulator, CompatReport, Profile, ResidualClass, Tolerances};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-8;

pub const ALGEBRAIC_KEYS: [&str; 11] = [
    "symmetry_f",
    "symmetry_t",
    "sum_f",
    "sum_t",
    "sum_s",
    "sum_h",
    "rel_1_1",
    "rel_1_2",
    "rel_1_3",
    "rel_1_4",
    "rank",
];
pub const DIFFERENTIAL_KEYS: [&str; 4] = ["nabla_f", "nabla_h", "nabla_t", "nabla_s"];
pub const CURVATURE_KEYS: [&str; 3] = ["gauss", "codazzi", "ricci"];

/// Nodes visited by every check, in a fixed order (periodic duplicates skipped).
fn nodes(ds: &GeometricDataset, margin: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    let c = &ds.chart;
    (0..c.nv).flat_map(move |iv| {
        (0..c.nu).filter_map(move |iu| {
            (!c.is_duplicate(iu, iv) && c.margin(iu, iv) >= margin).then(|| (c.node(iu, iv), iu, iv))
        })
    })
}

/// Symmetry, sums, product relations and rank of the block maps.
/// Defects of the algebraic relations for quadruples given in orthonormal frames, in the
/// order of [`ALGEBRAIC_KEYS`], and the numerical rank of each block map.
pub fn algebraic_defects(quads: &[OperatorQuadruple], dims: &[usize]) -> ([f64; 11], Vec<usize>) {
    let n = quads[0].f.nrows();
    let d = quads[0].t.nrows();
    let mut vals = [0.0f64; 11];
    let (mut sf, mut st) = (-Mat::identity(n, n), -Mat::identity(d, d));
    let (mut ss, mut sh) = (Mat::zeros(n, d), Mat::zeros(d, n));
    for q in quads {
        vals[0] = vals[0].max(spectral_norm(&(&q.f - q.f.transpose())));
        vals[1] = vals[1].max(spectral_norm(&(&q.t - q.t.transpose())));
        sf += &q.f;
        st += &q.t;
        ss += &q.s;
        sh += &q.h;
    }
    vals[2] = spectral_norm(&sf);
    vals[3] = spectral_norm(&st);
    vals[4] = spectral_norm(&ss);
    vals[5] = spectral_norm(&sh);
    for (i, a) in quads.iter().enumerate() {
        for (j, b) in quads.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            vals[6] = vals[6].max(spectral_norm(&(&a.f * &b.f + &a.s * &b.h - &a.f * delta)));
            vals[7] = vals[7].max(spectral_norm(&(&a.t * &b.t + &a.h * &b.s - &a.t * delta)));
            vals[8] = vals[8].max(spectral_norm(&(&a.f * &b.s + &a.s * &b.t - &a.s * delta)));
            vals[9] = vals[9].max(spectral_norm(&(&a.h * &b.f + &a.t * &b.h - &a.h * delta)));
        }
    }
    let mut ranks = Vec::with_capacity(quads.len());
    for (q, &dim) in quads.iter().zip(dims) {
        let r = numerical_rank(&q.block(), RANK_TOL);
        vals[10] = vals[10].max((r as f64 - dim as f64).abs());
        ranks.push(r);
    }
    (vals, ranks)
}

pub fn check_algebraic(ds: &GeometricDataset, tol: &Tolerances) -> Result<CompatReport, DatasetError> {
    let frames = crate::dataset::frame_field(&ds.g).ok_or_else(|| DatasetError::Shape {
        field: "g".into(),
        detail: "not positive definite".into(),
    })?;
    let mut acc: Vec<Accumulator> = ALGEBRAIC_KEYS
        .iter()
        .map(|_| Accumulator::new(ResidualClass::Algebraic))
        .collect();
    let m = ds.factors.len();
    let mut ranks = alloc::vec![[usize::MAX, 0usize]; m];
    let dims: Vec<usize> = ds.spec.factors().iter().map(|f| f.dim).collect();
    for (k, iu, iv) in nodes(ds, 0) {
        let (p, pinv) = &frames[k];
        let quads: Vec<OperatorQuadruple> = ds
            .factors
            .iter()
            .map(|fac| {
                let h = &fac.h[k] * p;
                OperatorQuadruple {
                    f: pinv * &fac.f[k] * p,
                    s: h.transpose(),
                    h,
                    t: fac.t[k].clone(),
                }
            })
            .collect();
        let (vals, node_ranks) = algebraic_defects(&quads, &dims);
        for (r, nr) in ranks.iter_mut().zip(node_ranks) {
            r[0] = r[0].min(nr);
            r[1] = r[1].max(nr);
        }
        for (a, v) in acc.iter_mut().zip(vals) {
            a.push(v, iu, iv);
        }
    }
    let mut report = CompatReport::new(*tol);
    for (key, a) in ALGEBRAIC_KEYS.iter().zip(&acc) {
        report.insert(*key, a.finish());
    }
    report.ranks = ranks;
    Ok(report)
}

/// Parallelism of each `πᵢ` under the connection of `TM ⊕ E` built from `∇`, `B` and `∇⊥`.
///
/// The four blocks of `∇πᵢ` are the defects of the four relations between covariant
/// derivatives of `fᵢ, hᵢ, tᵢ, sᵢ`.
pub fn check_differential(ds: &GeometricDataset, tol: &Tolerances) -> Result<CompatReport, DatasetError> {
    let of = OrthonormalFields::new(ds)?;
    check_differential_with(ds, &of, tol)
}

fn check_differential_with(
    ds: &GeometricDataset,
    of: &OrthonormalFields,
    tol: &Tolerances,
) -> Result<CompatReport, DatasetError> {
    let mut acc: Vec<Accumulator> = DIFFERENTIAL_KEYS
        .iter()
        .map(|_| Accumulator::new(ResidualClass::Differential))
        .collect();
    let per_factor: Vec<Vec<Mat>> = (0..ds.factors.len())
        .map(|i| of.pi.iter().map(|blocks| blocks[i].clone()).collect())
        .collect();
    for (k, iu, iv) in nodes(ds, 0) {
        let mut vals = [0.0f64; 4];
        for field in &per_factor {
            let norms = block_norms(&of.covariant_derivative(ds, field, k), of.n);
            for (v, x) in vals.iter_mut().zip(norms) {
                *v = v.max(x);
            }
        }
        for (a, v) in acc.iter_mut().zip(vals) {
            a.push(v, iu, iv);
        }
    }
    let mut report = CompatReport::new(*tol);
    for (key, a) in DIFFERENTIAL_KEYS.iter().zip(&acc) {
        report.insert(*key, a.finish());
    }
    Ok(report)
}

/// Intrinsic curvature `⟨R(e₁,e₂)e₂,e₁⟩` at a node from finite differences of the
/// Christoffel field. Needs a node at least two away from non-periodic boundaries for
/// second-order accuracy.
pub fn intrinsic_gauss_curvature(ds: &GeometricDataset, of: &OrthonormalFields, node: usize) -> f64 {
    let (iu, iv) = ds.chart.indices(node);
    let du_gv = apply_by(&ds.chart.d1(Dir::U, iu, iv), |k| &of.gamma[k][1]);
    let dv_gu = apply_by(&ds.chart.d1(Dir::V, iu, iv), |k| &of.gamma[k][0]);
    let [gu, gv] = &of.gamma[node];
    let r = du_gv - dv_gu + gu * gv - gv * gu;
    let g = &ds.g[node];
    (g * r)[(0, 1)] / g.determinant()
}

/// Right-hand side of the Gauss equation on `(e₁,e₂,e₂,e₁)`.
pub fn extrinsic_gauss_rhs(ds: &GeometricDataset, of: &OrthonormalFields, node: usize) -> f64 {
    let n = of.n;
    let mut k = 0.0;
    for (i, fac) in ds.spec.factors().iter().enumerate() {
        let f = of.pi[node][i].view((0, 0), (n, n)).into_owned();
        k += fac.curvature * (f[(1, 1)] * f[(0, 0)] - f[(0, 1)] * f[(1, 0)]);
    }
    let p = &of.p[node];
    let bo: Vec<Mat> = ds.b[node].iter().map(|b| p.transpose() * b * p).collect();
    for b in &bo {
        k += b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(0, 1)];
    }
    k
}

/// Gauss, Codazzi and Ricci equations.
pub fn check_curvature_equations(
    ds: &GeometricDataset,
    tol: &Tolerances,
) -> Result<CompatReport, DatasetError> {
    let of = OrthonormalFields::new(ds)?;
    check_curvature_with(ds, &of, tol)
}

fn check_curvature_with(
    ds: &GeometricDataset,
    of: &OrthonormalFields,
    tol: &Tolerances,
) -> Result<CompatReport, DatasetError> {
    let mut gauss = Accumulator::new(ResidualClass::Curvature);
    for (k, iu, iv) in nodes(ds, 2) {
        let r = (intrinsic_gauss_curvature(ds, of, k) - extrinsic_gauss_rhs(ds, of, k)).abs();
        gauss.push(r, iu, iv);
    }
    let mut codazzi = Accumulator::new(ResidualClass::Curvature);
    let mut ricci = Accumulator::new(ResidualClass::Curvature);
    for (k, iu, iv) in nodes(ds, 0) {
        codazzi.push(codazzi_defect(ds, of, k), iu, iv);
        ricci.push(ricci_defect(ds, k), iu, iv);
    }
    let mut report = CompatReport::new(*tol);
    report.insert("gauss", gauss.finish());
    report.insert("codazzi", codazzi.finish());
    report.insert("ricci", ricci.finish());
    Ok(report)
}

/// `(∇_{∂a}B)_α` in coordinates, for both chart directions.
fn covariant_b(ds: &GeometricDataset, of: &OrthonormalFields, node: usize) -> [Vec<Mat>; 2] {
    let (iu, iv) = ds.chart.indices(node);
    let d = ds.bundle_rank;
    Dir::BOTH.map(|dir| {
        let a = dir as usize;
        let st = ds.chart.d1(dir, iu, iv);
        let gam = &of.gamma[node][a];
        let w = &ds.e_connection[a][node];
        let bs = &ds.b[node];
        (0..d)
            .map(|alpha| {
                let mut db = Mat::zeros(ds.base_dim, ds.base_dim);
                for &(kk, wt) in &st {
                    db += &ds.b[kk][alpha] * wt;
                }
                let mut out = db - gam.transpose() * &bs[alpha] - &bs[alpha] * gam;
                for (beta, bb) in bs.iter().enumerate() {
                    out += bb * w[(alpha, beta)];
                }
                out
            })
            .collect()
    })
}

/// Frobenius norm of the Codazzi defect `C(e_a, e_b, e_c)_α` over all indices.
pub fn codazzi_defect(ds: &GeometricDataset, of: &OrthonormalFields, node: usize) -> f64 {
    let n = ds.base_dim;
    let d = ds.bundle_rank;
    let nb = covariant_b(ds, of, node);
    let g = &ds.g[node];
    // coordinate defect c[α][(a,b,c)]
    let gf: Vec<Mat> = ds.factors.iter().map(|fac| g * &fac.f[node]).collect();
    let mut coord = alloc::vec![0.0; d * n * n * n];
    let idx = |alpha: usize, a: usize, b: usize, c: usize| ((alpha * n + a) * n + b) * n + c;
    for alpha in 0..d {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut rhs = 0.0;
                    for (i, fac) in ds.spec.factors().iter().enumerate() {
                        let h = &ds.factors[i].h[node];
                        let gf = &gf[i];
                        rhs += fac.curvature * (gf[(c, b)] * h[(alpha, a)] - gf[(c, a)] * h[(alpha, b)]);
                    }
                    coord[idx(alpha, a, b, c)] = nb[a][alpha][(b, c)] - nb[b][alpha][(a, c)] - rhs;
                }
            }
        }
    }
    let p = &of.p[node];
    let mut total = 0.0;
    for alpha in 0..d {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut v = 0.0;
                    for x in 0..n {
                        for y in 0..n {
                            for z in 0..n {
                                v += p[(x, a)] * p[(y, b)] * p[(z, c)] * coord[idx(alpha, x, y, z)];
                            }
                        }
                    }
                    total += v * v;
                }
            }
        }
    }
    libm::sqrt(total)
}

/// Normal curvature `R⊥(∂_u, ∂_v)` from finite differences of the connection matrices.
pub fn normal_curvature(ds: &GeometricDataset, node: usize) -> Mat {
    let (iu, iv) = ds.chart.indices(node);
    let [wu, wv] = &ds.e_connection;
    apply_mat(&ds.chart.d1(Dir::U, iu, iv), wv) - apply_mat(&ds.chart.d1(Dir::V, iu, iv), wu)
        + &wu[node] * &wv[node]
        - &wv[node] * &wu[node]
}

/// Frobenius norm of the Ricci defect on `(e₁, e₂)`.
pub fn ricci_defect(ds: &GeometricDataset, node: usize) -> f64 {
    let d = ds.bundle_rank;
    let g = &ds.g[node];
    let Some(gi) = crate::linalg::spd_inverse(g) else {
        return f64::NAN;
    };
    let lhs = normal_curvature(ds, node);
    let mut rhs = Mat::zeros(d, d);
    for (i, fac) in ds.spec.factors().iter().enumerate() {
        let h = &ds.factors[i].h[node];
        for alpha in 0..d {
            for beta in 0..d {
                rhs[(alpha, beta)] +=
                    fac.curvature * (h[(beta, 1)] * h[(alpha, 0)] - h[(beta, 0)] * h[(alpha, 1)]);
            }
        }
    }
    let bs = &ds.b[node];
    for alpha in 0..d {
        for beta in 0..d {
            let m = &bs[beta] * &gi * &bs[alpha];
            rhs[(alpha, beta)] += m[(1, 0)] - m[(0, 1)];
        }
    }
    // (∂_u, ∂_v) ↦ (e₁, e₂) scales a 2-form by det P = 1/√det g.
    (lhs - rhs).norm() / libm::sqrt(g.determinant())
}

/// All three checks against a profile.
pub fn compatibility_verdict(ds: &GeometricDataset, profile: Profile) -> Result<CompatReport, DatasetError> {
    compatibility_report(ds, &profile.tolerances())
}

pub fn compatibility_report(ds: &GeometricDataset, tol: &Tolerances) -> Result<CompatReport, DatasetError> {
    let mut report = check_algebraic(ds, tol)?;
    let of = OrthonormalFields::new(ds)?;
    report.merge(check_differential_with(ds, &of, tol)?);
    report.merge(check_curvature_with(ds, &of, tol)?);
    Ok(report)
}

/// Human-readable one-line summary of the worst failing residual, if any.
pub fn describe_failure(report: &CompatReport) -> Option<alloc::string::String> {
    let worst = report
        .failing
        .iter()
        .filter_map(|k| report.residuals.get(k).map(|r| (k, r)))
        .max_by(|a, b| {
            let ta = report.tolerances.for_class(a.1.class);
            let tb = report.tolerances.for_class(b.1.class);
            (a.1.max / ta).total_cmp(&(b.1.max / tb))
        })?;
    Some(format!(
        "{} = {:e} at node ({}, {})",
        worst.0, worst.1.max, worst.1.argmax_node[0], worst.1.argmax_node[1]
    ))
}
