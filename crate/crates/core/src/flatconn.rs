//! The augmented bundle `F = TM ⊕ E ⊕ (⊕ᵢ Eᵢ)`, its connection `D`, and transport of
//! `D`-parallel frames over the chart.
//!
//! Sections are written in the frame `(e₁…e_n, ν₁…ν_d, ε_i)` where `e` is the Cholesky
//! orthonormal tangent frame, `ν` the given frame of `E`, and `ε_i = √|cᵢ| ξᵢ` for each
//! curved factor. A flat last factor contributes no line. The metric in this frame is
//! `η = diag(1,…,1, sign cᵢ,…)` and `D_{∂_a} σ = ∂_a σ + Ω_a σ`.

use alloc::vec::Vec;

use nalgebra::SymmetricEigen;

use crate::dataset::{apply_by, Dir, GeometricDataset};
use crate::error::{DatasetError, FrameError};
use crate::linalg::{spectral_norm, Mat, Vector};
use crate::orthonormal::OrthonormalFields;
use crate::report::{Accumulator, ResidualClass, ResidualField};

/// Layout of the frame of `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalBundle {
    pub n: usize,
    pub d: usize,
    /// Factor index of each `ε` line, in order.
    pub curved: Vec<usize>,
    /// `η`, the frame Gram matrix diagonal.
    pub eta: Vector,
    /// Column range of each factor's sections in a [`ParallelFrame`].
    pub groups: Vec<core::ops::Range<usize>>,
}

impl TotalBundle {
    pub fn new(ds: &GeometricDataset) -> Self {
        let (n, d) = (ds.base_dim, ds.bundle_rank);
        let curved: Vec<usize> = ds
            .spec
            .factors()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_curved())
            .map(|(i, _)| i)
            .collect();
        let mut eta = Vector::from_element(n + d + curved.len(), 1.0);
        for (k, &i) in curved.iter().enumerate() {
            eta[n + d + k] = ds.spec.factors()[i].curvature.signum();
        }
        let mut groups = Vec::new();
        let mut start = 0;
        for f in ds.spec.factors() {
            let width = f.dim + usize::from(f.is_curved());
            groups.push(start..start + width);
            start += width;
        }
        Self {
            n,
            d,
            curved,
            eta,
            groups,
        }
    }

    pub fn rank(&self) -> usize {
        self.eta.len()
    }

    /// Frame index of `ε_i`, if factor `i` is curved.
    pub fn epsilon(&self, factor: usize) -> Option<usize> {
        self.curved
            .iter()
            .position(|&i| i == factor)
            .map(|k| self.n + self.d + k)
    }

    pub fn eta_matrix(&self) -> Mat {
        Mat::from_diagonal(&self.eta)
    }
}

/// Connection coefficients `Ω_u`, `Ω_v` at every node.
#[derive(Debug, Clone)]
pub struct ConnectionField {
    pub bundle: TotalBundle,
    pub omega: [Vec<Mat>; 2],
    /// `πᵢ` extended to `F` (identity on `εᵢ`, zero on other `ε`), per node and factor.
    pub projections: Vec<Vec<Mat>>,
}

/// `Ω` along chart direction `a` at `node`.
pub fn d_coefficients_with(
    ds: &GeometricDataset,
    of: &OrthonormalFields,
    bundle: &TotalBundle,
    node: usize,
    a: usize,
) -> Mat {
    let (n, d) = (bundle.n, bundle.d);
    let nf = bundle.rank();
    let mut om = Mat::zeros(nf, nf);
    om.view_mut((0, 0), (n + d, n + d))
        .copy_from(&of.block_connection(ds, node, a));
    let p = &of.p[node];
    let pinv = &of.pinv[node];
    let g = &ds.g[node];
    for (k, &i) in bundle.curved.iter().enumerate() {
        let c = ds.spec.factors()[i].curvature;
        let root = libm::sqrt(c.abs());
        let sg = c.signum();
        let e = n + d + k;
        let f = &ds.factors[i].f[node];
        let h = &ds.factors[i].h[node];
        // g(fᵢ∂_a, e_b) and the frame components of fᵢ∂_a.
        let gf = f.transpose() * g * p;
        let fa = pinv * f;
        for b in 0..n {
            om[(e, b)] = -sg * root * gf[(a, b)];
            om[(b, e)] = root * fa[(b, a)];
        }
        for beta in 0..d {
            om[(e, n + beta)] = -sg * root * h[(beta, a)];
            om[(n + beta, e)] = root * h[(beta, a)];
        }
    }
    om
}

/// `Ω` along `dir` at `node`.
pub fn d_coefficients(ds: &GeometricDataset, node: usize, dir: Dir) -> Result<Mat, DatasetError> {
    let of = OrthonormalFields::new(ds)?;
    Ok(d_coefficients_with(ds, &of, &TotalBundle::new(ds), node, dir as usize))
}

impl ConnectionField {
    pub fn new(ds: &GeometricDataset) -> Result<Self, DatasetError> {
        let of = OrthonormalFields::new(ds)?;
        Ok(Self::from_fields(ds, &of))
    }

    pub fn from_fields(ds: &GeometricDataset, of: &OrthonormalFields) -> Self {
        let bundle = TotalBundle::new(ds);
        let nodes = ds.num_nodes();
        let omega = [0, 1].map(|a| {
            (0..nodes)
                .map(|k| d_coefficients_with(ds, of, &bundle, k, a))
                .collect::<Vec<_>>()
        });
        let nf = bundle.rank();
        let nd = bundle.n + bundle.d;
        let projections = (0..nodes)
            .map(|k| {
                (0..ds.factors.len())
                    .map(|i| {
                        let mut m = Mat::zeros(nf, nf);
                        m.view_mut((0, 0), (nd, nd)).copy_from(&of.pi[k][i]);
                        if let Some(e) = bundle.epsilon(i) {
                            m[(e, e)] = 1.0;
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        Self {
            bundle,
            omega,
            projections,
        }
    }

    /// `‖𝓡ᴰ(e₁,e₂)‖` (spectral norm) at a node, with `𝓡ᴰ(∂_u,∂_v) = ∂_uΩ_v − ∂_vΩ_u + [Ω_u,Ω_v]`.
    pub fn curvature_at(&self, ds: &GeometricDataset, node: usize) -> f64 {
        let (iu, iv) = ds.chart.indices(node);
        let [ou, ov] = &self.omega;
        let r = apply_by(&ds.chart.d1(Dir::U, iu, iv), |k| &ov[k])
            - apply_by(&ds.chart.d1(Dir::V, iu, iv), |k| &ou[k])
            + &ou[node] * &ov[node]
            - &ov[node] * &ou[node];
        spectral_norm(&r) / libm::sqrt(ds.g[node].determinant())
    }

    /// Max/mean of the curvature over nodes at least two away from non-periodic edges.
    pub fn curvature_field(&self, ds: &GeometricDataset) -> ResidualField {
        let c = &ds.chart;
        let mut acc = Accumulator::new(ResidualClass::Curvature);
        for iv in 0..c.nv {
            for iu in 0..c.nu {
                if c.is_duplicate(iu, iv) || c.margin(iu, iv) < 2 {
                    continue;
                }
                acc.push(self.curvature_at(ds, c.node(iu, iv)), iu, iv);
            }
        }
        acc.finish()
    }
}

/// Curvature of `D` at a node (see [`ConnectionField::curvature_at`]).
pub fn curvature_residual(ds: &GeometricDataset, node: usize) -> Result<f64, DatasetError> {
    Ok(ConnectionField::new(ds)?.curvature_at(ds, node))
}

/// One classical Runge–Kutta step of `σ' = −sΩ(t)σ` over length `h`, with `Ω` linear
/// between the endpoint values.
fn rk4_step(sigma: &Mat, o0: &Mat, o1: &Mat, h: f64, sign: f64) -> Mat {
    let a0 = o0 * (-sign);
    let a1 = o1 * (-sign);
    let am = (&a0 + &a1) * 0.5;
    let k1 = &a0 * sigma;
    let k2 = &am * (sigma + &k1 * (0.5 * h));
    let k3 = &am * (sigma + &k2 * (0.5 * h));
    let k4 = &a1 * (sigma + &k3 * h);
    sigma + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn step_between(ds: &GeometricDataset, omega: &[Vec<Mat>; 2], sigma: &Mat, from: usize, to: usize) -> Mat {
    let c = &ds.chart;
    let (u0, v0) = c.indices(from);
    let (u1, v1) = c.indices(to);
    let (dir, sign) = if v0 == v1 && u1 == u0 + 1 {
        (Dir::U, 1.0)
    } else if v0 == v1 && u0 == u1 + 1 {
        (Dir::U, -1.0)
    } else if u0 == u1 && v1 == v0 + 1 {
        (Dir::V, 1.0)
    } else if u0 == u1 && v0 == v1 + 1 {
        (Dir::V, -1.0)
    } else {
        panic!("transport path nodes {from} and {to} are not adjacent");
    };
    let a = dir as usize;
    rk4_step(sigma, &omega[a][from], &omega[a][to], c.spacing(dir), sign)
}

/// Transports `σ₀` (one or more columns) along a path of adjacent grid nodes.
///
/// # Panics
/// If consecutive path nodes are not grid neighbours.
pub fn parallel_transport(ds: &GeometricDataset, omega: &[Vec<Mat>; 2], path: &[usize], sigma0: &Mat) -> Mat {
    let mut s = sigma0.clone();
    for w in path.windows(2) {
        s = step_between(ds, omega, &s, w[0], w[1]);
    }
    s
}

/// `D`-parallel frame over the chart.
#[derive(Debug, Clone)]
pub struct ParallelFrame {
    pub bundle: TotalBundle,
    pub base_node: usize,
    /// Initial basis at the base node; columns grouped by factor.
    pub seed: Mat,
    /// Frame at every node.
    pub sigma: Vec<Mat>,
    /// Max entrywise difference against the transposed sweep.
    pub sweep_discrepancy: f64,
    /// Max entrywise mismatch across each periodic seam (`None` if not periodic).
    pub deck_mismatch: [Option<f64>; 2],
    /// Max entrywise deviation of `σᵀησ` from its value at the base node.
    pub gram_drift: f64,
    /// Max over factors and nodes of `|πᵢσᵢ − σᵢ|`.
    pub eigen_drift: f64,
}

/// Orthonormal basis of each factor's eigenbundle at `node`; the first column of a curved
/// factor is `±εᵢ`, signed so that hyperbolic factors land on the upper sheet.
pub fn default_seed(ds: &GeometricDataset, field: &ConnectionField, node: usize) -> Result<Mat, FrameError> {
    let bundle = &field.bundle;
    let nf = bundle.rank();
    let nd = bundle.n + bundle.d;
    let mut seed = Mat::zeros(nf, nf);
    for (i, fac) in ds.spec.factors().iter().enumerate() {
        let group = bundle.groups[i].clone();
        let mut col = group.start;
        let pi = field.projections[node][i].view((0, 0), (nd, nd)).into_owned();
        let eig = SymmetricEigen::new(pi);
        let mut picked: Vec<usize> = (0..nd).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
        picked.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let expected = fac.dim + usize::from(fac.is_curved());
        let found = picked.len() + usize::from(fac.is_curved());
        if found != expected {
            return Err(FrameError::Rank {
                factor: i,
                expected,
                found,
            });
        }
        if let Some(e) = bundle.epsilon(i) {
            seed[(e, col)] = if fac.curvature > 0.0 { 1.0 } else { -1.0 };
            col += 1;
        }
        for k in picked {
            let v = eig.eigenvectors.column(k);
            // Fix the sign by the first sizeable entry for reproducibility.
            let lead = v.iter().find(|x| x.abs() > 1e-8).copied().unwrap_or(1.0);
            let s = if lead < 0.0 { -1.0 } else { 1.0 };
            for r in 0..nd {
                seed[(r, col)] = s * v[r];
            }
            col += 1;
        }
        debug_assert_eq!(col, group.end);
    }
    Ok(seed)
}

fn sweep(ds: &GeometricDataset, omega: &[Vec<Mat>; 2], base: usize, seed: &Mat, rows_first: bool) -> Vec<Mat> {
    let c = &ds.chart;
    let (bu, bv) = c.indices(base);
    let mut out: Vec<Option<Mat>> = alloc::vec![None; c.num_nodes()];
    out[base] = Some(seed.clone());
    let line = |out: &mut Vec<Option<Mat>>, fixed: usize, start: usize, along_u: bool| {
        let len = if along_u { c.nu } else { c.nv };
        let idx = |k: usize| if along_u { c.node(k, fixed) } else { c.node(fixed, k) };
        for k in start + 1..len {
            let s = step_between(ds, omega, out[idx(k - 1)].as_ref().unwrap(), idx(k - 1), idx(k));
            out[idx(k)] = Some(s);
        }
        for k in (0..start).rev() {
            let s = step_between(ds, omega, out[idx(k + 1)].as_ref().unwrap(), idx(k + 1), idx(k));
            out[idx(k)] = Some(s);
        }
    };
    if rows_first {
        line(&mut out, bv, bu, true);
        for iu in 0..c.nu {
            line(&mut out, iu, bv, false);
        }
    } else {
        line(&mut out, bu, bv, false);
        for iv in 0..c.nv {
            line(&mut out, iv, bu, true);
        }
    }
    out.into_iter().map(|m| m.expect("every node visited")).collect()
}

/// Builds the frame with the default seed at `base_node`.
pub fn build_parallel_frame(ds: &GeometricDataset, base_node: usize) -> Result<ParallelFrame, FrameError> {
    let field = ConnectionField::new(ds)?;
    build_parallel_frame_from(ds, &field, base_node, None)
}

/// Builds the frame from a precomputed connection, optionally with an explicit seed.
pub fn build_parallel_frame_from(
    ds: &GeometricDataset,
    field: &ConnectionField,
    base_node: usize,
    seed: Option<Mat>,
) -> Result<ParallelFrame, FrameError> {
    if base_node >= ds.num_nodes() {
        return Err(FrameError::BaseNode(base_node));
    }
    let nf = field.bundle.rank();
    let seed = match seed {
        Some(s) => {
            if s.shape() != (nf, nf) {
                return Err(FrameError::SeedShape {
                    rows: s.nrows(),
                    cols: s.ncols(),
                    expected: nf,
                });
            }
            s
        }
        None => default_seed(ds, field, base_node)?,
    };
    let sigma = sweep(ds, &field.omega, base_node, &seed, true);
    let audit = sweep(ds, &field.omega, base_node, &seed, false);
    let sweep_discrepancy = sigma
        .iter()
        .zip(&audit)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).amax()));
    let c = &ds.chart;
    let seam = |periodic: bool, pairs: &mut dyn Iterator<Item = (usize, usize)>| {
        periodic.then(|| pairs.fold(0.0, |m: f64, (a, b)| m.max((&sigma[a] - &sigma[b]).amax())))
    };
    let deck_mismatch = [
        seam(c.periodic_u, &mut (0..c.nv).map(|iv| (c.node(0, iv), c.node(c.nu - 1, iv)))),
        seam(c.periodic_v, &mut (0..c.nu).map(|iu| (c.node(iu, 0), c.node(iu, c.nv - 1)))),
    ];
    let eta = field.bundle.eta_matrix();
    let gram0 = seed.transpose() * &eta * &seed;
    let mut gram_drift: f64 = 0.0;
    let mut eigen_drift: f64 = 0.0;
    for (k, s) in sigma.iter().enumerate() {
        gram_drift = gram_drift.max((s.transpose() * &eta * s - &gram0).amax());
        for (i, group) in field.bundle.groups.iter().enumerate() {
            let cols = s.columns(group.start, group.len()).into_owned();
            eigen_drift = eigen_drift.max((&field.projections[k][i] * &cols - &cols).amax());
        }
    }
    Ok(ParallelFrame {
        bundle: field.bundle.clone(),
        base_node,
        seed,
        sigma,
        sweep_discrepancy,
        deck_mismatch,
        gram_drift,
        eigen_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, FixtureGrid, FixtureName};
    use crate::linalg::expm;

    fn fx(name: FixtureName, cells: usize) -> GeometricDataset {
        generate(name, FixtureGrid::square(cells)).unwrap().dataset
    }

    #[test]
    fn omega_is_eta_skew() {
        for name in [FixtureName::Diagonal, FixtureName::Helicoid, FixtureName::ProductOfCurves(0.5, 1.0)] {
            let ds = fx(name, 16);
            let field = ConnectionField::new(&ds).unwrap();
            let eta = field.bundle.eta_matrix();
            for a in 0..2 {
                for om in &field.omega[a] {
                    let m = &eta * om;
                    assert!((&m + m.transpose()).amax() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn plane_has_vanishing_connection() {
        let ds = fx(FixtureName::Plane, 8);
        let field = ConnectionField::new(&ds).unwrap();
        assert_eq!(field.bundle.rank(), 3);
        for a in 0..2 {
            assert!(field.omega[a].iter().all(|m| m.amax() == 0.0));
        }
        for k in 0..ds.num_nodes() {
            assert_eq!(field.curvature_at(&ds, k), 0.0);
        }
        let frame = build_parallel_frame(&ds, 0).unwrap();
        assert!(frame.sigma.iter().all(|s| *s == frame.seed));
    }

    #[test]
    fn clifford_omega_only_couples_tangent_and_lines() {
        let ds = fx(FixtureName::CliffordTorus, 8);
        let field = ConnectionField::new(&ds).unwrap();
        let (n, d) = (2, 2);
        for a in 0..2 {
            for om in &field.omega[a] {
                assert!(om.view((0, 0), (n + d, n + d)).amax() < 1e-14);
                assert!(om.view((n, n + d), (d, 2)).amax() < 1e-14);
                // Tangent ↔ ε coupling: f₁ = diag(1,0), f₂ = diag(0,1).
                assert!((om[(a, n + d + a)] - 1.0).abs() < 1e-14);
                assert!((om[(n + d + a, a)] + 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn slice_second_line_row_vanishes() {
        let ds = fx(FixtureName::Slice, 8);
        let field = ConnectionField::new(&ds).unwrap();
        let e2 = field.bundle.epsilon(1).unwrap();
        for a in 0..2 {
            for om in &field.omega[a] {
                assert!(om.row(e2).amax() < 1e-15);
                assert!(om.column(e2).amax() < 1e-15);
            }
        }
    }

    fn one_step_error(cells: usize) -> f64 {
        let ds = fx(FixtureName::Plane, cells);
        let mut w = Mat::zeros(3, 3);
        w[(0, 1)] = 0.7;
        w[(1, 0)] = -0.7;
        w[(0, 2)] = -0.3;
        w[(2, 0)] = 0.3;
        let n = ds.num_nodes();
        let omega = [alloc::vec![w.clone(); n], alloc::vec![w.clone(); n]];
        let path = [ds.chart.node(0, 2), ds.chart.node(1, 2)];
        let s0 = Mat::identity(3, 3);
        let s = parallel_transport(&ds, &omega, &path, &s0);
        (s - expm(&(&w * (-ds.chart.hu)))).amax()
    }

    #[test]
    fn constant_omega_step_error_is_fifth_order() {
        let (a, b) = (one_step_error(4), one_step_error(8));
        assert!(a < 1e-5);
        assert!((24.0..40.0).contains(&(a / b)), "{a} {b}");
    }

    #[test]
    fn transport_there_and_back_is_identity_to_step_error() {
        let ds = fx(FixtureName::Plane, 64);
        let mut w = Mat::zeros(3, 3);
        w[(0, 1)] = 0.7;
        w[(1, 0)] = -0.7;
        let n = ds.num_nodes();
        let omega = [alloc::vec![w.clone(); n], alloc::vec![w; n]];
        let path: Vec<usize> = (0..ds.chart.nu).map(|iu| ds.chart.node(iu, 2)).collect();
        let back: Vec<usize> = path.iter().rev().copied().collect();
        let s0 = Mat::identity(3, 3);
        let s = parallel_transport(&ds, &omega, &back, &parallel_transport(&ds, &omega, &path, &s0));
        assert!((&s - &s0).amax() < 1e-10);
        assert_eq!(parallel_transport(&ds, &omega, &path[..1], &s0), s0);
    }

    fn holonomy(cells: usize) -> f64 {
        let ds = fx(FixtureName::Diagonal, cells);
        let field = ConnectionField::new(&ds).unwrap();
        let c = &ds.chart;
        let (a, b) = (cells / 4, 3 * cells / 4);
        let mut path = Vec::new();
        for iu in a..=b {
            path.push(c.node(iu, a));
        }
        for iv in a + 1..=b {
            path.push(c.node(b, iv));
        }
        for iu in (a..b).rev() {
            path.push(c.node(iu, b));
        }
        for iv in (a..b).rev() {
            path.push(c.node(a, iv));
        }
        let id = Mat::identity(field.bundle.rank(), field.bundle.rank());
        (parallel_transport(&ds, &field.omega, &path, &id) - id).amax()
    }

    #[test]
    fn holonomy_shrinks_second_order() {
        let (h1, h2) = (holonomy(16), holonomy(32));
        assert!(h1 < 1e-2);
        assert!((3.0..5.0).contains(&(h1 / h2)), "{h1} {h2}");
    }

    #[test]
    fn diagonal_frame_gram_constant() {
        let ds = fx(FixtureName::Diagonal, 64);
        let frame = build_parallel_frame(&ds, ds.chart.node(32, 32)).unwrap();
        assert!(frame.gram_drift < 1e-10, "{}", frame.gram_drift);
        assert!(frame.eigen_drift < 1e-3);
    }

    #[test]
    fn seed_rank_error() {
        let mut ds = fx(FixtureName::Slice, 8);
        let k = 0;
        ds.factors[0].f[k] = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e = build_parallel_frame(&ds, k).unwrap_err();
        assert_eq!(e, FrameError::Rank { factor: 0, expected: 3, found: 2 });
    }

    #[test]
    fn sweep_discrepancy_second_order_on_slice() {
        let d = |cells| {
            let ds = fx(FixtureName::Slice, cells);
            build_parallel_frame(&ds, 0).unwrap().sweep_discrepancy
        };
        let (a, b) = (d(16), d(32));
        assert!(a < 1e-2);
        assert!(a / b > 3.0, "{a} {b}");
    }
}
