//! Synthesis of the immersion from a parallel frame, verification of its properties, and
//! comparison of immersions up to ambient isometry.
//!
//! Curved factor `i` gets coordinates `xᵢₖ = g̃(σᵢₖ, εᵢ)/√|cᵢ|` and pushforwards
//! `Φ(X)ᵢₖ = g̃(πᵢX, σᵢₖ)`. A flat factor is integrated from its pushforward 1-form along
//! the same row-then-column sweep used for the frame, starting at zero on the base node.

use alloc::vec::Vec;

use crate::ambient::{align_isometry, AmbientPoint, AmbientVector, BlockVector, IsometryAlignment, MultiproductSpec};
use crate::dataset::{apply_vec, derive_adjoint_s, Chart, Dir, GeometricDataset};
use crate::error::{DatasetError, ReconstructError};
use crate::flatconn::{build_parallel_frame_from, ConnectionField, ParallelFrame};
use crate::linalg::{Mat, Vector};
use crate::orthonormal::OrthonormalFields;
use crate::report::{Accumulator, CompatReport, ResidualClass, Tolerances};

/// Residual keys produced by [`verify_immersion`].
pub const IMMERSION_KEYS: [&str; 6] = [
    "isometry",
    "factor_constraint",
    "projection_tangent",
    "projection_normal",
    "second_fundamental_form",
    "normal_connection",
];

/// Sampled immersion: per node the point, the images of `∂_u`, `∂_v`, and the images of
/// the `E`-frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionField {
    pub spec: MultiproductSpec,
    pub chart: Chart,
    pub points: Vec<AmbientPoint>,
    pub du: Vec<AmbientVector>,
    pub dv: Vec<AmbientVector>,
    pub normals: Vec<Vec<AmbientVector>>,
}

impl ImmersionField {
    /// Points as flat coordinate vectors.
    pub fn flat_points(&self) -> Vec<Vector> {
        self.points.iter().map(|p| Vector::from_vec(p.to_flat())).collect()
    }

    /// Smallest singular value of the stacked Euclidean pushforward `[φ_*∂_u φ_*∂_v]`.
    pub fn min_singular_value(&self, node: usize) -> f64 {
        let cols = [&self.du[node], &self.dv[node]].map(|v| Vector::from_vec(v.to_flat()));
        let m = Mat::from_columns(&cols);
        m.singular_values().min()
    }
}

fn block(spec: &MultiproductSpec, flat: Vector) -> BlockVector {
    BlockVector::from_flat(spec, flat.as_slice()).expect("layout follows spec")
}

/// Ambient coordinates of `Φ(w)` for a vector `w` of `TM ⊕ E` in the frames `e ⊕ ν`.
fn push(frame: &ParallelFrame, of: &OrthonormalFields, node: usize, w: &Vector) -> Vector {
    let nd = of.n + of.d;
    let sigma = &frame.sigma[node];
    let mut out = Vector::zeros(sigma.ncols());
    for (i, group) in frame.bundle.groups.iter().enumerate() {
        let pw = &of.pi[node][i] * w;
        for col in group.clone() {
            out[col] = (0..nd).map(|r| pw[r] * sigma[(r, col)]).sum();
        }
    }
    out
}

/// Visits every non-base node once as `(from, to, dir, sign)` in row-then-column order.
fn sweep_steps(chart: &Chart, base: usize, rows_first: bool) -> Vec<(usize, usize, Dir)> {
    let (bu, bv) = chart.indices(base);
    let mut steps = Vec::with_capacity(chart.num_nodes());
    let mut line = |fixed: usize, start: usize, along_u: bool| {
        let (len, dir) = if along_u { (chart.nu, Dir::U) } else { (chart.nv, Dir::V) };
        let idx = |k: usize| if along_u { chart.node(k, fixed) } else { chart.node(fixed, k) };
        for k in start + 1..len {
            steps.push((idx(k - 1), idx(k), dir));
        }
        for k in (0..start).rev() {
            steps.push((idx(k + 1), idx(k), dir));
        }
    };
    if rows_first {
        line(bv, bu, true);
        for iu in 0..chart.nu {
            line(iu, bv, false);
        }
    } else {
        line(bu, bv, false);
        for iv in 0..chart.nv {
            line(iv, bu, true);
        }
    }
    steps
}

/// Trapezoid integration of the flat-factor coordinates from the pushforwards.
fn integrate_flat(
    chart: &Chart,
    flat_cols: &[usize],
    du: &[Vector],
    dv: &[Vector],
    base: usize,
    rows_first: bool,
) -> Vec<Vector> {
    let mut out = alloc::vec![Vector::zeros(flat_cols.len()); chart.num_nodes()];
    for (from, to, dir) in sweep_steps(chart, base, rows_first) {
        let (a, b) = (chart.indices(from), chart.indices(to));
        let forward = match dir {
            Dir::U => b.0 > a.0,
            Dir::V => b.1 > a.1,
        };
        let h = chart.spacing(dir) * if forward { 1.0 } else { -1.0 };
        let d = if dir == Dir::U { du } else { dv };
        let mut x = out[from].clone();
        for (k, &col) in flat_cols.iter().enumerate() {
            x[k] += 0.5 * h * (d[from][col] + d[to][col]);
        }
        out[to] = x;
    }
    out
}

/// Synthesized immersion together with the flat-factor sweep audit.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub immersion: ImmersionField,
    /// Max coordinate difference between row-first and column-first integration of the
    /// flat factor (zero without a flat factor).
    pub flat_sweep_discrepancy: f64,
}

/// Builds the immersion determined by a `D`-parallel frame.
pub fn synthesize_immersion(frame: &ParallelFrame, ds: &GeometricDataset) -> Result<Synthesis, DatasetError> {
    let of = OrthonormalFields::new(ds)?;
    Ok(synthesize_with(frame, ds, &of))
}

fn synthesize_with(frame: &ParallelFrame, ds: &GeometricDataset, of: &OrthonormalFields) -> Synthesis {
    let (n, d) = (of.n, of.d);
    let spec = &ds.spec;
    let nodes = ds.num_nodes();
    let mut du = Vec::with_capacity(nodes);
    let mut dv = Vec::with_capacity(nodes);
    let mut normals = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let tangent = |a: usize| {
            let mut w = Vector::zeros(n + d);
            for b in 0..n {
                w[b] = of.pinv[k][(b, a)];
            }
            push(frame, of, k, &w)
        };
        du.push(tangent(0));
        dv.push(tangent(1));
        normals.push(
            (0..d)
                .map(|alpha| {
                    let mut w = Vector::zeros(n + d);
                    w[n + alpha] = 1.0;
                    push(frame, of, k, &w)
                })
                .collect::<Vec<_>>(),
        );
    }
    let flat_cols: Vec<usize> = spec
        .factors()
        .iter()
        .zip(&frame.bundle.groups)
        .filter(|(f, _)| !f.is_curved())
        .flat_map(|(_, g)| g.clone())
        .collect();
    let flat = integrate_flat(&ds.chart, &flat_cols, &du, &dv, frame.base_node, true);
    let audit = integrate_flat(&ds.chart, &flat_cols, &du, &dv, frame.base_node, false);
    let flat_sweep_discrepancy = flat
        .iter()
        .zip(&audit)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).amax()));
    let mut points = Vec::with_capacity(nodes);
    for (k, sigma) in frame.sigma.iter().enumerate() {
        let mut x = Vector::zeros(sigma.ncols());
        for (i, f) in spec.factors().iter().enumerate() {
            let group = frame.bundle.groups[i].clone();
            match frame.bundle.epsilon(i) {
                Some(e) => {
                    let scale = f.curvature.signum() / libm::sqrt(f.curvature.abs());
                    for col in group {
                        x[col] = scale * sigma[(e, col)];
                    }
                }
                None => {
                    for col in group {
                        let pos = flat_cols.iter().position(|&c| c == col).expect("flat column");
                        x[col] = flat[k][pos];
                    }
                }
            }
        }
        points.push(block(spec, x));
    }
    Synthesis {
        immersion: ImmersionField {
            spec: spec.clone(),
            chart: ds.chart.clone(),
            points,
            du: du.into_iter().map(|v| block(spec, v)).collect(),
            dv: dv.into_iter().map(|v| block(spec, v)).collect(),
            normals: normals
                .into_iter()
                .map(|ns| ns.into_iter().map(|v| block(spec, v)).collect())
                .collect(),
        },
        flat_sweep_discrepancy,
    }
}

/// Checks an immersion against a dataset by finite differences of its points.
///
/// All families are discretization-limited and judged as differential residuals.
pub fn verify_immersion(im: &ImmersionField, ds: &GeometricDataset, tol: &Tolerances) -> CompatReport {
    let spec = &ds.spec;
    let sig = spec.signature();
    let dot = |a: &Vector, b: &Vector| (0..a.len()).map(|k| sig[k] * a[k] * b[k]).sum::<f64>();
    let (n, d) = (ds.base_dim, ds.bundle_rank);
    let c = &ds.chart;
    let x = im.flat_points();
    let nu_flat: Vec<Vec<Vector>> = im
        .normals
        .iter()
        .map(|ns| ns.iter().map(|v| Vector::from_vec(v.to_flat())).collect())
        .collect();
    let dims = spec.ambient_dims();
    let mut ranges = Vec::with_capacity(dims.len());
    let mut start = 0;
    for &m in &dims {
        ranges.push(start..start + m);
        start += m;
    }
    let project = |i: usize, v: &Vector| {
        let mut out = Vector::zeros(v.len());
        for k in ranges[i].clone() {
            out[k] = v[k];
        }
        out
    };
    let mut acc = [0; 6].map(|_| Accumulator::new(ResidualClass::Differential));
    for node in 0..ds.num_nodes() {
        let (iu, iv) = c.indices(node);
        let xa: [Vector; 2] = Dir::BOTH.map(|dir| apply_vec(&c.d1(dir, iu, iv), &x));
        let xab = [Dir::U, Dir::V].map(|a| Dir::BOTH.map(|b| apply_vec(&c.d2(a, b, iu, iv), &x)));
        let g = &ds.g[node];
        let nus = &nu_flat[node];

        let iso = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .fold(0.0, |m: f64, (a, b)| m.max((dot(&xa[a], &xa[b]) - g[(a, b)]).abs()));
        acc[0].push(iso, iu, iv);

        let fc = crate::ambient::factor_constraint_residual(&im.points[node], spec)
            .map(|r| r.into_iter().fold(0.0, f64::max))
            .unwrap_or(f64::NAN);
        acc[1].push(fc, iu, iv);

        let mut tan: f64 = 0.0;
        let mut nor: f64 = 0.0;
        for (i, fac) in ds.factors.iter().enumerate() {
            let (f, h, t) = (&fac.f[node], &fac.h[node], &fac.t[node]);
            for a in 0..n {
                let mut rhs = Vector::zeros(x[node].len());
                for b in 0..n {
                    rhs.axpy(f[(b, a)], &xa[b], 1.0);
                }
                for beta in 0..d {
                    rhs.axpy(h[(beta, a)], &nus[beta], 1.0);
                }
                tan = tan.max((project(i, &xa[a]) - rhs).norm());
            }
            let s = derive_adjoint_s(g, h).unwrap_or_else(|| Mat::from_element(n, d, f64::NAN));
            for alpha in 0..d {
                let mut rhs = Vector::zeros(x[node].len());
                for b in 0..n {
                    rhs.axpy(s[(b, alpha)], &xa[b], 1.0);
                }
                for beta in 0..d {
                    rhs.axpy(t[(beta, alpha)], &nus[beta], 1.0);
                }
                nor = nor.max((project(i, &nus[alpha]) - rhs).norm());
            }
        }
        acc[2].push(tan, iu, iv);
        acc[3].push(nor, iu, iv);

        let mut sff: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let sq: f64 = (0..d)
                    .map(|alpha| {
                        let r = dot(&xab[a][b], &nus[alpha]) - ds.b[node][alpha][(a, b)];
                        r * r
                    })
                    .sum();
                sff = sff.max(libm::sqrt(sq));
            }
        }
        acc[4].push(sff, iu, iv);

        let mut conn: f64 = 0.0;
        for (a, dir) in Dir::BOTH.into_iter().enumerate() {
            let st = c.d1(dir, iu, iv);
            let om = &ds.e_connection[a][node];
            for beta in 0..d {
                let dn = {
                    let mut out = Vector::zeros(x[node].len());
                    for &(k, w) in &st {
                        out.axpy(w, &nu_flat[k][beta], 1.0);
                    }
                    out
                };
                for alpha in 0..d {
                    conn = conn.max((dot(&dn, &nus[alpha]) - om[(alpha, beta)]).abs());
                }
            }
        }
        acc[5].push(conn, iu, iv);
    }
    let mut report = CompatReport::new(*tol);
    for (key, a) in IMMERSION_KEYS.iter().zip(&acc) {
        report.insert(*key, a.finish());
    }
    report
}

/// Output of [`reconstruct`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub frame: ParallelFrame,
    pub immersion: ImmersionField,
    pub flat_sweep_discrepancy: f64,
    pub report: CompatReport,
    /// Isometry carrying the reconstruction onto the ground truth, when one was given.
    pub alignment: Option<IsometryAlignment>,
}

/// Frame, immersion and verification in one pass; the dataset should pass the
/// compatibility checks first.
pub fn reconstruct(
    ds: &GeometricDataset,
    base_node: usize,
    seed: Option<Mat>,
    truth: Option<&ImmersionField>,
    tol: &Tolerances,
) -> Result<Reconstruction, ReconstructError> {
    let of = OrthonormalFields::new(ds)?;
    let field = ConnectionField::from_fields(ds, &of);
    let frame = build_parallel_frame_from(ds, &field, base_node, seed)?;
    let syn = synthesize_with(&frame, ds, &of);
    let report = verify_immersion(&syn.immersion, ds, tol);
    let alignment = match truth {
        Some(t) => Some(align_isometry(&syn.immersion.points, &t.points, &ds.spec)?),
        None => None,
    };
    Ok(Reconstruction {
        frame,
        immersion: syn.immersion,
        flat_sweep_discrepancy: syn.flat_sweep_discrepancy,
        report,
        alignment,
    })
}
