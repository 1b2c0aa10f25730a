//! Surfaces in `S² × S²` described through the complex structures `J₁ = (J, J)` and
//! `J₂ = (J, −J)`, where `J(x)v = x × v` on the unit sphere.
//!
//! Each `Jᵢ` restricted to the surface splits into `jᵢ` (tangent to tangent), `kᵢ`
//! (tangent to normal), `lᵢ` (normal to tangent) and `mᵢ` (normal to normal). All blocks
//! are stored in orthonormal frames `(e₁, e₂)` and `(ν₁, ν₂)`.
//!
//! `(Id + J₁J₂)/2` projects onto the second sphere, since `J₁J₂ = (−Id, Id)`. Operator
//! lists here are ordered by factor, so index 0 is `(Id − J₁J₂)/2`.

use alloc::vec::Vec;

use crate::ambient::AmbientPoint;
use crate::compat::{check_curvature_equations, extrinsic_gauss_rhs};
use crate::dataset::{Chart, FactorFields, GeometricDataset, OperatorQuadruple};
use crate::error::S2xS2Error;
use crate::immersion::ImmersionField;
use crate::linalg::{orthonormal_frame, spectral_norm, Mat, Vector};
use crate::orthonormal::{block_norms, OrthonormalFields};
use crate::report::{Accumulator, CompatReport, ResidualClass, ResidualField, Tolerances};

/// Algebraic residual keys of [`check_complex_relations`].
pub const COMPLEX_ALGEBRAIC_KEYS: [&str; 11] = [
    "antisymmetry_j",
    "antisymmetry_m",
    "adjoint_kl",
    "cx_1",
    "cx_2",
    "cx_3",
    "cx_4",
    "com_1",
    "com_2",
    "com_3",
    "com_4",
];

/// Parallelism residual keys of [`check_complex_relations`].
pub const PARALLEL_KEYS: [&str; 4] = ["nabla_j", "nabla_k", "nabla_m", "nabla_l"];

/// Blocks of one complex structure along the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureBlocks {
    pub j: Mat,
    pub k: Mat,
    pub l: Mat,
    pub m: Mat,
}

impl StructureBlocks {
    /// `[[j, l], [k, m]]` on `TΣ ⊕ NΣ`.
    pub fn block(&self) -> Mat {
        let mut out = Mat::zeros(4, 4);
        out.view_mut((0, 0), (2, 2)).copy_from(&self.j);
        out.view_mut((0, 2), (2, 2)).copy_from(&self.l);
        out.view_mut((2, 0), (2, 2)).copy_from(&self.k);
        out.view_mut((2, 2), (2, 2)).copy_from(&self.m);
        out
    }

    /// Blocks in the frames `e·rt` and `ν·rn`.
    pub fn rotate_frames(&self, rt: &Mat, rn: &Mat) -> Self {
        Self {
            j: rt.transpose() * &self.j * rt,
            k: rn.transpose() * &self.k * rt,
            l: rt.transpose() * &self.l * rn,
            m: rn.transpose() * &self.m * rn,
        }
    }
}

/// `[J₁, J₂]` blocks at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDecomposition {
    pub chart: Chart,
    pub blocks: Vec<[StructureBlocks; 2]>,
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `J₁v` or `J₂v` at the point `x`, on flat 6-vectors.
fn apply_structure(x: &[f64], v: &Vector, second: bool) -> Vector {
    let a = cross(&x[0..3], &v.as_slice()[0..3]);
    let b = cross(&x[3..6], &v.as_slice()[3..6]);
    let s = if second { -1.0 } else { 1.0 };
    Vector::from_vec(alloc::vec![a[0], a[1], a[2], s * b[0], s * b[1], s * b[2]])
}

/// Blocks of `J₁`, `J₂` at `x` for orthonormal tangent and normal frames.
pub fn decompose_at(x: &AmbientPoint, tangent: &[Vector; 2], normals: &[Vector; 2]) -> [StructureBlocks; 2] {
    let x = x.to_flat();
    [false, true].map(|second| {
        let je: [Vector; 2] = tangent.each_ref().map(|e| apply_structure(&x, e, second));
        let jn: [Vector; 2] = normals.each_ref().map(|nu| apply_structure(&x, nu, second));
        StructureBlocks {
            j: Mat::from_fn(2, 2, |a, b| je[b].dot(&tangent[a])),
            k: Mat::from_fn(2, 2, |alpha, b| je[b].dot(&normals[alpha])),
            l: Mat::from_fn(2, 2, |a, beta| jn[beta].dot(&tangent[a])),
            m: Mat::from_fn(2, 2, |alpha, beta| jn[beta].dot(&normals[alpha])),
        }
    })
}

/// Decomposes `J₁`, `J₂` along an immersed surface, using the Cholesky orthonormal frame
/// of the induced metric and the immersion's normal frame.
pub fn decompose_complex(im: &ImmersionField) -> Result<ComplexDecomposition, S2xS2Error> {
    if !im.spec.is_s2_x_s2() {
        return Err(S2xS2Error::WrongSpec);
    }
    let mut blocks = Vec::with_capacity(im.points.len());
    for node in 0..im.points.len() {
        if im.normals[node].len() != 2 {
            return Err(S2xS2Error::Frame { node });
        }
        let xa = [&im.du[node], &im.dv[node]].map(|v| Vector::from_vec(v.to_flat()));
        let gram = Mat::from_fn(2, 2, |a, b| xa[a].dot(&xa[b]));
        let (p, _) = orthonormal_frame(&gram).ok_or(S2xS2Error::Frame { node })?;
        let tangent = [0, 1].map(|a| &xa[0] * p[(0, a)] + &xa[1] * p[(1, a)]);
        let normals = [0, 1].map(|alpha| Vector::from_vec(im.normals[node][alpha].to_flat()));
        blocks.push(decompose_at(&im.points[node], &tangent, &normals));
    }
    Ok(ComplexDecomposition {
        chart: im.chart.clone(),
        blocks,
    })
}

/// Defects of antisymmetry, `Jᵢ² = −Id` and `J₁J₂ = J₂J₁`, in the order of
/// [`COMPLEX_ALGEBRAIC_KEYS`].
pub fn complex_invariant_defects(b: &[StructureBlocks; 2]) -> [f64; 11] {
    let id = Mat::identity(2, 2);
    let mut v = [0.0f64; 11];
    for s in b {
        v[0] = v[0].max(spectral_norm(&(&s.j + s.j.transpose())));
        v[1] = v[1].max(spectral_norm(&(&s.m + s.m.transpose())));
        v[2] = v[2].max((&s.k + s.l.transpose()).amax());
        v[3] = v[3].max(spectral_norm(&(&s.j * &s.j + &s.l * &s.k + &id)));
        v[4] = v[4].max(spectral_norm(&(&s.k * &s.j + &s.m * &s.k)));
        v[5] = v[5].max(spectral_norm(&(&s.j * &s.l + &s.l * &s.m)));
        v[6] = v[6].max(spectral_norm(&(&s.k * &s.l + &s.m * &s.m + &id)));
    }
    let [a, c] = b;
    v[7] = spectral_norm(&(&a.j * &c.j + &a.l * &c.k - &c.j * &a.j - &c.l * &a.k));
    v[8] = spectral_norm(&(&a.k * &c.j + &a.m * &c.k - &c.k * &a.j - &c.m * &a.k));
    v[9] = spectral_norm(&(&a.j * &c.l + &a.l * &c.m - &c.j * &a.l - &c.l * &a.m));
    v[10] = spectral_norm(&(&a.k * &c.l + &a.m * &c.m - &c.k * &a.l - &c.m * &a.m));
    v
}

/// Projection operators of both factors, in factor order, in orthonormal frames.
pub fn projection_operators_at(b: &[StructureBlocks; 2]) -> [OperatorQuadruple; 2] {
    let [a, c] = b;
    let id = Mat::identity(2, 2);
    let pf = &a.j * &c.j + &a.l * &c.k;
    let ph = &a.k * &c.j + &a.m * &c.k;
    let ps = &a.j * &c.l + &a.l * &c.m;
    let pt = &a.k * &c.l + &a.m * &c.m;
    [-1.0, 1.0].map(|sign| OperatorQuadruple {
        f: (&id + &pf * sign) * 0.5,
        h: &ph * (0.5 * sign),
        s: &ps * (0.5 * sign),
        t: (&id + &pt * sign) * 0.5,
    })
}

/// [`projection_operators_at`] at every node.
pub fn to_projection_operators(cd: &ComplexDecomposition) -> Vec<[OperatorQuadruple; 2]> {
    cd.blocks.iter().map(projection_operators_at).collect()
}

/// The dataset with its factor operators replaced by those read off `cd`.
pub fn with_dictionary_operators(
    cd: &ComplexDecomposition,
    ds: &GeometricDataset,
) -> Result<GeometricDataset, S2xS2Error> {
    if !ds.spec.is_s2_x_s2() || ds.base_dim != 2 || ds.bundle_rank != 2 {
        return Err(S2xS2Error::WrongSpec);
    }
    if cd.blocks.len() != ds.num_nodes() {
        return Err(S2xS2Error::Frame { node: cd.blocks.len().min(ds.num_nodes()) });
    }
    let of = OrthonormalFields::new(ds)?;
    let nodes = ds.num_nodes();
    let mut factors: Vec<FactorFields> = (0..2)
        .map(|_| FactorFields {
            f: Vec::with_capacity(nodes),
            h: Vec::with_capacity(nodes),
            t: Vec::with_capacity(nodes),
        })
        .collect();
    for (k, b) in cd.blocks.iter().enumerate() {
        for (out, q) in factors.iter_mut().zip(projection_operators_at(b)) {
            out.f.push(&of.p[k] * &q.f * &of.pinv[k]);
            out.h.push(&q.h * &of.pinv[k]);
            out.t.push(q.t);
        }
    }
    Ok(GeometricDataset::new(
        ds.spec.clone(),
        ds.chart.clone(),
        2,
        2,
        ds.g.clone(),
        ds.b.clone(),
        ds.e_connection.clone(),
        factors,
    )?)
}

/// Algebraic relations among the blocks and the parallelism of `J₁`, `J₂` with respect to
/// the connection built from `ds`.
///
/// The four parallelism residuals are the blocks of `∂_a Jᵢ + [K_a, Jᵢ]` where `K_a` is the
/// connection of `TΣ ⊕ NΣ`: tangent-tangent, normal-tangent, normal-normal and
/// tangent-normal, i.e. the defects in `∇j`, `∇k`, `∇m` and `∇l`.
pub fn check_complex_relations(
    cd: &ComplexDecomposition,
    ds: &GeometricDataset,
    tol: &Tolerances,
) -> Result<CompatReport, S2xS2Error> {
    if cd.blocks.len() != ds.num_nodes() {
        return Err(S2xS2Error::Frame { node: cd.blocks.len().min(ds.num_nodes()) });
    }
    let of = OrthonormalFields::new(ds)?;
    let fields: [Vec<Mat>; 2] = [0, 1].map(|i| cd.blocks.iter().map(|b| b[i].block()).collect());
    let mut alg = [0; 11].map(|_| Accumulator::new(ResidualClass::Algebraic));
    let mut par = [0; 4].map(|_| Accumulator::new(ResidualClass::Differential));
    let c = &ds.chart;
    for node in 0..ds.num_nodes() {
        let (iu, iv) = c.indices(node);
        if c.is_duplicate(iu, iv) {
            continue;
        }
        for (a, v) in alg.iter_mut().zip(complex_invariant_defects(&cd.blocks[node])) {
            a.push(v, iu, iv);
        }
        let mut worst = [0.0f64; 4];
        for field in &fields {
            let norms = block_norms(&of.covariant_derivative(ds, field, node), 2);
            // Block order of `block_norms` is TT, NT, NN, TN.
            for (w, v) in worst.iter_mut().zip([norms[0], norms[1], norms[2], norms[3]]) {
                *w = w.max(v);
            }
        }
        for (a, v) in par.iter_mut().zip(worst) {
            a.push(v, iu, iv);
        }
    }
    let mut report = CompatReport::new(*tol);
    for (key, a) in COMPLEX_ALGEBRAIC_KEYS.iter().zip(&alg) {
        report.insert(*key, a.finish());
    }
    for (key, a) in PARALLEL_KEYS.iter().zip(&par) {
        report.insert(*key, a.finish());
    }
    Ok(report)
}

/// Gauss curvature from the complex blocks.
#[derive(Debug, Clone)]
pub struct ComplexCurvature {
    /// `K` from the general Gauss equation with the dictionary operators.
    pub k_general: Vec<f64>,
    /// `K` from the closed formula in terms of `jᵢ`, `kᵢ`, `H` and `|B|²`, evaluated
    /// literally.
    pub k_closed: Vec<f64>,
    /// `|k_closed − k_general|` over nodes; reported, not judged.
    pub closed_discrepancy: ResidualField,
    /// Gauss, Codazzi and Ricci residuals of the dataset carrying the dictionary operators.
    pub report: CompatReport,
}

/// The closed `K` formula in the blocks; `b` holds `B_α` in the orthonormal frame.
pub fn closed_gauss_formula(blocks: &[StructureBlocks; 2], b: &[Mat]) -> f64 {
    let [one, two] = blocks;
    let ip = |x: &Mat, a: usize, y: &Mat, c: usize| x.column(a).dot(&y.column(c));
    let jj = |a, c| ip(&one.j, a, &two.j, c);
    let kk = |a, c| ip(&one.k, a, &two.k, c);
    let bracket = 1.0 + (jj(0, 1) + kk(0, 1)) * (jj(1, 0) + kk(1, 0))
        - (jj(0, 0) + kk(0, 0)) * (jj(1, 1) - kk(1, 1));
    let h_sq: f64 = b.iter().map(|m| 0.25 * m.trace() * m.trace()).sum();
    let b_sq: f64 = b.iter().map(|m| m.norm_squared()).sum();
    0.5 * bracket + 2.0 * h_sq - 0.5 * b_sq
}

/// `K` by the general route and by the closed formula, with the complex-form curvature
/// residuals.
pub fn gauss_curvature_s2s2(
    cd: &ComplexDecomposition,
    ds: &GeometricDataset,
    tol: &Tolerances,
) -> Result<ComplexCurvature, S2xS2Error> {
    let dict = with_dictionary_operators(cd, ds)?;
    let of = OrthonormalFields::new(&dict)?;
    let report = check_curvature_equations(&dict, tol)?;
    let mut k_general = Vec::with_capacity(ds.num_nodes());
    let mut k_closed = Vec::with_capacity(ds.num_nodes());
    let mut acc = Accumulator::new(ResidualClass::Curvature);
    for node in 0..ds.num_nodes() {
        let p = &of.p[node];
        let bo: Vec<Mat> = ds.b[node].iter().map(|m| p.transpose() * m * p).collect();
        let kg = extrinsic_gauss_rhs(&dict, &of, node);
        let kp = closed_gauss_formula(&cd.blocks[node], &bo);
        let (iu, iv) = ds.chart.indices(node);
        if !ds.chart.is_duplicate(iu, iv) {
            acc.push((kp - kg).abs(), iu, iv);
        }
        k_general.push(kg);
        k_closed.push(kp);
    }
    Ok(ComplexCurvature {
        k_general,
        k_closed,
        closed_discrepancy: acc.finish(),
        report,
    })
}

/// `(C₁, C₂)` with `Cᵢ = ⟨jᵢe₁, e₂⟩`.
pub fn kahler_functions(cd: &ComplexDecomposition) -> Vec<[f64; 2]> {
    cd.blocks.iter().map(|b| [b[0].j[(1, 0)], b[1].j[(1, 0)]]).collect()
}

/// Complex and Lagrangian flags for each structure at one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceClass {
    pub complex: [bool; 2],
    pub lagrangian: [bool; 2],
}

impl SurfaceClass {
    pub fn labels(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let names = [["complex-J1", "complex-J2"], ["lagrangian-J1", "lagrangian-J2"]];
        for i in 0..2 {
            if self.complex[i] {
                out.push(names[0][i]);
            }
        }
        for i in 0..2 {
            if self.lagrangian[i] {
                out.push(names[1][i]);
            }
        }
        if out.is_empty() {
            out.push("generic");
        }
        out
    }
}

/// Complex w.r.t. `Jᵢ` when `‖kᵢ‖ + ‖lᵢ‖ ≤ tol`, Lagrangian when `‖jᵢ‖ + ‖mᵢ‖ ≤ tol`
/// (Frobenius norms).
pub fn classify_surface(cd: &ComplexDecomposition, tol: f64) -> Vec<SurfaceClass> {
    cd.blocks
        .iter()
        .map(|b| SurfaceClass {
            complex: [0, 1].map(|i| b[i].k.norm() + b[i].l.norm() <= tol),
            lagrangian: [0, 1].map(|i| b[i].j.norm() + b[i].m.norm() <= tol),
        })
        .collect()
}
