//! Rotation of minimal-surface data by `R_θ = cos θ·I + sin θ·J` and the associated
//! family of immersions.

use alloc::vec::Vec;

use crate::dataset::{FactorFields, GeometricDataset};
use crate::error::{DatasetError, FamilyError};
use crate::flatconn::{default_seed, ConnectionField};
use crate::immersion::{reconstruct, Reconstruction};
use crate::linalg::{spd_inverse, Mat};
use crate::orthonormal::OrthonormalFields;
use crate::report::Tolerances;

/// Largest `|tr_g B_α|` accepted as trace-free.
pub const TRACE_TOL: f64 = 1e-10;

/// A dataset with its second fundamental form and projections rotated by `R_θ`.
#[derive(Debug, Clone)]
pub struct RotatedDataset {
    pub dataset: GeometricDataset,
    pub theta: f64,
    /// `J` in chart coordinates at every node.
    pub j: Vec<Mat>,
    /// `R_θ` in chart coordinates at every node.
    pub rotation: Vec<Mat>,
}

/// `R_θ` in the orthonormal frame.
pub fn frame_rotation(theta: f64) -> Mat {
    let (s, c) = libm::sincos(theta);
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `J` in chart coordinates: the `g`-rotation by `π/2` taking `∂_u` towards `∂_v`.
pub fn complex_structure(of: &OrthonormalFields, node: usize) -> Mat {
    &of.p[node] * frame_rotation_quarter() * &of.pinv[node]
}

fn frame_rotation_quarter() -> Mat {
    Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

/// Largest `|tr_g B_α|` over normals and the node where it occurs.
pub fn max_trace(ds: &GeometricDataset) -> Result<(f64, usize), DatasetError> {
    let mut worst = (0.0, 0);
    for (k, (g, bs)) in ds.g.iter().zip(&ds.b).enumerate() {
        let (iu, iv) = ds.chart.indices(k);
        let gi = spd_inverse(g).ok_or_else(|| DatasetError::Invariant {
            field: "g".into(),
            iu,
            iv,
            detail: "not positive definite".into(),
        })?;
        for b in bs {
            let tr = (&gi * b).trace().abs();
            if !(tr <= worst.0) {
                worst = (tr, k);
            }
        }
    }
    Ok(worst)
}

fn check_trace_free(ds: &GeometricDataset) -> Result<(), FamilyError> {
    let (value, k) = max_trace(ds)?;
    if !(value <= TRACE_TOL) {
        let (iu, iv) = ds.chart.indices(k);
        return Err(FamilyError::NotTraceFree { iu, iv, value });
    }
    Ok(())
}

/// `B_θ(X,Y) = B(R_θX, Y)`, `f_θ = R_θ f R_θ⁻¹`, `h_θ = h R_θ⁻¹`, `t_θ = t`.
pub fn rotate_dataset(ds: &GeometricDataset, theta: f64) -> Result<RotatedDataset, FamilyError> {
    let of = OrthonormalFields::new(ds)?;
    check_trace_free(ds)?;
    let (s, c) = libm::sincos(theta);
    let nodes = ds.num_nodes();
    let mut j = Vec::with_capacity(nodes);
    let mut rotation = Vec::with_capacity(nodes);
    let mut b = Vec::with_capacity(nodes);
    let mut factors: Vec<FactorFields> = ds
        .factors
        .iter()
        .map(|f| FactorFields {
            f: Vec::with_capacity(nodes),
            h: Vec::with_capacity(nodes),
            t: f.t.clone(),
        })
        .collect();
    for k in 0..nodes {
        let jk = complex_structure(&of, k);
        let id = Mat::identity(2, 2);
        let r = &id * c + &jk * s;
        let rinv = &id * c - &jk * s;
        b.push(ds.b[k].iter().map(|bm| r.transpose() * bm).collect());
        for (out, src) in factors.iter_mut().zip(&ds.factors) {
            out.f.push(&r * &src.f[k] * &rinv);
            out.h.push(&src.h[k] * &rinv);
        }
        j.push(jk);
        rotation.push(r);
    }
    let dataset = GeometricDataset::new(
        ds.spec.clone(),
        ds.chart.clone(),
        ds.base_dim,
        ds.bundle_rank,
        ds.g.clone(),
        b,
        ds.e_connection.clone(),
        factors,
    )?;
    Ok(RotatedDataset {
        dataset,
        theta,
        j,
        rotation,
    })
}

/// One member `x_θ` of the associated family.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub theta: f64,
    pub rotated: RotatedDataset,
    pub reconstruction: Reconstruction,
}

/// Reconstructs `x_θ` for every angle from a common base node.
///
/// Each member keeps the base point and normal frame of `x₀` and has differential
/// `dx₀ ∘ R_θ⁻¹` at the base node, which is the normalization compatible with the rotated
/// projections.
pub fn generate_family(
    ds: &GeometricDataset,
    thetas: &[f64],
    base_node: usize,
    tol: &Tolerances,
) -> Result<Vec<FamilyMember>, FamilyError> {
    if thetas.is_empty() {
        return Err(FamilyError::EmptyThetas);
    }
    check_trace_free(ds)?;
    let field = ConnectionField::new(ds)?;
    if base_node >= ds.num_nodes() {
        return Err(crate::error::FrameError::BaseNode(base_node).into());
    }
    let seed0 = default_seed(ds, &field, base_node)?;
    let mut out = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let rotated = rotate_dataset(ds, theta)?;
        let mut q = Mat::identity(seed0.nrows(), seed0.nrows());
        q.view_mut((0, 0), (2, 2)).copy_from(&frame_rotation(theta));
        let seed = &q * &seed0;
        let reconstruction = reconstruct(&rotated.dataset, base_node, Some(seed), None, tol).map_err(|e| match e {
            crate::error::ReconstructError::Frame(f) => FamilyError::Frame(f),
            crate::error::ReconstructError::Alignment(_) => unreachable!("no alignment requested"),
        })?;
        out.push(FamilyMember {
            theta,
            rotated,
            reconstruction,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{align_isometry, sup_geodesic_distance, BlockVector};
    use crate::compat::compatibility_report;
    use crate::fixtures::{generate, FixtureBundle, FixtureGrid, FixtureName};
    use crate::linalg::Vector;
    use crate::report::{Profile, ResidualClass};
    use core::f64::consts::{FRAC_PI_2, TAU};
    use proptest::prelude::*;

    fn fx(name: FixtureName, cells: usize) -> FixtureBundle {
        generate(name, FixtureGrid::square(cells)).unwrap()
    }

    fn center(ds: &GeometricDataset) -> usize {
        ds.chart.node(ds.chart.nu / 2, ds.chart.nv / 2)
    }

    fn max_diff(a: &GeometricDataset, b: &GeometricDataset) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..a.num_nodes() {
            for (x, y) in a.b[k].iter().zip(&b.b[k]) {
                m = m.max((x - y).amax());
            }
            for (fa, fb) in a.factors.iter().zip(&b.factors) {
                m = m.max((&fa.f[k] - &fb.f[k]).amax());
                m = m.max((&fa.h[k] - &fb.h[k]).amax());
                m = m.max((&fa.t[k] - &fb.t[k]).amax());
            }
        }
        m
    }

    #[test]
    fn zero_angle_is_bitwise_identity() {
        let ds = fx(FixtureName::Helicoid, 16).dataset;
        let r = rotate_dataset(&ds, 0.0).unwrap();
        assert_eq!(r.dataset.b, ds.b);
        assert_eq!(r.dataset.factors, ds.factors);
    }

    #[test]
    fn full_turn_is_identity_to_roundoff() {
        let ds = fx(FixtureName::Helicoid, 16).dataset;
        let r = rotate_dataset(&ds, TAU).unwrap();
        assert!(max_diff(&r.dataset, &ds) < 1e-13);
    }

    #[test]
    fn rotation_is_isometry_and_j_squares_to_minus_one() {
        let ds = fx(FixtureName::Catenoid, 16).dataset;
        let r = rotate_dataset(&ds, 0.7).unwrap();
        for k in 0..ds.num_nodes() {
            let g = &ds.g[k];
            assert!((r.rotation[k].transpose() * g * &r.rotation[k] - g).amax() < 1e-12);
            assert!((&r.j[k] * &r.j[k] + Mat::identity(2, 2)).amax() < 1e-13);
        }
    }

    #[test]
    fn non_minimal_data_is_rejected_at_worst_node() {
        let ds = fx(FixtureName::RoundSphereInR3, 16).dataset;
        match rotate_dataset(&ds, 0.3) {
            Err(FamilyError::NotTraceFree { value, .. }) => assert!(value > 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn helicoid_quarter_turn_gives_catenoid_form() {
        // The conjugate of the helicoid in these coordinates is
        // x* = (cosh v sin u, −cosh v cos u, −v), whose second fundamental form with the
        // helicoid normal is B(J·,·).
        let b = fx(FixtureName::Helicoid, 16);
        let r = rotate_dataset(&b.dataset, FRAC_PI_2).unwrap();
        let c = &b.dataset.chart;
        for k in 0..b.dataset.num_nodes() {
            let (iu, iv) = c.indices(k);
            let (u, v) = c.coords(iu, iv);
            let (su, cu) = libm::sincos(u);
            let ch = libm::cosh(v);
            let n = [-su / ch, cu / ch, -libm::sinh(v) / ch];
            let xuu = [-ch * su, ch * cu, 0.0];
            let xuv = [libm::sinh(v) * cu, libm::sinh(v) * su, 0.0];
            let xvv = [ch * su, -ch * cu, 0.0];
            let dot = |a: &[f64; 3]| a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
            let expect = Mat::from_row_slice(2, 2, &[dot(&xuu), dot(&xuv), dot(&xuv), dot(&xvv)]);
            assert!((&r.dataset.b[k][0] - expect).amax() < 1e-13);
        }
    }

    #[test]
    fn trace_free_and_compatible_over_sweep() {
        for name in [FixtureName::Helicoid, FixtureName::Catenoid, FixtureName::Diagonal] {
            let ds = fx(name, 32).dataset;
            let tol = Profile::Default.tolerances();
            let src = compatibility_report(&ds, &tol).unwrap();
            for s in 0..16 {
                let theta = TAU * s as f64 / 16.0;
                let r = rotate_dataset(&ds, theta).unwrap();
                assert!(max_trace(&r.dataset).unwrap().0 <= TRACE_TOL);
                let rep = compatibility_report(&r.dataset, &tol).unwrap();
                assert!(rep.passed(), "{name:?} {theta}: {:?}", rep.failing);
                for class in [ResidualClass::Differential, ResidualClass::Curvature] {
                    assert!(rep.class_max(class) <= 2.0 * src.class_max(class) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn conjugate_member_is_catenoid_up_to_rigid_motion() {
        let mut errs = Vec::new();
        for cells in [16, 32] {
            let b = fx(FixtureName::Helicoid, cells);
            let ds = &b.dataset;
            let fam = generate_family(ds, &[FRAC_PI_2], center(ds), &Profile::Default.tolerances()).unwrap();
            let c = &ds.chart;
            let catenoid: Vec<_> = (0..ds.num_nodes())
                .map(|k| {
                    let (iu, iv) = c.indices(k);
                    let (u, v) = c.coords(iu, iv);
                    let (su, cu) = libm::sincos(u);
                    let ch = libm::cosh(v);
                    BlockVector { blocks: alloc::vec![Vector::from_vec(alloc::vec![ch * su, -ch * cu, -v])] }
                })
                .collect();
            let im = &fam[0].reconstruction.immersion;
            errs.push(align_isometry(&im.points, &catenoid, &ds.spec).unwrap().residual);
        }
        assert!(errs[1] < 1e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn members_share_base_point_normals_and_metric() {
        let b = fx(FixtureName::Diagonal, 32);
        let ds = &b.dataset;
        let base = center(ds);
        let tol = Profile::Default.tolerances();
        let thetas = [0.0, 0.4, FRAC_PI_2, 2.5];
        let fam = generate_family(ds, &thetas, base, &tol).unwrap();
        let x0 = crate::immersion::reconstruct(ds, base, None, None, &tol).unwrap();
        assert_eq!(fam[0].reconstruction.immersion, x0.immersion);
        for m in &fam {
            let im = &m.reconstruction.immersion;
            assert_eq!(im.points[base], x0.immersion.points[base]);
            for (a, b) in im.normals[base].iter().zip(&x0.immersion.normals[base]) {
                assert!((a.to_flat().iter().zip(b.to_flat()).fold(0.0, |s: f64, (p, q)| s.max((p - q).abs()))) < 1e-14);
            }
            // dx_θ(R_θ ∂_a) = dx₀(∂_a) at the base node.
            let rot = &m.rotated.rotation[base];
            for a in 0..2 {
                let mut w = im.du[base].scaled(rot[(0, a)]);
                w.add_scaled(&im.dv[base], rot[(1, a)]);
                let target = if a == 0 { &x0.immersion.du[base] } else { &x0.immersion.dv[base] };
                let diff = w.to_flat().iter().zip(target.to_flat()).fold(0.0, |s: f64, (p, q)| s.max((p - q).abs()));
                assert!(diff < 1e-12);
            }
            assert!(m.reconstruction.report.passed(), "{:?}", m.reconstruction.report.failing);
            assert!(m.reconstruction.report.max("isometry") <= tol.differential);
        }
    }

    #[test]
    fn totally_geodesic_family_is_constant_up_to_isometry() {
        let b = fx(FixtureName::Slice, 32);
        let ds = &b.dataset;
        let fam = generate_family(ds, &[0.0, 1.0, 2.0], center(ds), &Profile::Default.tolerances()).unwrap();
        let x0 = &fam[0].reconstruction.immersion.points;
        for m in &fam[1..] {
            let al = align_isometry(&m.reconstruction.immersion.points, x0, &ds.spec).unwrap();
            assert!(al.residual < 1e-6);
        }
    }

    #[test]
    fn family_is_lipschitz_in_theta() {
        let b = fx(FixtureName::Helicoid, 16);
        let ds = &b.dataset;
        let fam = generate_family(ds, &[0.3, 0.31, 0.32], center(ds), &Profile::Default.tolerances()).unwrap();
        let pts: Vec<_> = fam.iter().map(|m| &m.reconstruction.immersion.points).collect();
        let d1 = sup_geodesic_distance(&ds.spec, pts[0], pts[1]);
        let d2 = sup_geodesic_distance(&ds.spec, pts[0], pts[2]);
        assert!(d1 > 0.0);
        assert!((d2 / d1 - 2.0).abs() < 0.05, "{d1} {d2}");
    }

    #[test]
    fn empty_theta_list_is_rejected() {
        let ds = fx(FixtureName::Helicoid, 8).dataset;
        assert_eq!(
            generate_family(&ds, &[], 0, &Profile::Default.tolerances()).unwrap_err(),
            FamilyError::EmptyThetas
        );
    }

    proptest! {
        #[test]
        fn trace_free_form_commutes_with_j(a in -3.0f64..3.0, b in -3.0f64..3.0, g11 in 0.5f64..2.0,
                                           g12 in -0.4f64..0.4, g22 in 0.5f64..2.0) {
            let g = Mat::from_row_slice(2, 2, &[g11, g12, g12, g22]);
            let (p, pinv) = crate::linalg::orthonormal_frame(&g).unwrap();
            // Trace-free symmetric form in the orthonormal frame, pulled back to coordinates.
            let bf = Mat::from_row_slice(2, 2, &[a, b, b, -a]);
            let bm = pinv.transpose() * bf * &pinv;
            let j = &p * frame_rotation_quarter() * &pinv;
            let lhs = j.transpose() * &bm;
            let rhs = &bm * &j;
            prop_assert!((lhs - rhs).amax() < 1e-13 * (1.0 + bm.amax()));
        }
    }
}
