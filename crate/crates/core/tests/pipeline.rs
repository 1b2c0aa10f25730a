//! Check, reconstruct and verify every fixture through the public API.

use immerse_core::compat::{compatibility_verdict, describe_failure};
use immerse_core::family::{generate_family, max_trace};
use immerse_core::fixtures::{generate, list_fixtures, FixtureGrid, FixtureName};
use immerse_core::immersion::reconstruct;
use immerse_core::report::Profile;

const CELLS: usize = 16;
/// Truth alignment bound in units of h², above the largest constant seen at 64×64 cells.
const ALIGN_C: f64 = 0.15;

fn h() -> f64 {
    1.0 / CELLS as f64
}

#[test]
fn every_fixture_checks_reconstructs_and_aligns() {
    let tol = Profile::Default.tolerances();
    for (label, _) in list_fixtures() {
        let b = generate(FixtureName::parse(&label).unwrap(), FixtureGrid::square(CELLS)).unwrap();
        let ds = &b.dataset;
        let report = compatibility_verdict(ds, Profile::Default).unwrap();
        assert!(report.passed(), "{label}: {:?}", describe_failure(&report));
        let base = ds.chart.node(ds.chart.nu / 2, ds.chart.nv / 2);
        let rec = reconstruct(ds, base, None, Some(&b.truth), &tol).unwrap();
        assert!(rec.report.passed(), "{label}: {:?}", describe_failure(&rec.report));
        let residual = rec.alignment.unwrap().residual;
        assert!(residual <= ALIGN_C * h() * h(), "{label}: {residual:e}");
    }
}

#[test]
fn scaled_second_fundamental_form_fails_gauss() {
    let mut ds = generate(FixtureName::RoundSphereInR3, FixtureGrid::square(CELLS)).unwrap().dataset;
    for bs in &mut ds.b {
        for m in bs.iter_mut() {
            *m *= 1.1;
        }
    }
    let report = compatibility_verdict(&ds, Profile::Default).unwrap();
    assert!(!report.passed());
    assert!(describe_failure(&report).unwrap().starts_with("gauss"));
}

#[test]
fn helicoid_family_members_stay_minimal_and_verified() {
    let ds = generate(FixtureName::Helicoid, FixtureGrid::square(CELLS)).unwrap().dataset;
    let tol = Profile::Default.tolerances();
    let thetas = [0.0, 0.4, core::f64::consts::FRAC_PI_2, 2.5];
    let base = ds.chart.node(CELLS / 2, CELLS / 2);
    let members = generate_family(&ds, &thetas, base, &tol).unwrap();
    assert_eq!(members.len(), thetas.len());
    for m in &members {
        assert!(max_trace(&m.rotated.dataset).unwrap().0 <= 1e-10, "theta {}", m.theta);
        assert!(m.reconstruction.report.passed(), "theta {}", m.theta);
    }
}

#[test]
fn family_rejects_non_minimal_surfaces() {
    let ds = generate(FixtureName::RoundSphereInR3, FixtureGrid::square(CELLS)).unwrap().dataset;
    let tol = Profile::Default.tolerances();
    assert!(generate_family(&ds, &[1.0], 0, &tol).is_err());
}
