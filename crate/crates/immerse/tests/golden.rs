//! Golden files under `tests/golden`. Run with `IMMERSE_BLESS=1` to regenerate them.

use std::fs;
use std::path::{Path, PathBuf};

use immerse::cli::file_stem;
use immerse::io::{dataset_to_json, immersion_obj, load_dataset};
use immerse_core::ambient::BlockVector;
use immerse_core::compat::compatibility_verdict;
use immerse_core::fixtures::{generate, FixtureGrid, FixtureName};
use immerse_core::linalg::Vector;
use immerse_core::report::Profile;

const GOLDEN_CELLS: usize = 8;

const DATASETS: [FixtureName; 8] = [
    FixtureName::Slice,
    FixtureName::Diagonal,
    FixtureName::CliffordTorus,
    FixtureName::Helicoid,
    FixtureName::Catenoid,
    FixtureName::Plane,
    FixtureName::RoundSphereInR3,
    FixtureName::GeodesicCylinderS2xR,
];

fn path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn bless() -> bool {
    std::env::var_os("IMMERSE_BLESS").is_some()
}

fn compare_or_bless(file: &str, text: &str) {
    let p = path(file);
    if bless() {
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(&p, text).unwrap();
        return;
    }
    let golden = fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    assert!(golden == text, "{file} differs from its golden copy");
}

#[test]
fn dataset_dumps_match_golden_files() {
    for name in DATASETS {
        let ds = generate(name, FixtureGrid::square(GOLDEN_CELLS)).unwrap().dataset;
        compare_or_bless(&format!("{}.json", file_stem(&name.label())), &dataset_to_json(&ds));
    }
}

#[test]
fn golden_files_load_to_fixture_datasets() {
    for name in DATASETS {
        let file = path(&format!("{}.json", file_stem(&name.label())));
        let loaded = load_dataset(&file).unwrap();
        let fresh = generate(name, FixtureGrid::square(GOLDEN_CELLS)).unwrap().dataset;
        assert_eq!(loaded, fresh, "{name:?}");
    }
}

#[test]
fn slice_golden_has_expected_operators() {
    let ds = load_dataset(&path("slice.json")).unwrap();
    assert_eq!((ds.base_dim, ds.bundle_rank), (2, 2));
    let n = ds.chart.num_nodes();
    for k in 0..n {
        let q = ds.quadruple(k, 0).unwrap();
        assert!((q.f - immerse_core::linalg::Mat::identity(2, 2)).amax() <= 1e-15);
        for i in 0..2 {
            assert_eq!(ds.factors[i].h[k].amax(), 0.0);
        }
    }
    assert!(compatibility_verdict(&ds, Profile::Default).unwrap().passed());
}

#[test]
fn conjugate_catenoid_mesh() {
    let mut im = generate(FixtureName::Helicoid, FixtureGrid::square(32)).unwrap().truth;
    let c = im.chart.clone();
    for (k, p) in im.points.iter_mut().enumerate() {
        let (iu, iv) = c.indices(k);
        let (u, v) = c.coords(iu, iv);
        let (su, cu) = libm::sincos(u);
        let ch = libm::cosh(v);
        *p = BlockVector { blocks: vec![Vector::from_vec(vec![ch * su, -ch * cu, -v])] };
    }
    compare_or_bless("conjugate_catenoid_32.obj", &immersion_obj(&im, &[0, 1, 2]));
}
