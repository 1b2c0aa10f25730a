//! Closed-form surfaces in products of space forms, sampled into datasets together with
//! their true immersions.
//!
//! Each surface supplies its position, first and second partial derivatives, an
//! orthonormal normal frame and the frame's derivatives. Every dataset field is an inner
//! product of those vectors, so nothing is differentiated numerically.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use libm::{cos, cosh, sin, sinh, sqrt};

use crate::ambient::{BlockVector, MultiproductSpec, SpaceFormFactor};
use crate::dataset::{Chart, FactorFields, GeometricDataset};
use crate::error::FixtureError;
use crate::immersion::ImmersionField;
use crate::linalg::{skew_part, spd_inverse, sym_part, Mat, Vector};

/// Named fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixtureName {
    Slice,
    Diagonal,
    CliffordTorus,
    ProductOfCurves(f64, f64),
    Helicoid,
    Catenoid,
    Plane,
    RoundSphereInR3,
    GeodesicCylinderS2xR,
}

impl FixtureName {
    /// Accepts the plain names and `product_of_curves(k1,k2)`.
    pub fn parse(s: &str) -> Result<Self, FixtureError> {
        let s = s.trim();
        let named = match s {
            "slice" => Some(Self::Slice),
            "diagonal" => Some(Self::Diagonal),
            "clifford_torus" => Some(Self::CliffordTorus),
            "helicoid" => Some(Self::Helicoid),
            "catenoid" => Some(Self::Catenoid),
            "plane" => Some(Self::Plane),
            "round_sphere_in_r3" => Some(Self::RoundSphereInR3),
            "geodesic_cylinder_s2xr" => Some(Self::GeodesicCylinderS2xR),
            _ => None,
        };
        if let Some(n) = named {
            return Ok(n);
        }
        let unknown = || FixtureError::Unknown(s.to_string());
        let args = s
            .strip_prefix("product_of_curves(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(unknown)?;
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 2 {
            return Err(unknown());
        }
        let k1: f64 = parts[0].trim().parse().map_err(|_| unknown())?;
        let k2: f64 = parts[1].trim().parse().map_err(|_| unknown())?;
        if !(k1.is_finite() && k2.is_finite()) {
            return Err(unknown());
        }
        Ok(Self::ProductOfCurves(k1, k2))
    }

    pub fn label(&self) -> String {
        match self {
            Self::Slice => "slice".into(),
            Self::Diagonal => "diagonal".into(),
            Self::CliffordTorus => "clifford_torus".into(),
            Self::ProductOfCurves(a, b) => format!("product_of_curves({a},{b})"),
            Self::Helicoid => "helicoid".into(),
            Self::Catenoid => "catenoid".into(),
            Self::Plane => "plane".into(),
            Self::RoundSphereInR3 => "round_sphere_in_r3".into(),
            Self::GeodesicCylinderS2xR => "geodesic_cylinder_s2xr".into(),
        }
    }

    pub fn spec(&self) -> MultiproductSpec {
        let f = SpaceFormFactor::new;
        let factors = match self {
            Self::Slice | Self::Diagonal | Self::CliffordTorus | Self::ProductOfCurves(..) => {
                vec![f(2, 1.0), f(2, 1.0)]
            }
            Self::Helicoid | Self::Catenoid | Self::Plane | Self::RoundSphereInR3 => vec![f(3, 0.0)],
            Self::GeodesicCylinderS2xR => vec![f(2, 1.0), f(1, 0.0)],
        };
        MultiproductSpec::new(factors).expect("fixture specs are valid")
    }
}

/// Fixture names and their target spaces.
pub fn list_fixtures() -> Vec<(String, MultiproductSpec)> {
    [
        FixtureName::Slice,
        FixtureName::Diagonal,
        FixtureName::CliffordTorus,
        FixtureName::ProductOfCurves(0.5, 1.0),
        FixtureName::Helicoid,
        FixtureName::Catenoid,
        FixtureName::Plane,
        FixtureName::RoundSphereInR3,
        FixtureName::GeodesicCylinderS2xR,
    ]
    .iter()
    .map(|n| (n.label(), n.spec()))
    .collect()
}

/// Grid request: cells per direction and which directions close up periodically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureGrid {
    pub cells_u: usize,
    pub cells_v: usize,
    pub periodic_u: bool,
    pub periodic_v: bool,
}

impl FixtureGrid {
    pub fn square(cells: usize) -> Self {
        Self {
            cells_u: cells,
            cells_v: cells,
            periodic_u: false,
            periodic_v: false,
        }
    }

    pub fn periodic(mut self, u: bool, v: bool) -> Self {
        self.periodic_u = u;
        self.periodic_v = v;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureBundle {
    pub name: String,
    pub dataset: GeometricDataset,
    pub truth: ImmersionField,
    /// Gaussian curvature per node.
    pub gauss_curvature: Vec<f64>,
    /// `|B|²` per node.
    pub b_norm_sq: Vec<f64>,
    /// `(C₁, C₂) = (⟨J₁e₁,e₂⟩, ⟨J₂e₁,e₂⟩)` per node for surfaces in `S² × S²`.
    pub kahler: Option<Vec<[f64; 2]>>,
}

/// Position, partial derivatives, normal frame and its derivatives at one parameter value,
/// all as flat ambient coordinate vectors.
pub struct Jet {
    pub x: Vector,
    pub xu: Vector,
    pub xv: Vector,
    pub xuu: Vector,
    pub xuv: Vector,
    pub xvv: Vector,
    pub normals: Vec<Vector>,
    pub normals_u: Vec<Vector>,
    pub normals_v: Vec<Vector>,
}

/// Parameter domain `[u0, u0 + lu] × [v0, v0 + lv]` and periodic periods.
struct Domain {
    u0: f64,
    v0: f64,
    period_u: Option<f64>,
    period_v: Option<f64>,
}

fn v3(a: f64, b: f64, c: f64) -> [f64; 3] {
    [a, b, c]
}

fn cat(parts: &[&[f64]]) -> Vector {
    Vector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

const Z3: [f64; 3] = [0.0; 3];

/// The band `(cos v cos u, cos v sin u, sin v)` of the unit sphere: position, derivatives
/// and the tangent frame `e₁ = x_u/cos v`, `e₂ = x_v` with its derivatives.
struct SphereBand {
    x: [f64; 3],
    xu: [f64; 3],
    xv: [f64; 3],
    xuu: [f64; 3],
    xuv: [f64; 3],
    xvv: [f64; 3],
    e: [[f64; 3]; 2],
    e_u: [[f64; 3]; 2],
    e_v: [[f64; 3]; 2],
}

fn sphere_band(u: f64, v: f64) -> SphereBand {
    let (cu, su, cv, sv) = (cos(u), sin(u), cos(v), sin(v));
    SphereBand {
        x: v3(cv * cu, cv * su, sv),
        xu: v3(-cv * su, cv * cu, 0.0),
        xv: v3(-sv * cu, -sv * su, cv),
        xuu: v3(-cv * cu, -cv * su, 0.0),
        xuv: v3(sv * su, -sv * cu, 0.0),
        xvv: v3(-cv * cu, -cv * su, -sv),
        e: [v3(-su, cu, 0.0), v3(-sv * cu, -sv * su, cv)],
        e_u: [v3(-cu, -su, 0.0), v3(sv * su, -sv * cu, 0.0)],
        e_v: [Z3, v3(-cv * cu, -cv * su, -sv)],
    }
}

/// Arc-length circle of geodesic curvature `κ` on the unit sphere with its unit normal
/// `ν = α × α'`, returning `(α, α', α'', ν, ν')`.
fn small_circle(kappa: f64, s: f64) -> [[f64; 3]; 5] {
    let r = 1.0 / sqrt(1.0 + kappa * kappa);
    let z = kappa * r;
    let (c, sn) = (cos(s / r), sin(s / r));
    [
        v3(r * c, r * sn, z),
        v3(-sn, c, 0.0),
        v3(-c / r, -sn / r, 0.0),
        v3(-z * c, -z * sn, r),
        v3(z * sn / r, -z * c / r, 0.0),
    ]
}

fn circle_period(kappa: f64) -> f64 {
    TAU / sqrt(1.0 + kappa * kappa)
}

fn zeros(n: usize) -> Vector {
    Vector::zeros(n)
}

fn jet(name: FixtureName, u: f64, v: f64) -> Jet {
    match name {
        FixtureName::Slice => {
            let b = sphere_band(u, v);
            let p = [0.0, 0.0, 1.0];
            Jet {
                x: cat(&[&b.x, &p]),
                xu: cat(&[&b.xu, &Z3]),
                xv: cat(&[&b.xv, &Z3]),
                xuu: cat(&[&b.xuu, &Z3]),
                xuv: cat(&[&b.xuv, &Z3]),
                xvv: cat(&[&b.xvv, &Z3]),
                normals: vec![cat(&[&Z3, &[1.0, 0.0, 0.0]]), cat(&[&Z3, &[0.0, 1.0, 0.0]])],
                normals_u: vec![zeros(6), zeros(6)],
                normals_v: vec![zeros(6), zeros(6)],
            }
        }
        FixtureName::Diagonal => {
            let b = sphere_band(u, v);
            let neg = |a: [f64; 3]| a.map(|x| -x);
            let k = 1.0 / sqrt(2.0);
            let sc = |a: [f64; 3]| a.map(|x| k * x);
            let pair = |a: [f64; 3]| cat(&[&sc(a), &sc(a)]);
            Jet {
                x: cat(&[&b.x, &neg(b.x)]),
                xu: cat(&[&b.xu, &neg(b.xu)]),
                xv: cat(&[&b.xv, &neg(b.xv)]),
                xuu: cat(&[&b.xuu, &neg(b.xuu)]),
                xuv: cat(&[&b.xuv, &neg(b.xuv)]),
                xvv: cat(&[&b.xvv, &neg(b.xvv)]),
                normals: vec![pair(b.e[0]), pair(b.e[1])],
                normals_u: vec![pair(b.e_u[0]), pair(b.e_u[1])],
                normals_v: vec![pair(b.e_v[0]), pair(b.e_v[1])],
            }
        }
        FixtureName::CliffordTorus => jet(FixtureName::ProductOfCurves(0.0, 0.0), u, v),
        FixtureName::ProductOfCurves(k1, k2) => {
            let [a, ta, aa, na, dna] = small_circle(k1, u);
            let [b, tb, bb, nb, dnb] = small_circle(k2, v);
            Jet {
                x: cat(&[&a, &b]),
                xu: cat(&[&ta, &Z3]),
                xv: cat(&[&Z3, &tb]),
                xuu: cat(&[&aa, &Z3]),
                xuv: zeros(6),
                xvv: cat(&[&Z3, &bb]),
                normals: vec![cat(&[&na, &Z3]), cat(&[&Z3, &nb])],
                normals_u: vec![cat(&[&dna, &Z3]), zeros(6)],
                normals_v: vec![zeros(6), cat(&[&Z3, &dnb])],
            }
        }
        FixtureName::Helicoid => {
            let (cu, su, ch, sh) = (cos(u), sin(u), cosh(v), sinh(v));
            Jet {
                x: cat(&[&[sh * cu, sh * su, u]]),
                xu: cat(&[&[-sh * su, sh * cu, 1.0]]),
                xv: cat(&[&[ch * cu, ch * su, 0.0]]),
                xuu: cat(&[&[-sh * cu, -sh * su, 0.0]]),
                xuv: cat(&[&[-ch * su, ch * cu, 0.0]]),
                xvv: cat(&[&[sh * cu, sh * su, 0.0]]),
                normals: vec![cat(&[&[-su / ch, cu / ch, -sh / ch]])],
                normals_u: vec![zeros(3)],
                normals_v: vec![zeros(3)],
            }
        }
        FixtureName::Catenoid => {
            let (cu, su, ch, sh) = (cos(u), sin(u), cosh(v), sinh(v));
            Jet {
                x: cat(&[&[ch * cu, ch * su, v]]),
                xu: cat(&[&[-ch * su, ch * cu, 0.0]]),
                xv: cat(&[&[sh * cu, sh * su, 1.0]]),
                xuu: cat(&[&[-ch * cu, -ch * su, 0.0]]),
                xuv: cat(&[&[-sh * su, sh * cu, 0.0]]),
                xvv: cat(&[&[ch * cu, ch * su, 0.0]]),
                normals: vec![cat(&[&[-cu / ch, -su / ch, sh / ch]])],
                normals_u: vec![zeros(3)],
                normals_v: vec![zeros(3)],
            }
        }
        FixtureName::Plane => Jet {
            x: cat(&[&[u, v, 0.0]]),
            xu: cat(&[&[1.0, 0.0, 0.0]]),
            xv: cat(&[&[0.0, 1.0, 0.0]]),
            xuu: zeros(3),
            xuv: zeros(3),
            xvv: zeros(3),
            normals: vec![cat(&[&[0.0, 0.0, 1.0]])],
            normals_u: vec![zeros(3)],
            normals_v: vec![zeros(3)],
        },
        FixtureName::RoundSphereInR3 => {
            let b = sphere_band(u, v);
            Jet {
                x: cat(&[&b.x]),
                xu: cat(&[&b.xu]),
                xv: cat(&[&b.xv]),
                xuu: cat(&[&b.xuu]),
                xuv: cat(&[&b.xuv]),
                xvv: cat(&[&b.xvv]),
                normals: vec![cat(&[&b.x])],
                normals_u: vec![zeros(3)],
                normals_v: vec![zeros(3)],
            }
        }
        FixtureName::GeodesicCylinderS2xR => {
            let (cu, su) = (cos(u), sin(u));
            Jet {
                x: cat(&[&[cu, su, 0.0], &[v]]),
                xu: cat(&[&[-su, cu, 0.0], &[0.0]]),
                xv: cat(&[&Z3, &[1.0]]),
                xuu: cat(&[&[-cu, -su, 0.0], &[0.0]]),
                xuv: zeros(4),
                xvv: zeros(4),
                normals: vec![cat(&[&[0.0, 0.0, 1.0], &[0.0]])],
                normals_u: vec![zeros(4)],
                normals_v: vec![zeros(4)],
            }
        }
    }
}

fn gauss_closed_form(name: FixtureName, _u: f64, v: f64) -> f64 {
    match name {
        FixtureName::Slice | FixtureName::RoundSphereInR3 => 1.0,
        FixtureName::Diagonal => 0.5,
        FixtureName::CliffordTorus
        | FixtureName::ProductOfCurves(..)
        | FixtureName::Plane
        | FixtureName::GeodesicCylinderS2xR => 0.0,
        FixtureName::Helicoid | FixtureName::Catenoid => {
            let c2 = cosh(v) * cosh(v);
            -1.0 / (c2 * c2)
        }
    }
}

fn domain(name: FixtureName, grid: &FixtureGrid) -> Result<Domain, FixtureError> {
    let label = name.label();
    let refuse = |direction: &'static str| FixtureError::Periodicity {
        name: label.clone(),
        direction,
    };
    let (u0, v0, pu, pv) = match name {
        FixtureName::Slice | FixtureName::Diagonal | FixtureName::RoundSphereInR3 => {
            (0.0, -0.5, Some(TAU), None)
        }
        FixtureName::CliffordTorus => (0.0, 0.0, Some(TAU), Some(TAU)),
        FixtureName::ProductOfCurves(k1, k2) => {
            (0.0, 0.0, Some(circle_period(k1)), Some(circle_period(k2)))
        }
        FixtureName::Helicoid => (0.0, -0.5, None, None),
        FixtureName::Catenoid => (0.0, -0.5, Some(TAU), None),
        FixtureName::Plane => (0.0, 0.0, None, None),
        FixtureName::GeodesicCylinderS2xR => (0.0, 0.0, Some(TAU), None),
    };
    if grid.periodic_u && pu.is_none() {
        return Err(refuse("u"));
    }
    if grid.periodic_v && pv.is_none() {
        return Err(refuse("v"));
    }
    Ok(Domain {
        u0,
        v0,
        period_u: if grid.periodic_u { pu } else { None },
        period_v: if grid.periodic_v { pv } else { None },
    })
}

/// Samples a named fixture on a grid. Non-periodic directions span unit length, so the
/// spacing is `1/cells`; periodic ones span one period.
pub fn generate(name: FixtureName, grid: FixtureGrid) -> Result<FixtureBundle, FixtureError> {
    for cells in [grid.cells_u, grid.cells_v] {
        if cells < 4 {
            return Err(FixtureError::Grid(cells));
        }
    }
    let dom = domain(name, &grid)?;
    let hu = dom.period_u.unwrap_or(1.0) / grid.cells_u as f64;
    let hv = dom.period_v.unwrap_or(1.0) / grid.cells_v as f64;
    let chart = Chart::new(grid.cells_u + 1, grid.cells_v + 1, hu, hv)
        .map_err(FixtureError::Dataset)?
        .with_origin(dom.u0, dom.v0)
        .with_periodic(grid.periodic_u, grid.periodic_v);
    sample(name.label(), name.spec(), chart, |u, v| jet(name, u, v), |u, v| {
        gauss_closed_form(name, u, v)
    })
}

/// `H² × S²` slice: the hyperboloid patch `(cosh u cosh v, sinh u cosh v, sinh v)` times the
/// point `(0,0,1)`. Exercises negative curvature factors.
pub fn hyperbolic_slice(cells: usize) -> Result<FixtureBundle, FixtureError> {
    if cells < 4 {
        return Err(FixtureError::Grid(cells));
    }
    let spec = MultiproductSpec::new(vec![SpaceFormFactor::new(2, -1.0), SpaceFormFactor::new(2, 1.0)])
        .expect("valid spec");
    let h = 1.0 / cells as f64;
    let chart = Chart::new(cells + 1, cells + 1, h, h)
        .map_err(FixtureError::Dataset)?
        .with_origin(0.0, -0.5);
    let jet = |u: f64, v: f64| {
        let (cu, su, cv, sv) = (cosh(u), sinh(u), cosh(v), sinh(v));
        Jet {
            x: cat(&[&[cu * cv, su * cv, sv], &[0.0, 0.0, 1.0]]),
            xu: cat(&[&[su * cv, cu * cv, 0.0], &Z3]),
            xv: cat(&[&[cu * sv, su * sv, cv], &Z3]),
            xuu: cat(&[&[cu * cv, su * cv, 0.0], &Z3]),
            xuv: cat(&[&[su * sv, cu * sv, 0.0], &Z3]),
            xvv: cat(&[&[cu * cv, su * cv, sv], &Z3]),
            normals: vec![cat(&[&Z3, &[1.0, 0.0, 0.0]]), cat(&[&Z3, &[0.0, 1.0, 0.0]])],
            normals_u: vec![zeros(6), zeros(6)],
            normals_v: vec![zeros(6), zeros(6)],
        }
    };
    sample("hyperbolic_slice".into(), spec, chart, jet, |_, _| -1.0)
}

fn inner(sig: &Vector, a: &Vector, b: &Vector) -> f64 {
    (0..a.len()).map(|k| sig[k] * a[k] * b[k]).sum()
}

/// `J(x) v = x × v` on the unit sphere.
fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn sample(
    name: String,
    spec: MultiproductSpec,
    chart: Chart,
    jet: impl Fn(f64, f64) -> Jet,
    gauss: impl Fn(f64, f64) -> f64,
) -> Result<FixtureBundle, FixtureError> {
    let sig = spec.signature();
    let n = 2;
    let d = spec.manifold_dim() - n;
    let dims = spec.ambient_dims();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &x| {
            let o = *acc;
            *acc += x;
            Some(o)
        })
        .collect();
    let project = |i: usize, v: &Vector| {
        let mut out = Vector::zeros(v.len());
        for k in offsets[i]..offsets[i] + dims[i] {
            out[k] = v[k];
        }
        out
    };
    let to_block = |v: &Vector| BlockVector::from_flat(&spec, v.as_slice()).expect("fixture dims");

    let nodes = chart.num_nodes();
    let m = spec.len();
    let mut g = Vec::with_capacity(nodes);
    let mut b = Vec::with_capacity(nodes);
    let mut eu = Vec::with_capacity(nodes);
    let mut ev = Vec::with_capacity(nodes);
    let mut factors: Vec<FactorFields> = (0..m)
        .map(|_| FactorFields {
            f: Vec::with_capacity(nodes),
            h: Vec::with_capacity(nodes),
            t: Vec::with_capacity(nodes),
        })
        .collect();
    let mut points = Vec::with_capacity(nodes);
    let mut du = Vec::with_capacity(nodes);
    let mut dv = Vec::with_capacity(nodes);
    let mut normals = Vec::with_capacity(nodes);
    let mut gauss_curvature = Vec::with_capacity(nodes);
    let mut b_norm_sq = Vec::with_capacity(nodes);
    let mut kahler = Vec::with_capacity(nodes);
    let s2xs2 = spec.is_s2_x_s2();

    for node in 0..nodes {
        let (mut iu, mut iv) = chart.indices(node);
        // Periodic closing nodes copy their partner exactly.
        if chart.periodic_u && iu == chart.nu - 1 {
            iu = 0;
        }
        if chart.periodic_v && iv == chart.nv - 1 {
            iv = 0;
        }
        let (u, v) = chart.coords(iu, iv);
        let j = jet(u, v);
        let xa = [&j.xu, &j.xv];
        let gm = Mat::from_fn(n, n, |a, c| inner(&sig, xa[a], xa[c]));
        let gm = sym_part(&gm);
        let second = [[&j.xuu, &j.xuv], [&j.xuv, &j.xvv]];
        let bs: Vec<Mat> = j
            .normals
            .iter()
            .map(|nu| sym_part(&Mat::from_fn(n, n, |a, c| inner(&sig, second[a][c], nu))))
            .collect();
        let omega = |dn: &[Vector]| {
            skew_part(&Mat::from_fn(d, d, |alpha, beta| inner(&sig, &dn[beta], &j.normals[alpha])))
        };
        let gi = spd_inverse(&gm).expect("fixture metrics are positive definite");
        for (i, fac) in factors.iter_mut().enumerate() {
            let pxa = [project(i, &j.xu), project(i, &j.xv)];
            let gf = Mat::from_fn(n, n, |c, bb| inner(&sig, xa[c], &pxa[bb]));
            fac.f.push(&gi * gf);
            fac.h.push(Mat::from_fn(d, n, |alpha, bb| inner(&sig, &j.normals[alpha], &pxa[bb])));
            let pn: Vec<Vector> = j.normals.iter().map(|nu| project(i, nu)).collect();
            fac.t.push(sym_part(&Mat::from_fn(d, d, |alpha, beta| {
                inner(&sig, &j.normals[alpha], &pn[beta])
            })));
        }
        eu.push(omega(&j.normals_u));
        ev.push(omega(&j.normals_v));
        let (p, _) = crate::linalg::orthonormal_frame(&gm).expect("positive definite");
        b_norm_sq.push(bs.iter().map(|bm| (p.transpose() * bm * &p).norm_squared()).sum());
        if s2xs2 {
            let e1 = &j.xu * p[(0, 0)] + &j.xv * p[(1, 0)];
            let e2 = &j.xu * p[(0, 1)] + &j.xv * p[(1, 1)];
            let j1 = cross(&j.x.as_slice()[0..3], &e1.as_slice()[0..3]);
            let j2 = cross(&j.x.as_slice()[3..6], &e1.as_slice()[3..6]);
            let dot = |a: &[f64; 3], off: usize| (0..3).map(|k| a[k] * e2[off + k]).sum::<f64>();
            let (c1, c2) = (dot(&j1, 0), dot(&j2, 3));
            kahler.push([c1 + c2, c1 - c2]);
        }
        gauss_curvature.push(gauss(u, v));
        b.push(bs);
        g.push(gm);
        points.push(to_block(&j.x));
        du.push(to_block(&j.xu));
        dv.push(to_block(&j.xv));
        normals.push(j.normals.iter().map(to_block).collect());
    }
    let dataset = GeometricDataset::new(spec.clone(), chart.clone(), n, d, g, b, [eu, ev], factors)?;
    Ok(FixtureBundle {
        name,
        dataset,
        truth: ImmersionField {
            spec,
            chart,
            points,
            du,
            dv,
            normals,
        },
        gauss_curvature,
        b_norm_sq,
        kahler: s2xs2.then_some(kahler),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{check_algebraic, compatibility_verdict};
    use crate::report::Profile;

    fn gen(name: FixtureName, cells: usize) -> FixtureBundle {
        generate(name, FixtureGrid::square(cells)).unwrap()
    }

    #[test]
    fn registry_contents() {
        let list = list_fixtures();
        assert!(list.iter().any(|(n, _)| n == "slice"));
        let (_, spec) = list.iter().find(|(n, _)| n == "helicoid").unwrap();
        assert_eq!(spec.len(), 1);
        assert_eq!(spec.factors()[0], SpaceFormFactor::new(3, 0.0));
        for (n, _) in &list {
            let name = FixtureName::parse(n).unwrap();
            generate(name, FixtureGrid::square(32)).unwrap();
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            FixtureName::parse("product_of_curves(0.5, -1)").unwrap(),
            FixtureName::ProductOfCurves(0.5, -1.0)
        );
        assert!(matches!(FixtureName::parse("torus"), Err(FixtureError::Unknown(_))));
        assert!(FixtureName::parse("product_of_curves(1)").is_err());
    }

    #[test]
    fn slice_fields() {
        let fx = gen(FixtureName::Slice, 8);
        let ds = &fx.dataset;
        for k in 0..ds.num_nodes() {
            assert!(ds.b[k].iter().all(|m| m.amax() == 0.0));
            assert!((&ds.factors[0].f[k] - Mat::identity(2, 2)).amax() < 1e-15);
            assert!(ds.factors.iter().all(|f| f.h[k].amax() == 0.0));
            assert_eq!(fx.gauss_curvature[k], 1.0);
        }
    }

    #[test]
    fn clifford_fields_and_bitwise_product_of_great_circles() {
        let fx = gen(FixtureName::CliffordTorus, 8);
        let ds = &fx.dataset;
        let diag10 = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        for k in 0..ds.num_nodes() {
            assert!(ds.b[k].iter().all(|m| m.amax() == 0.0));
            assert!((&ds.factors[0].f[k] - &diag10).amax() < 1e-15);
            assert!((&ds.factors[0].t[k] - &diag10).amax() < 1e-15);
            assert!(ds.factors.iter().all(|f| f.h[k].amax() == 0.0));
        }
        let pc = gen(FixtureName::ProductOfCurves(0.0, 0.0), 8);
        assert_eq!(pc.dataset, fx.dataset);
        assert_eq!(pc.truth, fx.truth);
    }

    #[test]
    fn helicoid_closed_forms() {
        let fx = gen(FixtureName::Helicoid, 16);
        let ds = &fx.dataset;
        for k in 0..ds.num_nodes() {
            let (iu, iv) = ds.chart.indices(k);
            let v = ds.chart.coords(iu, iv).1;
            let g = &ds.g[k];
            let c2 = cosh(v) * cosh(v);
            assert!((g - Mat::identity(2, 2) * c2).amax() < 1e-14);
            let tr = (spd_inverse(g).unwrap() * &ds.b[k][0]).trace();
            assert!(tr.abs() < 1e-15);
            assert!((&ds.b[k][0] - Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).amax() < 1e-15);
            assert!((fx.gauss_curvature[k] + 1.0 / (c2 * c2)).abs() < 1e-15);
        }
    }

    #[test]
    fn periodicity_refused_where_invalid() {
        let e = generate(FixtureName::Helicoid, FixtureGrid::square(8).periodic(true, false));
        assert!(matches!(e, Err(FixtureError::Periodicity { direction: "u", .. })));
        let e = generate(FixtureName::Slice, FixtureGrid::square(8).periodic(false, true));
        assert!(matches!(e, Err(FixtureError::Periodicity { direction: "v", .. })));
        generate(FixtureName::CliffordTorus, FixtureGrid::square(8).periodic(true, true)).unwrap();
        generate(FixtureName::Catenoid, FixtureGrid::square(8).periodic(true, false)).unwrap();
        assert_eq!(generate(FixtureName::Plane, FixtureGrid::square(3)), Err(FixtureError::Grid(3)));
    }

    #[test]
    fn truth_points_lie_on_factors() {
        for (label, _) in list_fixtures() {
            let fx = generate(FixtureName::parse(&label).unwrap(), FixtureGrid::square(8)).unwrap();
            for p in &fx.truth.points {
                let r = crate::ambient::factor_constraint_residual(p, &fx.truth.spec).unwrap();
                assert!(r.iter().all(|x| *x < 1e-14), "{label}");
            }
        }
        let fx = hyperbolic_slice(8).unwrap();
        for p in &fx.truth.points {
            let r = crate::ambient::factor_constraint_residual(p, &fx.truth.spec).unwrap();
            assert!(r.iter().all(|x| *x < 1e-13));
            assert!(p.blocks[0][0] > 0.0);
        }
    }

    #[test]
    fn all_fixtures_pass_algebraic_checks() {
        let tol = Profile::Strict.tolerances();
        for (label, _) in list_fixtures() {
            let fx = generate(FixtureName::parse(&label).unwrap(), FixtureGrid::square(16)).unwrap();
            let r = check_algebraic(&fx.dataset, &tol).unwrap();
            for (key, field) in &r.residuals {
                assert!(field.max <= 1e-12, "{label}: {key} = {:e}", field.max);
            }
            let dims: Vec<usize> = fx.dataset.spec.factors().iter().map(|f| f.dim).collect();
            for (rk, dim) in r.ranks.iter().zip(dims) {
                assert_eq!(*rk, [dim, dim], "{label}");
            }
        }
    }

    #[test]
    fn all_fixtures_pass_strict_verdict_at_64() {
        for (label, _) in list_fixtures() {
            let fx = generate(FixtureName::parse(&label).unwrap(), FixtureGrid::square(64)).unwrap();
            let r = compatibility_verdict(&fx.dataset, Profile::Strict).unwrap();
            assert!(r.passed(), "{label}: {:?}", crate::compat::describe_failure(&r));
        }
    }
}
