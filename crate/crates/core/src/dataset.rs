//! Discrete submanifold data on a rectangular chart and the quantities derived from it.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::ambient::MultiproductSpec;
use crate::error::DatasetError;
use crate::linalg::{axpy, orthonormal_frame, spd_inverse, Mat, Vector};

/// Chart direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dir {
    U = 0,
    V = 1,
}

impl Dir {
    pub const BOTH: [Dir; 2] = [Dir::U, Dir::V];
}

/// Weighted node list of a finite-difference formula.
pub type Stencil = Vec<(usize, f64)>;

/// Uniform grid on a coordinate rectangle.
///
/// A periodic direction stores its closing node twice: node `N−1` coincides with node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub nu: usize,
    pub nv: usize,
    pub hu: f64,
    pub hv: f64,
    pub periodic_u: bool,
    pub periodic_v: bool,
    pub u0: f64,
    pub v0: f64,
}

impl Chart {
    pub fn new(nu: usize, nv: usize, hu: f64, hv: f64) -> Result<Self, DatasetError> {
        let c = Self {
            nu,
            nv,
            hu,
            hv,
            periodic_u: false,
            periodic_v: false,
            u0: 0.0,
            v0: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_origin(mut self, u0: f64, v0: f64) -> Self {
        self.u0 = u0;
        self.v0 = v0;
        self
    }

    pub fn with_periodic(mut self, periodic_u: bool, periodic_v: bool) -> Self {
        self.periodic_u = periodic_u;
        self.periodic_v = periodic_v;
        self
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.nu < 5 || self.nv < 5 {
            return Err(DatasetError::Chart(format!(
                "need at least 5 nodes per direction, got {}x{}",
                self.nu, self.nv
            )));
        }
        if !(self.hu > 0.0 && self.hv > 0.0 && self.hu.is_finite() && self.hv.is_finite()) {
            return Err(DatasetError::Chart(format!(
                "spacings must be positive and finite, got ({}, {})",
                self.hu, self.hv
            )));
        }
        if !(self.u0.is_finite() && self.v0.is_finite()) {
            return Err(DatasetError::Chart("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nu * self.nv
    }

    pub fn node(&self, iu: usize, iv: usize) -> usize {
        iv * self.nu + iu
    }

    pub fn indices(&self, node: usize) -> (usize, usize) {
        (node % self.nu, node / self.nu)
    }

    pub fn coords(&self, iu: usize, iv: usize) -> (f64, f64) {
        (
            self.u0 + iu as f64 * self.hu,
            self.v0 + iv as f64 * self.hv,
        )
    }

    fn axis(&self, dir: Dir) -> (usize, f64, bool) {
        match dir {
            Dir::U => (self.nu, self.hu, self.periodic_u),
            Dir::V => (self.nv, self.hv, self.periodic_v),
        }
    }

    pub fn spacing(&self, dir: Dir) -> f64 {
        self.axis(dir).1
    }

    pub fn is_periodic(&self, dir: Dir) -> bool {
        self.axis(dir).2
    }

    pub fn len(&self, dir: Dir) -> usize {
        self.axis(dir).0
    }

    /// True for the stored copy of a periodic closing node.
    pub fn is_duplicate(&self, iu: usize, iv: usize) -> bool {
        (self.periodic_u && iu == self.nu - 1) || (self.periodic_v && iv == self.nv - 1)
    }

    /// Distance in nodes to the nearest non-periodic boundary.
    pub fn margin(&self, iu: usize, iv: usize) -> usize {
        let mut m = usize::MAX;
        if !self.periodic_u {
            m = m.min(iu).min(self.nu - 1 - iu);
        }
        if !self.periodic_v {
            m = m.min(iv).min(self.nv - 1 - iv);
        }
        m
    }

    fn line(&self, dir: Dir, iu: usize, iv: usize) -> (usize, usize) {
        match dir {
            Dir::U => (iu, self.nu),
            Dir::V => (iv, self.nv),
        }
    }

    fn at(&self, dir: Dir, iu: usize, iv: usize, k: usize) -> usize {
        match dir {
            Dir::U => self.node(k, iv),
            Dir::V => self.node(iu, k),
        }
    }

    /// 1D weights (index offsets along the axis) for a first or second derivative.
    fn weights_1d(&self, dir: Dir, i: usize, order: u8) -> Vec<(usize, f64)> {
        let (n, h, periodic) = self.axis(dir);
        if periodic {
            let m = n - 1;
            let i = i % m;
            let prev = (i + m - 1) % m;
            let next = (i + 1) % m;
            return if order == 1 {
                alloc::vec![(prev, -0.5 / h), (next, 0.5 / h)]
            } else {
                let s = 1.0 / (h * h);
                alloc::vec![(prev, s), (i, -2.0 * s), (next, s)]
            };
        }
        match order {
            1 => {
                let s = 0.5 / h;
                if i == 0 {
                    alloc::vec![(0, -3.0 * s), (1, 4.0 * s), (2, -s)]
                } else if i == n - 1 {
                    alloc::vec![(n - 1, 3.0 * s), (n - 2, -4.0 * s), (n - 3, s)]
                } else {
                    alloc::vec![(i - 1, -s), (i + 1, s)]
                }
            }
            _ => {
                let s = 1.0 / (h * h);
                if i == 0 {
                    alloc::vec![(0, 2.0 * s), (1, -5.0 * s), (2, 4.0 * s), (3, -s)]
                } else if i == n - 1 {
                    alloc::vec![(n - 1, 2.0 * s), (n - 2, -5.0 * s), (n - 3, 4.0 * s), (n - 4, -s)]
                } else {
                    alloc::vec![(i - 1, s), (i, -2.0 * s), (i + 1, s)]
                }
            }
        }
    }

    /// First-derivative stencil along `dir` at node `(iu, iv)`.
    pub fn d1(&self, dir: Dir, iu: usize, iv: usize) -> Stencil {
        let (i, _) = self.line(dir, iu, iv);
        self.weights_1d(dir, i, 1)
            .into_iter()
            .map(|(k, w)| (self.at(dir, iu, iv, k), w))
            .collect()
    }

    /// Second-derivative stencil `∂_a∂_b`; the mixed one composes first-derivative stencils.
    pub fn d2(&self, a: Dir, b: Dir, iu: usize, iv: usize) -> Stencil {
        if a == b {
            let (i, _) = self.line(a, iu, iv);
            return self
                .weights_1d(a, i, 2)
                .into_iter()
                .map(|(k, w)| (self.at(a, iu, iv, k), w))
                .collect();
        }
        let mut out = Stencil::new();
        for (ku, wu) in self.weights_1d(Dir::U, iu, 1) {
            for (kv, wv) in self.weights_1d(Dir::V, iv, 1) {
                out.push((self.node(ku, kv), wu * wv));
            }
        }
        out
    }
}

/// Applies a stencil to a per-node matrix field.
pub fn apply_mat(stencil: &Stencil, field: &[Mat]) -> Mat {
    let (r, c) = field[stencil[0].0].shape();
    let mut out = Mat::zeros(r, c);
    for &(k, w) in stencil {
        axpy(&mut out, w, &field[k]);
    }
    out
}

/// Applies a stencil to a matrix field given by an accessor.
pub fn apply_by<'a>(stencil: &Stencil, field: impl Fn(usize) -> &'a Mat) -> Mat {
    let (r, c) = field(stencil[0].0).shape();
    let mut out = Mat::zeros(r, c);
    for &(k, w) in stencil {
        axpy(&mut out, w, field(k));
    }
    out
}

/// Applies a stencil to a per-node vector field.
pub fn apply_vec(stencil: &Stencil, field: &[Vector]) -> Vector {
    let mut out = Vector::zeros(field[stencil[0].0].len());
    for &(k, w) in stencil {
        out.axpy(w, &field[k], 1.0);
    }
    out
}

/// One factor's operator fields `fᵢ`, `hᵢ`, `tᵢ` over the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorFields {
    pub f: Vec<Mat>,
    pub h: Vec<Mat>,
    pub t: Vec<Mat>,
}

/// `fᵢ, hᵢ, sᵢ, tᵢ` at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorQuadruple {
    pub f: Mat,
    pub h: Mat,
    pub s: Mat,
    pub t: Mat,
}

impl OperatorQuadruple {
    /// The block map `πᵢ = [f s; h t]` on `TM ⊕ E`.
    pub fn block(&self) -> Mat {
        let (n, d) = (self.f.nrows(), self.t.nrows());
        let mut m = Mat::zeros(n + d, n + d);
        m.view_mut((0, 0), (n, n)).copy_from(&self.f);
        m.view_mut((0, n), (n, d)).copy_from(&self.s);
        m.view_mut((n, 0), (d, n)).copy_from(&self.h);
        m.view_mut((n, n), (d, d)).copy_from(&self.t);
        m
    }

    /// The same quadruple expressed in the orthonormal tangent frame `P` (columns are
    /// frame vectors in coordinates, `pinv = P⁻¹`).
    pub fn orthonormal(&self, p: &Mat, pinv: &Mat) -> Self {
        Self {
            f: pinv * &self.f * p,
            h: &self.h * p,
            s: pinv * &self.s,
            t: self.t.clone(),
        }
    }
}

/// Abstract submanifold data on a chart.
///
/// `g` holds the coordinate metric per node. `b[node][α]` is `⟨B(∂_a,∂_b),ν_α⟩` in a fixed
/// orthonormal frame `ν` of `E`; `e_connection[dir][node]` is the skew matrix `ω` with
/// `∇̄_dir ν_β = Σ_α ω[α][β] ν_α`. `f` acts on coordinate components, `h` maps coordinate
/// components to `ν`-components, `t` acts on `ν`-components.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricDataset {
    pub spec: MultiproductSpec,
    pub chart: Chart,
    pub base_dim: usize,
    pub bundle_rank: usize,
    pub g: Vec<Mat>,
    pub b: Vec<Vec<Mat>>,
    pub e_connection: [Vec<Mat>; 2],
    pub factors: Vec<FactorFields>,
}

const SYMMETRY_TOL: f64 = 1e-10;
const PERIODIC_TOL: f64 = 1e-12;

fn rel_asym(m: &Mat, skew: bool) -> f64 {
    let t = m.transpose();
    let d = if skew { m + t } else { m - t };
    d.amax() / (1.0 + m.amax())
}

impl GeometricDataset {
    /// Builds and validates a dataset.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: MultiproductSpec,
        chart: Chart,
        base_dim: usize,
        bundle_rank: usize,
        g: Vec<Mat>,
        b: Vec<Vec<Mat>>,
        e_connection: [Vec<Mat>; 2],
        factors: Vec<FactorFields>,
    ) -> Result<Self, DatasetError> {
        let ds = Self {
            spec,
            chart,
            base_dim,
            bundle_rank,
            g,
            b,
            e_connection,
            factors,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_nodes(&self) -> usize {
        self.chart.num_nodes()
    }

    fn shape_err(field: &str, detail: alloc::string::String) -> DatasetError {
        DatasetError::Shape {
            field: field.to_string(),
            detail,
        }
    }

    fn invariant(&self, field: &str, node: usize, detail: alloc::string::String) -> DatasetError {
        let (iu, iv) = self.chart.indices(node);
        DatasetError::Invariant {
            field: field.to_string(),
            iu,
            iv,
            detail,
        }
    }

    fn check_field(&self, name: &str, field: &[Mat], rows: usize, cols: usize) -> Result<(), DatasetError> {
        if field.len() != self.num_nodes() {
            return Err(Self::shape_err(
                name,
                format!("expected {} nodes, found {}", self.num_nodes(), field.len()),
            ));
        }
        for (k, m) in field.iter().enumerate() {
            if m.shape() != (rows, cols) {
                return Err(self.invariant(
                    name,
                    k,
                    format!("expected {rows}x{cols}, found {}x{}", m.nrows(), m.ncols()),
                ));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(self.invariant(name, k, "non-finite entry".into()));
            }
        }
        Ok(())
    }

    /// Checks shapes, bookkeeping, metric definiteness, symmetries and periodicity.
    pub fn validate(&self) -> Result<(), DatasetError> {
        self.chart.validate()?;
        let (n, d) = (self.base_dim, self.bundle_rank);
        if n == 0 {
            return Err(Self::shape_err("base_dim", "must be at least 1".into()));
        }
        let sum = self.spec.manifold_dim();
        if sum != n + d {
            return Err(DatasetError::Bookkeeping { sum, expected: n + d });
        }
        if self.factors.len() != self.spec.len() {
            return Err(Self::shape_err(
                "factors",
                format!("expected {} factors, found {}", self.spec.len(), self.factors.len()),
            ));
        }
        self.check_field("g", &self.g, n, n)?;
        for (k, g) in self.g.iter().enumerate() {
            if rel_asym(g, false) > SYMMETRY_TOL || g.clone().cholesky().is_none() {
                return Err(self.invariant("g", k, "not symmetric positive definite".into()));
            }
        }
        if self.b.len() != self.num_nodes() {
            return Err(Self::shape_err("B", format!("expected {} nodes", self.num_nodes())));
        }
        for (k, bs) in self.b.iter().enumerate() {
            if bs.len() != d {
                return Err(self.invariant("B", k, format!("expected {d} normal components, found {}", bs.len())));
            }
            for (alpha, m) in bs.iter().enumerate() {
                if m.shape() != (n, n) || m.iter().any(|x| !x.is_finite()) {
                    return Err(self.invariant("B", k, format!("component {alpha} malformed")));
                }
                if rel_asym(m, false) > SYMMETRY_TOL {
                    return Err(self.invariant("B", k, format!("component {alpha} is not symmetric")));
                }
            }
        }
        for (dir, name) in [(0, "e_connection_u"), (1, "e_connection_v")] {
            self.check_field(name, &self.e_connection[dir], d, d)?;
            for (k, w) in self.e_connection[dir].iter().enumerate() {
                if rel_asym(w, true) > SYMMETRY_TOL {
                    return Err(self.invariant(name, k, "not skew-symmetric".into()));
                }
            }
        }
        for (i, fac) in self.factors.iter().enumerate() {
            let idx = i + 1;
            self.check_field(&format!("f_{idx}"), &fac.f, n, n)?;
            self.check_field(&format!("h_{idx}"), &fac.h, d, n)?;
            self.check_field(&format!("t_{idx}"), &fac.t, d, d)?;
        }
        self.check_periodicity()
    }

    fn all_fields(&self) -> Vec<(alloc::string::String, Vec<&Mat>)> {
        let mut out = Vec::new();
        out.push(("g".into(), self.g.iter().collect()));
        out.push(("B".into(), self.b.iter().flat_map(|v| v.iter()).collect()));
        out.push(("e_connection_u".into(), self.e_connection[0].iter().collect()));
        out.push(("e_connection_v".into(), self.e_connection[1].iter().collect()));
        for (i, fac) in self.factors.iter().enumerate() {
            out.push((format!("f_{}", i + 1), fac.f.iter().collect()));
            out.push((format!("h_{}", i + 1), fac.h.iter().collect()));
            out.push((format!("t_{}", i + 1), fac.t.iter().collect()));
        }
        out
    }

    fn check_periodicity(&self) -> Result<(), DatasetError> {
        let c = &self.chart;
        let mut pairs = Vec::new();
        if c.periodic_u {
            for iv in 0..c.nv {
                pairs.push((c.node(0, iv), c.node(c.nu - 1, iv)));
            }
        }
        if c.periodic_v {
            for iu in 0..c.nu {
                pairs.push((c.node(iu, 0), c.node(iu, c.nv - 1)));
            }
        }
        if pairs.is_empty() {
            return Ok(());
        }
        for (name, field) in self.all_fields() {
            let per = field.len() / self.num_nodes();
            for &(a, b) in &pairs {
                for k in 0..per {
                    let diff = (field[a * per + k] - field[b * per + k]).amax();
                    if diff > PERIODIC_TOL {
                        return Err(self.invariant(
                            &name,
                            b,
                            format!("differs from its periodic partner by {diff:e}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(fᵢ, hᵢ, sᵢ, tᵢ)` at `node`, with `sᵢ` derived from `hᵢ`.
    pub fn quadruple(&self, node: usize, factor: usize) -> Result<OperatorQuadruple, DatasetError> {
        let fac = &self.factors[factor];
        let s = derive_adjoint_s(&self.g[node], &fac.h[node]).ok_or_else(|| {
            self.invariant("g", node, "singular metric".into())
        })?;
        Ok(OperatorQuadruple {
            f: fac.f[node].clone(),
            h: fac.h[node].clone(),
            s,
            t: fac.t[node].clone(),
        })
    }

    /// Christoffel symbols at `node` from finite differences of `g`.
    pub fn christoffels(&self, node: usize) -> Result<Christoffels, DatasetError> {
        if self.base_dim != 2 {
            return Err(DatasetError::NotSurface(self.base_dim));
        }
        christoffels(&self.chart, &self.g, node)
            .ok_or_else(|| self.invariant("g", node, "singular metric".into()))
    }

    /// The same data written in the normal frame `ν'_β = Σ_α q[α][β] ν_α` (`q` constant,
    /// orthogonal).
    pub fn rotate_normal_frame(&self, q: &Mat) -> Self {
        let qt = q.transpose();
        let mut out = self.clone();
        for bs in &mut out.b {
            let old = bs.clone();
            for (beta, slot) in bs.iter_mut().enumerate() {
                let mut m = Mat::zeros(self.base_dim, self.base_dim);
                for (alpha, ob) in old.iter().enumerate() {
                    axpy(&mut m, q[(alpha, beta)], ob);
                }
                *slot = m;
            }
        }
        for dir in 0..2 {
            for w in &mut out.e_connection[dir] {
                *w = &qt * &*w * q;
            }
        }
        for fac in &mut out.factors {
            for h in &mut fac.h {
                *h = &qt * &*h;
            }
            for t in &mut fac.t {
                *t = &qt * &*t * q;
            }
        }
        out
    }
}

/// `sᵢ = g⁻¹hᵢᵀ`, the metric adjoint of `hᵢ` (the `ν`-frame is orthonormal).
pub fn derive_adjoint_s(g: &Mat, h: &Mat) -> Option<Mat> {
    spd_inverse(g).map(|gi| gi * h.transpose())
}

/// Inverse of [`derive_adjoint_s`]: `h = sᵀg`.
pub fn adjoint_h(g: &Mat, s: &Mat) -> Mat {
    s.transpose() * g
}

/// `A_ξ = g⁻¹ Σ_α ξ^α B_α`, so that `g(A_ξX, Y) = ⟨B(X,Y), ξ⟩`.
pub fn shape_operator(b: &[Mat], xi: &Vector, g: &Mat) -> Option<Mat> {
    let n = g.nrows();
    let mut m = Mat::zeros(n, n);
    for (alpha, ba) in b.iter().enumerate() {
        axpy(&mut m, xi[alpha], ba);
    }
    spd_inverse(g).map(|gi| gi * m)
}

/// `gamma[k][(i, j)] = Γᵏᵢⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffels {
    pub gamma: Vec<Mat>,
}

impl Christoffels {
    /// Matrix of `∇_{∂_a}` on coordinate components: `(Γ_a)[k][j] = Γᵏₐⱼ`.
    pub fn along(&self, a: usize) -> Mat {
        let n = self.gamma.len();
        Mat::from_fn(n, n, |k, j| self.gamma[k][(a, j)])
    }
}

/// Levi-Civita symbols of a metric field on a 2D chart at one node.
pub fn christoffels(chart: &Chart, g: &[Mat], node: usize) -> Option<Christoffels> {
    let (iu, iv) = chart.indices(node);
    let dg = [
        apply_mat(&chart.d1(Dir::U, iu, iv), g),
        apply_mat(&chart.d1(Dir::V, iu, iv), g),
    ];
    let gi = spd_inverse(&g[node])?;
    let n = 2;
    let mut gamma = Vec::with_capacity(n);
    for k in 0..n {
        gamma.push(Mat::from_fn(n, n, |i, j| {
            (0..n)
                .map(|l| 0.5 * gi[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]))
                .sum()
        }));
    }
    Some(Christoffels { gamma })
}

/// Orthonormal tangent frame `(P, P⁻¹)` at every node.
pub fn frame_field(g: &[Mat]) -> Option<Vec<(Mat, Mat)>> {
    g.iter().map(orthonormal_frame).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::SpaceFormFactor;
    use alloc::vec;
    use proptest::prelude::*;

    fn surface_spec() -> MultiproductSpec {
        MultiproductSpec::new(vec![SpaceFormFactor::new(2, 1.0), SpaceFormFactor::new(2, 1.0)]).unwrap()
    }

    /// Uniform dataset with constant fields; callers then edit fields.
    fn constant_dataset(chart: Chart, g: Mat) -> GeometricDataset {
        let n = chart.num_nodes();
        let id = Mat::identity(2, 2);
        let z = Mat::zeros(2, 2);
        GeometricDataset::new(
            surface_spec(),
            chart,
            2,
            2,
            vec![g; n],
            vec![vec![z.clone(), z.clone()]; n],
            [vec![z.clone(); n], vec![z.clone(); n]],
            vec![
                FactorFields { f: vec![id.clone(); n], h: vec![z.clone(); n], t: vec![z.clone(); n] },
                FactorFields { f: vec![z.clone(); n], h: vec![z.clone(); n], t: vec![id.clone(); n] },
            ],
        )
        .unwrap()
    }

    #[test]
    fn chart_rejects_small_grids() {
        assert!(Chart::new(4, 10, 0.1, 0.1).is_err());
        assert!(Chart::new(5, 5, 0.0, 0.1).is_err());
        assert!(Chart::new(5, 5, 0.1, 0.1).is_ok());
    }

    #[test]
    fn stencils_are_exact_on_quadratics() {
        {
            let chart = Chart::new(9, 7, 0.3, 0.2).unwrap();
            let f: Vec<Vector> = (0..chart.num_nodes())
                .map(|k| {
                    let (iu, iv) = chart.indices(k);
                    let (u, v) = chart.coords(iu, iv);
                    Vector::from_vec(vec![u * u - 3.0 * u * v + 2.0 * v * v + u])
                })
                .collect();
            for iv in 0..chart.nv {
                for iu in 0..chart.nu {
                    let (u, v) = chart.coords(iu, iv);
                    let du = apply_vec(&chart.d1(Dir::U, iu, iv), &f)[0];
                    let dv = apply_vec(&chart.d1(Dir::V, iu, iv), &f)[0];
                    let duu = apply_vec(&chart.d2(Dir::U, Dir::U, iu, iv), &f)[0];
                    let duv = apply_vec(&chart.d2(Dir::U, Dir::V, iu, iv), &f)[0];
                    let dvv = apply_vec(&chart.d2(Dir::V, Dir::V, iu, iv), &f)[0];
                    assert!((du - (2.0 * u - 3.0 * v + 1.0)).abs() < 1e-11);
                    assert!((dv - (-3.0 * u + 4.0 * v)).abs() < 1e-11);
                    assert!((duu - 2.0).abs() < 1e-9);
                    assert!((duv + 3.0).abs() < 1e-9);
                    assert!((dvv - 4.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn periodic_stencil_wraps_past_duplicate() {
        let n = 17;
        let h = core::f64::consts::TAU / (n - 1) as f64;
        let chart = Chart::new(n, 5, h, 0.1).unwrap().with_periodic(true, false);
        let f: Vec<Vector> = (0..chart.num_nodes())
            .map(|k| {
                let (iu, iv) = chart.indices(k);
                Vector::from_vec(vec![chart.coords(iu, iv).0.sin()])
            })
            .collect();
        let exact_scale = (h.sin()) / h;
        for iu in [0, 1, n - 2, n - 1] {
            let d = apply_vec(&chart.d1(Dir::U, iu, 2), &f)[0];
            let u = chart.coords(iu, 2).0;
            assert!((d - exact_scale * u.cos()).abs() < 1e-12, "iu={iu}");
        }
    }

    #[test]
    fn load_rejects_asymmetric_b_with_location() {
        let chart = Chart::new(6, 6, 0.1, 0.1).unwrap();
        let mut ds = constant_dataset(chart, Mat::identity(2, 2));
        let k = ds.chart.node(3, 4);
        ds.b[k][1][(0, 1)] = 0.5;
        match ds.validate() {
            Err(DatasetError::Invariant { field, iu, iv, .. }) => {
                assert_eq!((field.as_str(), iu, iv), ("B", 3, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bookkeeping_error() {
        let chart = Chart::new(6, 6, 0.1, 0.1).unwrap();
        let mut ds = constant_dataset(chart, Mat::identity(2, 2));
        ds.spec = MultiproductSpec::new(vec![SpaceFormFactor::new(2, 1.0), SpaceFormFactor::new(1, 1.0)]).unwrap();
        assert_eq!(ds.validate(), Err(DatasetError::Bookkeeping { sum: 3, expected: 4 }));
    }

    #[test]
    fn periodic_mismatch_detected() {
        let chart = Chart::new(6, 6, 0.1, 0.1).unwrap().with_periodic(true, false);
        let mut ds = constant_dataset(chart, Mat::identity(2, 2));
        let k = ds.chart.node(5, 2);
        ds.factors[0].t[k][(0, 0)] = 1e-9;
        assert!(matches!(ds.validate(), Err(DatasetError::Invariant { iu: 5, iv: 2, .. })));
    }

    #[test]
    fn adjoint_examples() {
        let g = Mat::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert_eq!(derive_adjoint_s(&g, &Mat::zeros(2, 2)).unwrap(), Mat::zeros(2, 2));
        let h = Mat::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        assert_eq!(derive_adjoint_s(&Mat::identity(2, 2), &h).unwrap(), h.transpose());
        // Diagonal surface: h eₐ = ½νₐ in orthonormal frames gives s νₐ = ½eₐ.
        let (_, pinv) = orthonormal_frame(&g).unwrap();
        let h_coord = Mat::identity(2, 2) * 0.5 * &pinv;
        let s = derive_adjoint_s(&g, &h_coord).unwrap();
        assert!((&pinv * s - Mat::identity(2, 2) * 0.5).amax() < 1e-14);
    }

    #[test]
    fn shape_operator_examples() {
        let g = Mat::identity(2, 2);
        let zero = [Mat::zeros(2, 2), Mat::zeros(2, 2)];
        let xi = Vector::from_vec(vec![0.3, 0.4]);
        assert_eq!(shape_operator(&zero, &xi, &g).unwrap(), Mat::zeros(2, 2));
        let b = [Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])];
        assert_eq!(shape_operator(&b, &Vector::zeros(1), &g).unwrap(), Mat::zeros(2, 2));
        // Helicoid on its axis: g = I, B = [[0,1],[1,0]], principal curvatures ±1.
        let a = shape_operator(&b, &Vector::from_vec(vec![1.0]), &g).unwrap();
        let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    fn metric_dataset(nu: usize, h: f64, u0: f64, v0: f64, g: impl Fn(f64, f64) -> Mat) -> GeometricDataset {
        let chart = Chart::new(nu, nu, h, h).unwrap().with_origin(u0, v0);
        let mut ds = constant_dataset(chart.clone(), Mat::identity(2, 2));
        for k in 0..chart.num_nodes() {
            let (iu, iv) = chart.indices(k);
            let (u, v) = chart.coords(iu, iv);
            ds.g[k] = g(u, v);
        }
        ds
    }

    fn polar_error(nu: usize) -> f64 {
        let h = 1.0 / (nu - 1) as f64;
        let ds = metric_dataset(nu, h, 1.0, 0.0, |u, _| Mat::from_diagonal(&Vector::from_vec(vec![1.0, u * u])));
        let mut err: f64 = 0.0;
        for k in 0..ds.num_nodes() {
            let (iu, iv) = ds.chart.indices(k);
            let u = ds.chart.coords(iu, iv).0;
            let c = ds.christoffels(k).unwrap();
            err = err.max((c.gamma[0][(1, 1)] + u).abs());
            err = err.max((c.gamma[1][(0, 1)] - 1.0 / u).abs());
            err = err.max((c.gamma[1][(1, 0)] - 1.0 / u).abs());
            err = err.max(c.gamma[0][(0, 0)].abs());
        }
        err
    }

    #[test]
    fn christoffels_polar_exact_for_quadratic_metric() {
        // g = diag(1, u²) is quadratic in u, so the second-order stencils are exact.
        for nu in [17, 33] {
            assert!(polar_error(nu) < 1e-12);
        }
    }

    fn sphere_error(nu: usize) -> f64 {
        let h = 1.0 / (nu - 1) as f64;
        let ds = metric_dataset(nu, h, 0.0, -0.5, |_, v| {
            Mat::from_diagonal(&Vector::from_vec(vec![v.cos().powi(2), 1.0]))
        });
        let mut err: f64 = 0.0;
        for k in 0..ds.num_nodes() {
            let (iu, iv) = ds.chart.indices(k);
            let v = ds.chart.coords(iu, iv).1;
            let c = ds.christoffels(k).unwrap();
            err = err.max((c.gamma[1][(0, 0)] - v.sin() * v.cos()).abs());
            err = err.max((c.gamma[0][(0, 1)] + v.tan()).abs());
        }
        err
    }

    #[test]
    fn christoffels_sphere_converge_second_order() {
        let (e1, e2, e3) = (sphere_error(17), sphere_error(33), sphere_error(65));
        for ratio in [e1 / e2, e2 / e3] {
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn constant_metric_has_zero_christoffels() {
        let g = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let ds = constant_dataset(Chart::new(6, 6, 0.1, 0.1).unwrap(), g);
        for k in 0..ds.num_nodes() {
            let c = ds.christoffels(k).unwrap();
            assert!(c.gamma.iter().all(|m| m.amax() == 0.0));
        }
    }

    proptest! {
        #[test]
        fn adjoint_of_adjoint(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.1f64..2.0, hs in proptest::collection::vec(-3.0f64..3.0, 6)) {
            let l = Mat::from_row_slice(2, 2, &[1.0 + c, 0.0, a, 0.5 + b.abs()]);
            let g = &l * l.transpose();
            let h = Mat::from_row_slice(3, 2, &hs);
            let s = derive_adjoint_s(&g, &h).unwrap();
            // g(X, sξ) = ⟨hX, ξ⟩ on basis pairs
            let lhs = g.clone() * &s;
            prop_assert!((lhs - h.transpose()).amax() < 1e-12 * (1.0 + h.amax()));
            prop_assert!((adjoint_h(&g, &s) - &h).amax() < 1e-12 * (1.0 + h.amax()));
        }

        #[test]
        fn christoffels_symmetric(a in 0.1f64..1.0, b in -0.3f64..0.3) {
            let ds = metric_dataset(7, 0.1, 0.2, 0.1, |u, v| {
                Mat::from_row_slice(2, 2, &[1.0 + a * u * u, b * u * v, b * u * v, 1.0 + v * v])
            });
            for k in 0..ds.num_nodes() {
                let c = ds.christoffels(k).unwrap();
                for m in &c.gamma {
                    prop_assert!((m - m.transpose()).amax() < 1e-12);
                }
            }
        }
    }
}
