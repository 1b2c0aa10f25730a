//! Dataset fields rewritten in orthonormal frames of `TM` and `E`.
//!
//! The tangent frame at each node is `e_a = Σ_b P[b][a] ∂_b` with `P` from the Cholesky
//! factor of `g`. In these frames every block map `πᵢ` is a symmetric matrix and the
//! induced connection on `TM ⊕ E` is skew, so residuals can be measured with plain
//! matrix norms.

use alloc::vec::Vec;

use crate::dataset::{apply_mat, Christoffels, Dir, GeometricDataset};
use crate::error::DatasetError;
use crate::linalg::{orthonormal_frame, skew_part, Mat};

#[derive(Debug, Clone)]
pub struct OrthonormalFields {
    pub n: usize,
    pub d: usize,
    /// Frame matrix `P` (columns are `e_a` in coordinates).
    pub p: Vec<Mat>,
    pub pinv: Vec<Mat>,
    /// Coordinate Christoffel matrices `Γ_u`, `Γ_v`.
    pub gamma: Vec<[Mat; 2]>,
    /// Levi-Civita connection along `∂_u`, `∂_v` in the frame `e`, projected onto its skew part.
    pub tangent_conn: Vec<[Mat; 2]>,
    /// `[α][b] = ⟨B(∂_a, e_b), ν_α⟩` for `a = u, v`.
    pub b_rows: Vec<[Mat; 2]>,
    /// Per node and factor, `πᵢ = [f h ᵀ; h t]` in the frames `e ⊕ ν`.
    pub pi: Vec<Vec<Mat>>,
}

impl OrthonormalFields {
    pub fn new(ds: &GeometricDataset) -> Result<Self, DatasetError> {
        if ds.base_dim != 2 {
            return Err(DatasetError::NotSurface(ds.base_dim));
        }
        let (n, d) = (ds.base_dim, ds.bundle_rank);
        let nodes = ds.num_nodes();
        let mut p = Vec::with_capacity(nodes);
        let mut pinv = Vec::with_capacity(nodes);
        for (k, g) in ds.g.iter().enumerate() {
            let (a, b) = orthonormal_frame(g).ok_or_else(|| {
                let (iu, iv) = ds.chart.indices(k);
                DatasetError::Invariant {
                    field: "g".into(),
                    iu,
                    iv,
                    detail: "not positive definite".into(),
                }
            })?;
            p.push(a);
            pinv.push(b);
        }
        let mut gamma = Vec::with_capacity(nodes);
        let mut tangent_conn = Vec::with_capacity(nodes);
        let mut b_rows = Vec::with_capacity(nodes);
        let mut pi = Vec::with_capacity(nodes);
        for k in 0..nodes {
            let (iu, iv) = ds.chart.indices(k);
            let ch: Christoffels = ds.christoffels(k)?;
            let gam = [ch.along(0), ch.along(1)];
            let conn = Dir::BOTH.map(|dir| {
                let dp = apply_mat(&ds.chart.d1(dir, iu, iv), &p);
                let a = dir as usize;
                skew_part(&(&pinv[k] * (&gam[a] * &p[k] + dp)))
            });
            let rows = [0, 1].map(|a| {
                Mat::from_fn(d, n, |alpha, b| (ds.b[k][alpha].row(a) * p[k].column(b))[0])
            });
            let mut blocks = Vec::with_capacity(ds.factors.len());
            for fac in &ds.factors {
                let f = &pinv[k] * &fac.f[k] * &p[k];
                let h = &fac.h[k] * &p[k];
                let mut m = Mat::zeros(n + d, n + d);
                m.view_mut((0, 0), (n, n)).copy_from(&f);
                m.view_mut((0, n), (n, d)).copy_from(&h.transpose());
                m.view_mut((n, 0), (d, n)).copy_from(&h);
                m.view_mut((n, n), (d, d)).copy_from(&fac.t[k]);
                blocks.push(m);
            }
            gamma.push(gam);
            tangent_conn.push(conn);
            b_rows.push(rows);
            pi.push(blocks);
        }
        Ok(Self {
            n,
            d,
            p,
            pinv,
            gamma,
            tangent_conn,
            b_rows,
            pi,
        })
    }

    /// Connection of `TM ⊕ E` along `∂_a` in the frames `e ⊕ ν`:
    /// `[[∇, −Bᵀ], [B, ∇⊥]]`, skew by construction.
    pub fn block_connection(&self, ds: &GeometricDataset, node: usize, a: usize) -> Mat {
        let (n, d) = (self.n, self.d);
        let mut m = Mat::zeros(n + d, n + d);
        let v = &self.b_rows[node][a];
        m.view_mut((0, 0), (n, n)).copy_from(&self.tangent_conn[node][a]);
        m.view_mut((0, n), (n, d)).copy_from(&(-v.transpose()));
        m.view_mut((n, 0), (d, n)).copy_from(v);
        m.view_mut((n, n), (d, d)).copy_from(&ds.e_connection[a][node]);
        m
    }

    /// Covariant derivative `∇_{e_c} Π` of an endomorphism field of `TM ⊕ E` (given in the
    /// frames `e ⊕ ν`), returned for `c = 1..n`.
    pub fn covariant_derivative(
        &self,
        ds: &GeometricDataset,
        field: &[Mat],
        node: usize,
    ) -> Vec<Mat> {
        let (iu, iv) = ds.chart.indices(node);
        let coord: Vec<Mat> = Dir::BOTH
            .iter()
            .map(|&dir| {
                let k = self.block_connection(ds, node, dir as usize);
                let pi = &field[node];
                apply_mat(&ds.chart.d1(dir, iu, iv), field) + &k * pi - pi * &k
            })
            .collect();
        let p = &self.p[node];
        (0..self.n)
            .map(|c| &coord[0] * p[(0, c)] + &coord[1] * p[(1, c)])
            .collect()
    }
}

/// Frobenius norms of the four blocks `[[TT, TN], [NT, NN]]` of a list of
/// `(n+d)×(n+d)` matrices, summed over the list.
pub fn block_norms(ms: &[Mat], n: usize) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for m in ms {
        let d = m.nrows() - n;
        acc[0] += m.view((0, 0), (n, n)).norm_squared();
        acc[1] += m.view((n, 0), (d, n)).norm_squared();
        acc[2] += m.view((n, n), (d, d)).norm_squared();
        acc[3] += m.view((0, n), (n, d)).norm_squared();
    }
    acc.map(libm::sqrt)
}
