//! Dense complex matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(r: usize, c: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(r, c, data.iter().map(|&x| Complex64::new(x, 0.0)))
}

pub fn scalar(x: f64, n: usize) -> CMat {
    eye(n) * Complex64::new(x, 0.0)
}

/// Thin singular value decomposition `m = u · diag(s) · v_t`.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v_t: CMat,
}

impl Svd {
    fn recompose(&self) -> CMat {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        us * &self.v_t
    }
}

fn raw_svd(m: &CMat) -> Svd {
    let svd = m.clone().svd(true, true);
    Svd {
        u: svd.u.expect("requested U"),
        s: svd.singular_values.iter().copied().collect(),
        v_t: svd.v_t.expect("requested V"),
    }
}

/// SVD whose reconstruction is verified. The iterative solver occasionally
/// returns an inaccurate factorization for tall rank-deficient inputs; the
/// adjoint is tried next, then the Hermitian dilation `[[0, m], [m*, 0]]`.
pub fn svd(m: &CMat) -> Svd {
    let (r, c) = m.shape();
    if m.is_empty() {
        return Svd { u: zeros(r, 0), s: Vec::new(), v_t: zeros(0, c) };
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let bound = 1e-12 * scale * ((r.max(c)) as f64).sqrt();
    let ok = |d: &Svd| (d.recompose() - m).iter().all(|z| z.norm() <= bound);

    let direct = raw_svd(m);
    if ok(&direct) {
        return direct;
    }
    let t = raw_svd(&m.adjoint());
    let flipped = Svd { u: t.v_t.adjoint(), s: t.s, v_t: t.u.adjoint() };
    if ok(&flipped) {
        return flipped;
    }
    let mut dil = zeros(r + c, r + c);
    dil.view_mut((0, r), (r, c)).copy_from(m);
    dil.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let (vals, vecs) = eigh(&dil);
    let k = r.min(c);
    let root2 = Complex64::new(std::f64::consts::SQRT_2, 0.0);
    let u = CMat::from_fn(r, k, |i, j| vecs[(i, j)] * root2);
    let v_t = CMat::from_fn(k, c, |j, i| (vecs[(r + i, j)] * root2).conj());
    Svd { u, s: vals[..k].iter().map(|&x| x.max(0.0)).collect(), v_t }
}

/// Singular values, largest first.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s = svd(m).s;
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm, from the largest eigenvalue of the smaller Gram matrix.
/// Empty matrices have norm zero.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let g = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    let (vals, _) = eigh(&g);
    vals.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues in
/// descending order; ties keep the solver's original index order.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Smallest eigenvalue of the Hermitian part (`+inf` for an empty matrix).
pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Scale-aware PSD test: `λ_min ≥ -tol · max(1, ‖m‖)`.
pub fn is_psd(m: &CMat, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol * op_norm(m).max(1.0)
}

/// Orthonormal basis for the column span, dropping singular values below
/// `rel_cut · σ_max`.
pub fn orth(m: &CMat, rel_cut: f64) -> CMat {
    if m.is_empty() {
        return zeros(m.nrows(), 0);
    }
    let Svd { u, s, .. } = svd(m);
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return zeros(m.nrows(), 0);
    }
    let mut keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > rel_cut * smax).collect();
    keep.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    CMat::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Orthonormal basis for the directions of `m` outside the span of the
/// orthonormal `basis`, keeping singular values above `abs_cut`.
pub fn extend_basis(basis: &CMat, m: &CMat, abs_cut: f64) -> CMat {
    let mut r = m.clone();
    // two passes of Gram-Schmidt against the existing basis
    for _ in 0..2 {
        r -= basis * (basis.adjoint() * &r);
    }
    if r.is_empty() {
        return zeros(m.nrows(), 0);
    }
    let Svd { u, s, .. } = svd(&r);
    let mut keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > abs_cut).collect();
    keep.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    CMat::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Square operator stored as dense blocks on a fixed partition; absent
/// blocks are zero.
#[derive(Clone, Debug)]
pub struct BlockMat {
    pub cuts: Vec<usize>,
    pub blocks: std::collections::BTreeMap<(usize, usize), CMat>,
}

impl BlockMat {
    /// Zero operator on the partition `cuts` (boundaries, first 0, last the size).
    pub fn new(cuts: Vec<usize>) -> Self {
        Self { cuts, blocks: Default::default() }
    }

    pub fn dim(&self) -> usize {
        *self.cuts.last().unwrap_or(&0)
    }

    fn size(&self, i: usize) -> usize {
        self.cuts[i + 1] - self.cuts[i]
    }

    /// Adds `m` to block `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, m: CMat) {
        assert_eq!(m.shape(), (self.size(i), self.size(j)), "block shape");
        match self.blocks.get_mut(&(i, j)) {
            Some(b) => *b += m,
            None => {
                self.blocks.insert((i, j), m);
            }
        }
    }

    pub fn mul(&self, other: &BlockMat) -> BlockMat {
        let mut out = BlockMat::new(self.cuts.clone());
        for (&(i, l), a) in &self.blocks {
            for (&(l2, j), b) in other.blocks.range((l, 0)..(l + 1, 0)) {
                debug_assert_eq!(l, l2);
                out.add(i, j, a * b);
            }
        }
        out
    }

    pub fn adjoint(&self) -> BlockMat {
        let mut out = BlockMat::new(self.cuts.clone());
        for (&(i, j), b) in &self.blocks {
            out.blocks.insert((j, i), b.adjoint());
        }
        out
    }

    /// `self · v` for a dense block of columns.
    pub fn apply(&self, v: &CMat) -> CMat {
        let mut out = zeros(self.dim(), v.ncols());
        for (&(i, j), b) in &self.blocks {
            let part = b * v.rows(self.cuts[j], self.size(j));
            let mut target = out.rows_mut(self.cuts[i], self.size(i));
            target += part;
        }
        out
    }

    /// `self* · v`.
    pub fn apply_adjoint(&self, v: &CMat) -> CMat {
        let mut out = zeros(self.dim(), v.ncols());
        for (&(i, j), b) in &self.blocks {
            let part = b.ad_mul(&v.rows(self.cuts[i], self.size(i)).into_owned());
            let mut target = out.rows_mut(self.cuts[j], self.size(j));
            target += part;
        }
        out
    }
}

/// Orthonormal basis of the orthogonal complement of the span of an
/// orthonormal `basis` inside `C^dim`.
pub fn complement(basis: &CMat) -> CMat {
    let dim = basis.nrows();
    let proj = eye(dim) - basis * basis.adjoint();
    let (vals, vecs) = eigh(&proj);
    let keep = vals.iter().take_while(|&&v| v > 0.5).count();
    vecs.columns(0, keep).into_owned()
}

/// Moore–Penrose pseudo-inverse with relative singular-value cutoff.
pub fn pinv(m: &CMat, rel_cut: f64) -> CMat {
    if m.is_empty() {
        return zeros(m.ncols(), m.nrows());
    }
    let Svd { u, s, v_t: vt } = svd(m);
    let smax = s.iter().copied().fold(0.0, f64::max);
    let mut out = zeros(m.ncols(), m.nrows());
    for i in 0..s.len() {
        if smax > 0.0 && s[i] > rel_cut * smax {
            let inv = Complex64::new(1.0 / s[i], 0.0);
            out += vt.row(i).adjoint() * u.column(i).adjoint() * inv;
        }
    }
    out
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(*b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

pub fn set_block(target: &mut CMat, row: usize, col: usize, block: &CMat) {
    target.view_mut((row, col), (block.nrows(), block.ncols())).copy_from(block);
}

/// Columns of `m` at the given indices.
pub fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])])
}

pub fn hstack(parts: &[CMat], rows: usize) -> CMat {
    let c: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, c);
    let mut j = 0;
    for p in parts {
        out.view_mut((0, j), (rows, p.ncols())).copy_from(p);
        j += p.ncols();
    }
    out
}

pub fn power(m: &CMat, k: usize) -> CMat {
    let mut out = eye(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}
