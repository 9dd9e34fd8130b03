//! Minimal isometric Nica-covariant dilation at finite truncation.
//!
//! The Gram matrix of the frame `{V(p)h : p ∈ ball(L), h ∈ H}` is forced by
//! the *-regular moment formula; factoring it as `C*C` gives coordinates for
//! the frame vectors, and each generator is realised as the partial isometry
//! sending `v_{p,h}` to `v_{gp,h}` for `degree(p) < L`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, extend_basis, hstack, op_norm, orth, pinv, select_columns, CMat};
use crate::monoid::{Element, MonoidSpec};
use crate::representation::{MatrixJson, Representation};

#[derive(Clone, Copy, Debug)]
pub struct DilationOptions {
    /// Eigenvalues below `rank_cutoff · λ_max` are discarded.
    pub rank_cutoff: f64,
    pub tol: f64,
}

impl DilationOptions {
    /// Relative singular-value cutoff for spans of frame vectors. Frame
    /// singular values are square roots of kept Gram eigenvalues, so they sit
    /// above `√rank_cutoff`; the cut leaves two orders of margin below that.
    pub fn span_cutoff(&self) -> f64 {
        span_cutoff(self.rank_cutoff)
    }
}

pub fn span_cutoff(rank_cutoff: f64) -> f64 {
    rank_cutoff.sqrt() * 1e-2
}

impl Default for DilationOptions {
    fn default() -> Self {
        Self { rank_cutoff: 1e-10, tol: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Gns,
    AndoCartesian,
    AndoFree,
    Manual,
}

/// Finite model of an isometric representation. Identities are only
/// meaningful on the degree filtration `Π_0 ⊂ Π_1 ⊂ ...`, stored as
/// orthonormal bases.
#[derive(Clone, Debug)]
pub struct TruncatedIsoRep {
    pub spec: MonoidSpec,
    pub space_dim: usize,
    pub h_embed: CMat,
    pub ops: Vec<CMat>,
    pub filtration: Vec<CMat>,
    /// Largest `d` with every generator isometric on `Π_d`.
    pub valid_degree: usize,
    pub provenance: Provenance,
}

impl TruncatedIsoRep {
    /// Highest degree with a recorded filtration space.
    pub fn top_degree(&self) -> usize {
        self.filtration.len().saturating_sub(1)
    }

    /// Orthonormal basis of `Π_d`, clamped to the top of the filtration.
    /// The flag reports whether clamping happened.
    pub fn domain(&self, d: usize) -> (&CMat, bool) {
        let top = self.top_degree();
        (&self.filtration[d.min(top)], d > top)
    }

    pub fn word_operator(&self, x: &Element) -> CMat {
        let mut out = CMat::identity(self.space_dim, self.space_dim);
        for g in self.spec.word(x) {
            out = out * &self.ops[g];
        }
        out
    }

    /// `V(x)·v` without forming `V(x)`.
    pub fn act(&self, x: &Element, v: &CMat) -> CMat {
        self.spec.word(x).iter().rev().fold(v.clone(), |acc, &g| &self.ops[g] * acc)
    }

    /// `V(x)*·v`.
    pub fn act_adjoint(&self, x: &Element, v: &CMat) -> CMat {
        self.spec.word(x).iter().fold(v.clone(), |acc, &g| self.ops[g].ad_mul(&acc))
    }

    /// Applies `V(x)` to vectors supported in degree `≤ support`.
    pub fn apply_word(&self, x: &Element, vec: &CMat, support: usize) -> Result<CMat> {
        let word = self.spec.word(x);
        if word.len() + support > self.top_degree() {
            return Err(Error::TruncationOverflow {
                word: word.len(),
                support,
                limit: self.top_degree(),
            });
        }
        let mut v = vec.clone();
        for &g in word.iter().rev() {
            v = &self.ops[g] * v;
        }
        Ok(v)
    }

    /// Filtration built from all words of length `≤ d` in the generators
    /// applied to the embedded space.
    pub fn word_filtration(ops: &[CMat], h_embed: &CMat, top: usize, cutoff: f64) -> Vec<CMat> {
        Self::word_filtration_with(ops.len(), |g, x| &ops[g] * x, h_embed, top, cutoff)
    }

    /// Word filtration for operators given by their action on column blocks.
    pub fn word_filtration_with(
        n_ops: usize,
        apply: impl Fn(usize, &CMat) -> CMat,
        h_embed: &CMat,
        top: usize,
        cutoff: f64,
    ) -> Vec<CMat> {
        let rows = h_embed.nrows();
        let mut spans = Vec::with_capacity(top + 1);
        let mut basis = orth(h_embed, cutoff);
        let mut frontier = basis.clone();
        spans.push(basis.clone());
        for _ in 0..top {
            let images: Vec<CMat> = (0..n_ops).map(|g| apply(g, &frontier)).collect();
            frontier = extend_basis(&basis, &hstack(&images, rows), cutoff);
            basis = hstack(&[basis, frontier.clone()], rows);
            spans.push(basis.clone());
        }
        spans
    }

    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            monoid: self.spec.clone(),
            space_dim: self.space_dim,
            h_embed: (&self.h_embed).into(),
            ops: self.ops.iter().map(Into::into).collect(),
            filtration: self.filtration.iter().map(Into::into).collect(),
            valid_degree: self.valid_degree,
            provenance: self.provenance,
            index: None,
            factor: None,
        }
    }

    pub fn from_json(j: &ModelJson) -> Result<Self> {
        let ops = j.ops.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
        if ops.len() != j.monoid.rank() {
            return Err(Error::Structure("operator count does not match monoid".into()));
        }
        Ok(Self {
            spec: j.monoid.clone(),
            space_dim: j.space_dim,
            h_embed: j.h_embed.to_matrix()?,
            ops,
            filtration: j.filtration.iter().map(MatrixJson::to_matrix).collect::<Result<_>>()?,
            valid_degree: j.valid_degree,
            provenance: j.provenance,
        })
    }
}

/// Exported model file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelJson {
    pub monoid: MonoidSpec,
    pub space_dim: usize,
    pub h_embed: MatrixJson,
    pub ops: Vec<MatrixJson>,
    pub filtration: Vec<MatrixJson>,
    pub valid_degree: usize,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub index: Option<Vec<(String, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub factor: Option<MatrixJson>,
}

/// Gram factorisation data of the minimal dilation.
#[derive(Clone, Debug)]
pub struct GnsModel {
    pub rep: Representation,
    pub radius: usize,
    pub index: Vec<(Element, usize)>,
    pub gram: CMat,
    /// `C` with `C*C ≈ gram`; column `(p,h)` is the frame vector `v_{p,h}`.
    pub factor: CMat,
    pub space_dim: usize,
    pub h_embed: CMat,
    pub rank_cutoff: f64,
    /// Least-squares residual of each generator realisation.
    pub solve_residuals: Vec<f64>,
}

impl GnsModel {
    /// Column of `factor` holding `v_{p,h}`.
    pub fn column(&self, p: &Element, h: usize) -> Option<usize> {
        self.index.iter().position(|(q, k)| q == p && *k == h)
    }

    /// Frame vectors `v_{p,·}` as an `r × n` block.
    pub fn frame(&self, p: &Element) -> Option<CMat> {
        let n = self.rep.dim;
        let i = self.index.iter().position(|(q, _)| q == p)?;
        Some(self.factor.columns(i, n).into_owned())
    }

    pub fn export(&self, model: &TruncatedIsoRep) -> ModelJson {
        let mut j = model.to_json();
        j.index = Some(
            self.index
                .iter()
                .map(|(p, h)| (self.rep.spec.format_element(p), *h))
                .collect(),
        );
        j.factor = Some((&self.factor).into());
        j
    }
}

/// `T(p⁻¹r) T(q⁻¹r)*` with `r = p ∨ q`, or zero when `pP ∩ qP = ∅`.
pub fn kernel_entry(rep: &Representation, p: &Element, q: &Element) -> Result<CMat> {
    let spec = &rep.spec;
    match spec.right_lcm(p, q)? {
        None => Ok(CMat::zeros(rep.dim, rep.dim)),
        Some(r) => {
            let a = spec.left_divide(p, &r)?.expect("p divides p ∨ q");
            let b = spec.left_divide(q, &r)?.expect("q divides p ∨ q");
            Ok(rep.evaluate(&a) * rep.evaluate(&b).adjoint())
        }
    }
}

/// Block matrix of kernel entries over `ball(radius) × ball(radius)`.
pub fn gram(rep: &Representation, radius: usize) -> Result<CMat> {
    let ball = rep.spec.ball(radius);
    gram_over(rep, &ball)
}

/// Block matrix of kernel entries over an arbitrary list of elements.
pub fn gram_over(rep: &Representation, elements: &[Element]) -> Result<CMat> {
    let n = rep.dim;
    let m = elements.len();
    let mut g = CMat::zeros(m * n, m * n);
    for (i, p) in elements.iter().enumerate() {
        for (j, q) in elements.iter().enumerate().skip(i) {
            let k = kernel_entry(rep, p, q)?;
            g.view_mut((i * n, j * n), (n, n)).copy_from(&k);
            if i != j {
                g.view_mut((j * n, i * n), (n, n)).copy_from(&k.adjoint());
            }
        }
    }
    Ok(g)
}

/// Builds the truncated minimal *-regular dilation over `ball(radius)`.
pub fn minimal_dilation(
    rep: &Representation,
    radius: usize,
    opts: DilationOptions,
) -> Result<(GnsModel, TruncatedIsoRep)> {
    dilation_on(rep, rep.spec.ball(radius), opts)
}

/// GNS dilation over an arbitrary finite index set containing `e`. A generator
/// is realized from the pairs `(p, g p)` with both ends in the set.
pub fn dilation_on(
    rep: &Representation,
    ball: Vec<Element>,
    opts: DilationOptions,
) -> Result<(GnsModel, TruncatedIsoRep)> {
    let spec = &rep.spec;
    let n = rep.dim;
    if ball.first().map_or(true, |p| !spec.is_identity(p)) {
        return Err(Error::Structure("index set must start with the identity".into()));
    }
    let radius = ball.iter().map(|p| spec.degree(p)).max().unwrap_or(0);
    let g = gram_over(rep, &ball)?;

    let (vals, vecs) = eigh(&g);
    let lmax = vals.first().copied().unwrap_or(0.0);
    let lmin = vals.last().copied().unwrap_or(0.0);
    if lmin < -opts.tol * lmax.max(1.0) {
        return Err(Error::NotRegular { degree: radius, min_eig: lmin });
    }
    let rank = vals.iter().take_while(|&&v| v > opts.rank_cutoff * lmax).count();
    let mut factor = CMat::zeros(rank, g.ncols());
    for k in 0..rank {
        let s = num_complex::Complex64::new(vals[k].sqrt(), 0.0);
        factor.row_mut(k).copy_from(&(vecs.column(k).adjoint() * s));
    }

    let position: HashMap<Vec<usize>, usize> =
        ball.iter().enumerate().map(|(i, p)| (spec.word(p), i)).collect();
    let degrees: Vec<usize> = ball.iter().map(|p| spec.degree(p)).collect();
    // valid degree: every element up to this degree has all successors present
    let mut valid_degree = radius;
    let mut successors = Vec::with_capacity(spec.rank());
    for gen in spec.generators() {
        let mut pairs = Vec::new();
        for (i, p) in ball.iter().enumerate() {
            match position.get(&spec.word(&spec.multiply(&gen, p)?)) {
                Some(&j) => pairs.push((i, j)),
                None => valid_degree = valid_degree.min(degrees[i].saturating_sub(1)),
            }
        }
        successors.push(pairs);
    }

    let mut ops = Vec::with_capacity(spec.rank());
    let mut residuals = Vec::with_capacity(spec.rank());
    for (gi, pairs) in successors.iter().enumerate() {
        let mut src = Vec::new();
        let mut dst = Vec::new();
        for &(i, j) in pairs {
            for h in 0..n {
                src.push(i * n + h);
                dst.push(j * n + h);
            }
        }
        let ca = select_columns(&factor, &src);
        let cb = select_columns(&factor, &dst);
        let v = &cb * pinv(&ca, opts.rank_cutoff);
        let residual = op_norm(&(&v * &ca - &cb));
        if residual > opts.tol * op_norm(&cb).max(1.0) {
            return Err(Error::KernelInconsistent { generator: gi, residual });
        }
        residuals.push(residual);
        ops.push(v);
    }

    let filtration = (0..=radius)
        .map(|d| {
            let cols: Vec<usize> = (0..ball.len())
                .filter(|&i| degrees[i] <= d)
                .flat_map(|i| (i * n)..(i * n + n))
                .collect();
            orth(&select_columns(&factor, &cols), opts.span_cutoff())
        })
        .collect();

    let h_embed = factor.columns(0, n).into_owned();
    let index = ball.iter().flat_map(|p| (0..n).map(move |h| (p.clone(), h))).collect();
    let model = TruncatedIsoRep {
        spec: spec.clone(),
        space_dim: rank,
        h_embed: h_embed.clone(),
        ops,
        filtration,
        valid_degree,
        provenance: Provenance::Gns,
    };
    let gns = GnsModel {
        rep: rep.clone(),
        radius,
        index,
        gram: g,
        factor,
        space_dim: rank,
        h_embed,
        rank_cutoff: opts.rank_cutoff,
        solve_residuals: residuals,
    };
    Ok((gns, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eye, from_real, min_eigenvalue, power, scalar};

    fn nat() -> MonoidSpec {
        MonoidSpec::FreeAbelian(1)
    }

    fn rep1(t: CMat) -> Representation {
        let n = t.nrows();
        Representation::new(nat(), n, vec![t]).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let f2: MonoidSpec = "F(2)".parse().unwrap();
        let rep = Representation::new(f2.clone(), 1, vec![scalar(0.5, 1), scalar(0.3, 1)]).unwrap();
        let a = f2.parse_element("a").unwrap();
        let b = f2.parse_element("b").unwrap();
        let ab = f2.parse_element("ab").unwrap();
        assert_eq!(kernel_entry(&rep, &a, &a).unwrap(), eye(1));
        assert_eq!(kernel_entry(&rep, &f2.identity(), &ab).unwrap(), rep.evaluate(&ab));
        assert_eq!(kernel_entry(&rep, &a, &b).unwrap(), CMat::zeros(1, 1));
        let k = kernel_entry(&rep, &ab, &a).unwrap();
        let kt = kernel_entry(&rep, &a, &ab).unwrap();
        assert_eq!(k, kt.adjoint());
    }

    #[test]
    fn gram_of_zero_rep_is_identity() {
        let g = gram(&Representation::zero(nat(), 2), 2).unwrap();
        assert_eq!(g, eye(6));
    }

    #[test]
    fn gram_of_unitary_has_rank_n() {
        let u = from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let g = gram(&rep1(u.clone()), 1).unwrap();
        let (vals, _) = eigh(&g);
        // eigenvalues {2, 0}, each with multiplicity 2
        for (v, e) in vals.iter().zip([2.0, 2.0, 0.0, 0.0]) {
            assert!((v - e).abs() < 1e-12);
        }
        let (gns, model) = minimal_dilation(&rep1(u.clone()), 3, DilationOptions::default()).unwrap();
        assert_eq!(gns.space_dim, 2);
        let compressed = model.h_embed.adjoint() * &model.ops[0] * &model.h_embed;
        assert!(op_norm(&(compressed - u)) < 1e-10);
    }

    #[test]
    fn shift_model_for_zero_rep() {
        let (gns, model) =
            minimal_dilation(&Representation::zero(nat(), 1), 3, DilationOptions::default()).unwrap();
        assert_eq!(gns.space_dim, 4);
        for k in 0..3 {
            let vk = gns.factor.columns(k, 1).into_owned();
            let vk1 = gns.factor.columns(k + 1, 1).into_owned();
            assert!(op_norm(&(&model.ops[0] * vk - vk1)) < 1e-12);
        }
    }

    #[test]
    fn sz_nagy_gram_is_psd() {
        let t = from_real(2, 2, &[0.6, 0.7, -0.2, 0.3]);
        let t = &t * num_complex::Complex64::new(1.0 / op_norm(&t), 0.0);
        let g = gram(&rep1(t.clone()), 3).unwrap();
        assert!(min_eigenvalue(&g) > -1e-12);
        let (_, model) = minimal_dilation(&rep1(t.clone()), 3, DilationOptions::default()).unwrap();
        for k in 0..=3 {
            let c = model.h_embed.adjoint() * power(&model.ops[0], k) * &model.h_embed;
            assert!(op_norm(&(c - power(&t, k))) < 1e-9);
        }
    }

    #[test]
    fn non_regular_rep_is_rejected() {
        // S1 = S2 = 0.9 N with N² = 0: Z = I − 1.62 E₁₁ is indefinite
        let n2: MonoidSpec = "NA(2)".parse().unwrap();
        let s = from_real(2, 2, &[0.0, 0.9, 0.0, 0.0]);
        let rep = Representation::new(n2, 2, vec![s.clone(), s]).unwrap();
        assert!(matches!(
            minimal_dilation(&rep, 2, DilationOptions::default()),
            Err(Error::NotRegular { .. })
        ));
    }

    #[test]
    fn apply_word_bounds() {
        let (gns, model) =
            minimal_dilation(&Representation::zero(nat(), 1), 3, DilationOptions::default()).unwrap();
        let v0 = gns.factor.columns(0, 1).into_owned();
        let e = nat().identity();
        assert_eq!(model.apply_word(&e, &v0, 0).unwrap(), v0);
        let two = Element::Exponents(vec![2]);
        let v2 = model.apply_word(&two, &v0, 0).unwrap();
        assert!(op_norm(&(v2 - gns.factor.columns(2, 1))) < 1e-12);
        let four = Element::Exponents(vec![4]);
        assert!(matches!(model.apply_word(&four, &v0, 0), Err(Error::TruncationOverflow { .. })));
    }
}
