//! Ando-type dilations of a commuting pair `S1, S2` alongside a representation
//! `T` of `P`, for `ℕ² × P` (Cartesian) and `ℕ² * P` (free).
//!
//! Pipeline: minimal dilations of each `S_i` with `T`, split off the common
//! minimal part `M₀` of `T`, glue into `K`, separate the orbit of the product
//! isometry from its complement, ampliate the complement `m` times and swap
//! slots with a partial isometry `U` so that `Ṽ₁ = V₁′U` and `Ṽ₂ = U*V₂′`
//! commute on the truncated domain.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gns::{dilation_on, gram_over, minimal_dilation, span_cutoff, DilationOptions, GnsModel, ModelJson, Provenance, TruncatedIsoRep};
use crate::linalg::{block_diag, BlockMat, complement, eye, hstack, op_norm, orth, pinv, select_columns, set_block, CMat};
use crate::monoid::{Element, MonoidSpec};
use crate::regularity::{check_mixed_cartesian, check_mixed_free};
use crate::representation::{MatrixJson, Representation};
use crate::verify::{
    check_coextension, check_commutation, check_dilation, check_doubly_commute, check_isometric,
    check_nica, check_orthogonal_ranges, CheckEntry, VerificationReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AndoMode {
    Cartesian,
    Free,
}

/// Whether the orbit spaces of `V₁V₂` and `V₂V₁` coincide numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    Aligned,
    AlignmentFallback,
}

#[derive(Clone, Copy, Debug)]
pub struct AndoOptions {
    /// Truncation radius `L` of the minimal dilations.
    pub radius: usize,
    /// Number of ampliation copies `m`.
    pub copies: usize,
    pub tol: f64,
    pub rank_cutoff: f64,
    /// Depth of the orbit frames; defaults to `valid_degree + 1`.
    pub orbit_depth: Option<usize>,
    /// Free case: deepest word length at which wandering slots are allocated;
    /// defaults to `2·orbit_depth`.
    pub slot_depth: Option<usize>,
    /// Radius in `P` of the parent dilations; `None` picks it from `‖T‖` so
    /// that the neglected tail is below `tol` (Cartesian case only).
    pub p_radius: Option<usize>,
    /// Largest intermediate space dimension allowed.
    pub max_dim: usize,
}

impl AndoOptions {
    pub fn new(radius: usize, copies: usize) -> Self {
        Self {
            radius,
            copies,
            tol: 1e-8,
            rank_cutoff: 1e-10,
            orbit_depth: None,
            slot_depth: None,
            p_radius: None,
            max_dim: 6000,
        }
    }

    pub fn valid_degree(&self) -> usize {
        self.radius.saturating_sub(2).min(self.copies.saturating_sub(1))
    }

    /// Radius in `P` used for the parent dilations.
    pub fn resolve_p_radius(&self, mode: AndoMode, rep_t: &Representation) -> usize {
        if let Some(r) = self.p_radius {
            return r.max(self.radius);
        }
        if mode == AndoMode::Free {
            return self.radius;
        }
        let tau = rep_t.generators.iter().map(op_norm).fold(0.0, f64::max);
        if tau <= 0.0 || tau >= 1.0 {
            return self.radius;
        }
        let wanted = ((self.tol * 1e-2).ln() / tau.ln()).ceil() as usize;
        let budget = self.max_dim / (2 * (2 * self.copies + 1));
        let mut r = self.radius;
        while r < wanted
            && (self.radius + 1) * rep_t.spec.ball(r + 1).len() * rep_t.dim <= budget
        {
            r += 1;
        }
        r
    }

    fn dilation(&self) -> DilationOptions {
        DilationOptions { rank_cutoff: self.rank_cutoff, tol: self.tol }
    }
}

/// `B_i = W₀ ⊕ Z_i` splitting of a dilation of `S_i` with `T`.
#[derive(Clone, Debug)]
pub struct SplitData {
    pub parent: TruncatedIsoRep,
    /// `J`: maps the orbit span of `B(p)h` onto the coordinates of `M₀`.
    pub ident: CMat,
    /// Orthonormal basis of `N_i`, the complement of the orbit span, ordered
    /// by the parent degree at which each direction first appears.
    pub complement: CMat,
    pub complement_degree: Vec<usize>,
    /// `Z_i(g)`: compression of `B(g)` to `N_i`.
    pub z: Vec<CMat>,
    pub reducing_residual: f64,
    pub intertwining_residual: f64,
    pub reducing: bool,
}

fn apply_word(ops: &[CMat], word: &[usize], v: &CMat) -> CMat {
    word.iter().rev().fold(v.clone(), |acc, &g| &ops[g] * acc)
}

/// Splits `parent` (generator 0 is `A`, generators `1..` are `B`) into the
/// copy of the canonical minimal dilation of `T` and its complement.
pub fn split_off_minimal(
    parent: &TruncatedIsoRep,
    rep_t: &Representation,
    radius: usize,
    opts: DilationOptions,
) -> Result<SplitData> {
    let (gns0, model0) = minimal_dilation(rep_t, radius, opts)?;
    split_with(parent, &gns0, &model0, opts)
}

fn split_with(
    parent: &TruncatedIsoRep,
    gns0: &GnsModel,
    model0: &TruncatedIsoRep,
    opts: DilationOptions,
) -> Result<SplitData> {
    let spec_p = &gns0.rep.spec;
    let n = gns0.rep.dim;
    let b: Vec<CMat> = parent.ops[1..].to_vec();
    if b.len() != spec_p.rank() {
        return Err(Error::Structure("parent does not extend the representation of P".into()));
    }
    let ball = spec_p.ball(gns0.radius);
    let frames: Vec<CMat> = ball.iter().map(|p| apply_word(&b, &spec_p.word(p), &parent.h_embed)).collect();
    let f = hstack(&frames, parent.space_dim);

    let gram_residual = op_norm(&(f.adjoint() * &f - &gns0.gram));
    if gram_residual > opts.tol * op_norm(&gns0.gram).max(1.0) {
        return Err(Error::NotRegularParent(gram_residual));
    }
    let ident = &gns0.factor * pinv(&f, opts.span_cutoff());
    let span = orth(&f, opts.span_cutoff());
    let (comp, complement_degree) = graded_complement(parent, &span, opts.span_cutoff());
    let z = b.iter().map(|op| comp.adjoint() * op * &comp).collect();

    let inner: Vec<usize> = ball
        .iter()
        .enumerate()
        .filter(|(_, p)| spec_p.degree(p) < gns0.radius)
        .flat_map(|(i, _)| (i * n)..(i * n + n))
        .collect();
    let fv = select_columns(&f, &inner);
    let qv = orth(&fv, opts.span_cutoff());
    let outside = eye(parent.space_dim) - &span * span.adjoint();
    let mut reducing_residual: f64 = 0.0;
    let mut intertwining_residual: f64 = 0.0;
    for (g, op) in b.iter().enumerate() {
        reducing_residual = reducing_residual
            .max(op_norm(&(&outside * op * &qv)))
            .max(op_norm(&(&outside * op.adjoint() * &span)));
        let lhs = &ident * op * &fv;
        let rhs = &model0.ops[g] * &ident * &fv;
        intertwining_residual = intertwining_residual.max(op_norm(&(lhs - rhs)));
    }
    Ok(SplitData {
        parent: parent.clone(),
        ident,
        complement: comp,
        complement_degree,
        z,
        reducing_residual,
        intertwining_residual,
        reducing: reducing_residual <= opts.tol && intertwining_residual <= opts.tol,
    })
}

/// Basis of the orthogonal complement of `span`, built degree by degree along
/// the parent filtration.
fn graded_complement(parent: &TruncatedIsoRep, span: &CMat, cut: f64) -> (CMat, Vec<usize>) {
    let outside = eye(parent.space_dim) - span * span.adjoint();
    let mut basis = CMat::zeros(parent.space_dim, 0);
    let mut degree = Vec::new();
    for (t, level) in parent.filtration.iter().enumerate() {
        let mut fresh = &outside * level;
        fresh -= &basis * (basis.adjoint() * &fresh);
        // level columns are orthonormal, so an absolute threshold is meaningful
        if op_norm(&fresh) <= cut {
            continue;
        }
        let new = orth(&fresh, cut);
        degree.extend(std::iter::repeat(t).take(new.ncols()));
        basis = hstack(&[basis, new], parent.space_dim);
    }
    let rest = complement(&hstack(&[span.clone(), basis.clone()], parent.space_dim));
    degree.extend(std::iter::repeat(parent.filtration.len()).take(rest.ncols()));
    (hstack(&[basis, rest], parent.space_dim), degree)
}

/// Partial isometry on `K₂ ⊕ K₂^m ⊕ K₂^m` sending
/// `(k, ξ₁..ξ_m, η₁..η_m)` to `(η₁, k, ξ₁..ξ_{m−1}, η₂..η_m, 0)`.
pub fn swap_partial_isometry(dim_k2: usize, m: usize) -> CMat {
    let k = dim_k2;
    let total = k * (2 * m + 1);
    let xi = |j: usize| k * j; // j = 1..=m
    let eta = |j: usize| k * (m + j);
    let mut f = CMat::zeros(total, total);
    let id = eye(k);
    set_block(&mut f, xi(1), 0, &id);
    for j in 1..m {
        set_block(&mut f, xi(j + 1), xi(j), &id);
    }
    set_block(&mut f, 0, eta(1), &id);
    for j in 2..=m {
        set_block(&mut f, eta(j - 1), eta(j), &id);
    }
    f
}

/// Sizes of the intermediate spaces.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AndoDims {
    pub m0: usize,
    pub n1: usize,
    pub n2: usize,
    pub wandering: usize,
    pub k: usize,
    pub k1: usize,
    pub k1_prime: usize,
    pub k2: usize,
    pub k2_prime: usize,
    pub total: usize,
    /// Dimension of the exported model after restriction to the word span.
    pub model: usize,
}

#[derive(Clone, Debug)]
pub struct AndoResult {
    pub mode: AndoMode,
    pub alignment: Alignment,
    /// `‖P_{K₁} − P_{K₁′}‖`: distance between the two orbit spaces.
    pub alignment_residual: f64,
    /// Operators `[Ṽ₁, Ṽ₂, W′(g)...]` over `ℕ² × P` or `ℕ² * P`.
    pub model: TruncatedIsoRep,
    pub u: CMat,
    pub valid_degree: usize,
    pub dims: AndoDims,
    pub report: VerificationReport,
}

impl AndoResult {
    pub fn space_dim(&self) -> usize {
        self.model.space_dim
    }

    pub fn tilde_v1(&self) -> &CMat {
        &self.model.ops[0]
    }

    pub fn tilde_v2(&self) -> &CMat {
        &self.model.ops[1]
    }

    pub fn wp(&self) -> &[CMat] {
        &self.model.ops[2..]
    }

    pub fn h_embed(&self) -> &CMat {
        &self.model.h_embed
    }

    pub fn to_json(&self) -> AndoJson {
        AndoJson {
            mode: self.mode,
            alignment: self.alignment,
            alignment_residual: self.alignment_residual,
            valid_degree: self.valid_degree,
            dims: self.dims.clone(),
            model: self.model.to_json(),
            u: (&self.u).into(),
            report: self.report.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AndoJson {
    pub mode: AndoMode,
    pub alignment: Alignment,
    pub alignment_residual: f64,
    pub valid_degree: usize,
    pub dims: AndoDims,
    pub model: ModelJson,
    pub u: MatrixJson,
    pub report: VerificationReport,
}

/// The glued space `K` with `V₁, V₂, W` and the embedding of `H`.
struct Glued {
    v1: CMat,
    v2: CMat,
    w: Vec<CMat>,
    h: CMat,
    dims: AndoDims,
}

fn check_pair(s1: &CMat, s2: &CMat, rep_t: &Representation, tol: f64) -> Result<()> {
    let n = rep_t.dim;
    for s in [s1, s2] {
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::Structure(format!("S has shape {}x{}, expected {n}x{n}", s.nrows(), s.ncols())));
        }
    }
    let c = op_norm(&(s1 * s2 - s2 * s1));
    if c > tol {
        return Err(Error::Precondition(format!("S1 and S2 do not commute: residual {c:e}")));
    }
    let v = rep_t.validate(tol);
    if !v.overall {
        return Err(Error::Precondition("T is not a contractive representation".into()));
    }
    Ok(())
}

fn single_spec(mode: AndoMode, p: &MonoidSpec) -> MonoidSpec {
    match mode {
        AndoMode::Cartesian => MonoidSpec::cartesian(MonoidSpec::FreeAbelian(1), p.clone()),
        AndoMode::Free => MonoidSpec::free_product(MonoidSpec::FreeAbelian(1), p.clone()),
    }
}

fn pair_spec(mode: AndoMode, p: &MonoidSpec) -> MonoidSpec {
    match mode {
        AndoMode::Cartesian => MonoidSpec::cartesian(MonoidSpec::FreeAbelian(2), p.clone()),
        AndoMode::Free => MonoidSpec::free_product(MonoidSpec::FreeAbelian(2), p.clone()),
    }
}

fn with_s(spec: MonoidSpec, s: &CMat, rep_t: &Representation) -> Result<Representation> {
    let mut gens = vec![s.clone()];
    gens.extend(rep_t.generators.iter().cloned());
    Representation::new(spec, rep_t.dim, gens)
}

pub fn assemble_cartesian(s1: &CMat, s2: &CMat, rep_t: &Representation, opts: AndoOptions) -> Result<AndoResult> {
    assemble(AndoMode::Cartesian, s1, s2, rep_t, opts)
}

pub fn assemble_free(s1: &CMat, s2: &CMat, rep_t: &Representation, opts: AndoOptions) -> Result<AndoResult> {
    assemble(AndoMode::Free, s1, s2, rep_t, opts)
}

pub fn assemble(mode: AndoMode, s1: &CMat, s2: &CMat, rep_t: &Representation, opts: AndoOptions) -> Result<AndoResult> {
    if opts.radius < 2 || opts.copies < 1 {
        return Err(Error::Precondition("need L ≥ 2 and m ≥ 1".into()));
    }
    check_pair(s1, s2, rep_t, opts.tol)?;
    for (i, s) in [s1, s2].into_iter().enumerate() {
        let report = match mode {
            AndoMode::Cartesian => check_mixed_cartesian(s, rep_t, opts.tol),
            AndoMode::Free => check_mixed_free(s, rep_t, opts.tol),
        }
        .map_err(|e| Error::Precondition(e.to_string()))?;
        if !report.passed {
            return Err(Error::Precondition(format!(
                "S{} with T has no *-regular dilation: min eigenvalue {:e}",
                i + 1,
                report.min_eigenvalue()
            )));
        }
    }

    let d = opts.valid_degree();
    let od = opts.orbit_depth.unwrap_or(d + 1);
    let dil = opts.dilation();
    let spec_q = single_spec(mode, &rep_t.spec);
    let pr = opts.resolve_p_radius(mode, rep_t);
    let (gns0, model0) = minimal_dilation(rep_t, pr, dil)?;
    let index = match mode {
        AndoMode::Cartesian => parent_index(&spec_q, opts.radius, pr)?,
        AndoMode::Free => spec_q.ball(opts.radius),
    };
    let mut splits = Vec::new();
    let mut parents = Vec::new();
    for s in [s1, s2] {
        let rep = with_s(spec_q.clone(), s, rep_t)?;
        let (_, parent) = dilation_on(&rep, index.clone(), dil)?;
        splits.push(split_with(&parent, &gns0, &model0, dil)?);
        parents.push(parent);
    }

    let glued = match mode {
        AndoMode::Cartesian => glue_cartesian(&splits, &model0, &gns0),
        AndoMode::Free => {
            let depth = opts.slot_depth.unwrap_or(2 * od);
            let g = glue_free(&splits, &model0, &gns0, depth, opts.max_dim)?;
            compress(g, depth, opts.rank_cutoff)
        }
    };
    let split_residual = splits
        .iter()
        .map(|s| s.reducing_residual.max(s.intertwining_residual))
        .fold(0.0, f64::max);

    let rep12 = with_s(spec_q.clone(), &(s1 * s2), rep_t)?;
    // The orbit frame goes as deep in P as the parents do.
    let orbit_index = match mode {
        AndoMode::Cartesian => parent_index(&spec_q, od, pr)?,
        AndoMode::Free => spec_q.ball(od),
    };
    finish(mode, glued, &rep12, s1, s2, rep_t, od, &orbit_index, d, split_residual, opts)
}

/// Elements `a^k q` with `k ≤ radius` and `|q| ≤ p_radius`.
fn parent_index(spec_q: &MonoidSpec, radius: usize, p_radius: usize) -> Result<Vec<Element>> {
    let (MonoidSpec::Cartesian(_, p) | MonoidSpec::FreeProduct(_, p)) = spec_q else {
        return Err(Error::Structure("expected a two-factor spec".into()));
    };
    let ball_p = p.ball(p_radius);
    let mut out = Vec::new();
    for k in 0..=radius {
        for q in &ball_p {
            let word: Vec<usize> =
                std::iter::repeat(0).take(k).chain(p.word(q).into_iter().map(|g| g + 1)).collect();
            out.push(spec_q.from_word(&word)?);
        }
    }
    Ok(out)
}

fn a_prime(split: &SplitData) -> CMat {
    let r = stack_rows(&split.ident, &split.complement.adjoint());
    &r * &split.parent.ops[0] * r.adjoint()
}

fn stack_rows(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    set_block(&mut out, 0, 0, a);
    set_block(&mut out, a.nrows(), 0, b);
    out
}

/// Embeds a square matrix acting on `[M₀, N]` into `K` at index lists.
fn embed(target: &mut CMat, op: &CMat, idx: &[usize]) {
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            target[(i, j)] = op[(a, b)];
        }
    }
}

fn glue_cartesian(splits: &[SplitData], model0: &TruncatedIsoRep, gns0: &GnsModel) -> Glued {
    let r0 = gns0.space_dim;
    let (n1, n2) = (splits[0].complement.ncols(), splits[1].complement.ncols());
    let k = r0 + n1 + n2;
    let m0: Vec<usize> = (0..r0).collect();
    let i1: Vec<usize> = m0.iter().copied().chain(r0..r0 + n1).collect();
    let i2: Vec<usize> = m0.iter().copied().chain(r0 + n1..k).collect();

    let mut v1 = eye(k);
    embed(&mut v1, &a_prime(&splits[0]), &i1);
    let mut v2 = eye(k);
    embed(&mut v2, &a_prime(&splits[1]), &i2);
    let w = (0..model0.ops.len())
        .map(|g| block_diag(&[&model0.ops[g], &splits[0].z[g], &splits[1].z[g]]))
        .collect();
    let mut h = CMat::zeros(k, gns0.rep.dim);
    set_block(&mut h, 0, 0, &gns0.h_embed);
    Glued { v1, v2, w, h, dims: AndoDims { m0: r0, n1, n2, k, ..Default::default() } }
}

/// Wandering space `ℓ²(ball_P) ⊗ ℂ^J` with slots allocated on demand.
///
/// Every vector that `C₁` or `C₂` must map (a basis vector of `N₁`, `N₂` or
/// the wandering space) gets a fresh slot `e_e ⊗ δ_j`, provided its word
/// depth from `H` stays within `max_depth`. The wandering vectors of slot `j`
/// are `e_q ⊗ δ_j` for `q` in the ball. Each vector is mapped once and the
/// slot is shared by `C₁` and `C₂`.
struct Wandering {
    vectors: Vec<(Element, usize)>,
    /// Slot receiving each wandering vector under `C_i`.
    image: Vec<Option<usize>>,
    n_image: [Vec<Option<usize>>; 2],
    slot_root: Vec<usize>,
}

impl Wandering {
    fn build(spec_p: &MonoidSpec, radius: usize, n_degree: [&[usize]; 2], max_depth: usize, budget: usize) -> Result<Self> {
        let ball = spec_p.ball(radius);
        let mut w = Wandering {
            vectors: Vec::new(),
            image: Vec::new(),
            n_image: [vec![None; n_degree[0].len()], vec![None; n_degree[1].len()]],
            slot_root: Vec::new(),
        };
        // slot depth = word length from H to e_e ⊗ δ_j; N vectors sit at depth ≥ 1
        let new_slot = |w: &mut Wandering, depth: usize| -> Result<usize> {
            let slot = w.slot_root.len();
            w.slot_root.push(w.vectors.len());
            for q in ball.iter().filter(|q| depth + spec_p.degree(q) <= max_depth) {
                w.vectors.push((q.clone(), slot));
                w.image.push(None);
            }
            if w.vectors.len() > budget {
                return Err(Error::Dimension { needed: w.vectors.len(), budget });
            }
            Ok(slot)
        };
        // an N vector of parent degree t is first reached at depth t; its slot one later
        let mut slot_depth = Vec::new();
        for i in 0..2 {
            for (k, &t) in n_degree[i].iter().enumerate() {
                let depth = t.max(1) + 1;
                if depth <= max_depth {
                    let s = new_slot(&mut w, depth)?;
                    slot_depth.push(depth);
                    w.n_image[i][k] = Some(s);
                }
            }
        }
        let mut cursor = 0;
        while cursor < w.vectors.len() {
            let (q, slot) = w.vectors[cursor].clone();
            let depth = slot_depth[slot] + spec_p.degree(&q);
            if depth < max_depth {
                let s = new_slot(&mut w, depth + 1)?;
                slot_depth.push(depth + 1);
                w.image[cursor] = Some(s);
            }
            cursor += 1;
        }
        Ok(w)
    }
}

fn glue_free(
    splits: &[SplitData],
    model0: &TruncatedIsoRep,
    gns0: &GnsModel,
    max_depth: usize,
    budget: usize,
) -> Result<Glued> {
    let spec_p = &gns0.rep.spec;
    let r0 = gns0.space_dim;
    let (n1, n2) = (splits[0].complement.ncols(), splits[1].complement.ncols());
    let wander = Wandering::build(
        spec_p,
        gns0.radius,
        [&splits[0].complement_degree, &splits[1].complement_degree],
        max_depth,
        budget,
    )?;
    let e0 = r0 + n1 + n2;
    let k = e0 + wander.vectors.len();
    if k > budget {
        return Err(Error::Dimension { needed: k, budget });
    }
    let position: HashMap<(Vec<usize>, usize), usize> = wander
        .vectors
        .iter()
        .enumerate()
        .map(|(i, (q, s))| ((spec_p.word(q), *s), e0 + i))
        .collect();
    let root = |slot: usize| e0 + wander.slot_root[slot];
    let one = Complex64::new(1.0, 0.0);

    let m0: Vec<usize> = (0..r0).collect();
    let i1: Vec<usize> = m0.iter().copied().chain(r0..r0 + n1).collect();
    let i2: Vec<usize> = m0.iter().copied().chain(r0 + n1..e0).collect();
    let mut v1 = CMat::zeros(k, k);
    embed(&mut v1, &a_prime(&splits[0]), &i1);
    let mut v2 = CMat::zeros(k, k);
    embed(&mut v2, &a_prime(&splits[1]), &i2);
    // C₂ on N₂ for V₁, C₁ on N₁ for V₂
    for (kk, slot) in wander.n_image[1].iter().enumerate() {
        if let Some(s) = slot {
            v1[(root(*s), r0 + n1 + kk)] = one;
        }
    }
    for (kk, slot) in wander.n_image[0].iter().enumerate() {
        if let Some(s) = slot {
            v2[(root(*s), r0 + kk)] = one;
        }
    }
    for (i, img) in wander.image.iter().enumerate() {
        if let Some(s) = img {
            v1[(root(*s), e0 + i)] = one;
            v2[(root(*s), e0 + i)] = one;
        }
    }
    let mut w = Vec::with_capacity(spec_p.rank());
    for g in 0..spec_p.rank() {
        let mut op = CMat::zeros(k, k);
        set_block(&mut op, 0, 0, &model0.ops[g]);
        set_block(&mut op, r0, r0, &splits[0].z[g]);
        set_block(&mut op, r0 + n1, r0 + n1, &splits[1].z[g]);
        let gen = spec_p.generator(g);
        for (i, (q, s)) in wander.vectors.iter().enumerate() {
            let gq = spec_p.multiply(&gen, q).expect("ball element");
            if let Some(&j) = position.get(&(spec_p.word(&gq), *s)) {
                op[(j, e0 + i)] = one;
            }
        }
        w.push(op);
    }
    let mut h = CMat::zeros(k, gns0.rep.dim);
    set_block(&mut h, 0, 0, &gns0.h_embed);
    let dims = AndoDims { m0: r0, n1, n2, wandering: wander.vectors.len(), k, ..Default::default() };
    Ok(Glued { v1, v2, w, h, dims })
}

/// Restricts `K` to the span of words of length `≤ depth` applied to `H`.
fn compress(g: Glued, depth: usize, cutoff: f64) -> Glued {
    let mut ops = vec![g.v1.clone(), g.v2.clone()];
    ops.extend(g.w.iter().cloned());
    let q = TruncatedIsoRep::word_filtration(&ops, &g.h, depth, span_cutoff(cutoff))
        .pop()
        .expect("nonempty filtration");
    let c = |m: &CMat| q.adjoint() * m * &q;
    let mut dims = g.dims;
    dims.k = q.ncols();
    Glued { v1: c(&g.v1), v2: c(&g.v2), w: g.w.iter().map(c).collect(), h: q.adjoint() * &g.h, dims }
}

/// Orbit frame `{V^a W(p) h}` over `ball_{Q′}(depth)`.
fn orbit_frame(v: &CMat, w: &[CMat], h: &CMat, spec_q: &MonoidSpec, index: &[Element]) -> CMat {
    let mut ops = vec![v.clone()];
    ops.extend(w.iter().cloned());
    let cols: Vec<CMat> = index.iter().map(|x| apply_word(&ops, &spec_q.word(x), h)).collect();
    hstack(&cols, h.nrows())
}

struct Parts<'a> {
    v1: &'a CMat,
    v2: &'a CMat,
    w: &'a [CMat],
    q1: &'a CMat,
    q2: &'a CMat,
    q1p: &'a CMat,
    q2p: &'a CMat,
    phi: &'a CMat,
}

struct Lifted {
    v1p: BlockMat,
    v2p: BlockMat,
    wp: Vec<BlockMat>,
    u: BlockMat,
}

/// `ℒ = K ⊕ K₂^m ⊕ K₂′^m` with `V₁′ = V₁ ⊕ X^m ⊕ Y^m`, `V₂′ = V₂ ⊕ I ⊕ I`.
/// Block 0 is `K`, blocks `1..=m` the `ξ` copies, `m+1..=2m` the `η` copies.
fn lift_cartesian(p: &Parts, m: usize) -> Lifted {
    let k = p.v1.nrows();
    let (k2, k2p) = (p.q2.ncols(), p.q2p.ncols());
    let cuts: Vec<usize> = std::iter::once(0)
        .chain((0..=m).map(|j| k + j * k2))
        .chain((1..=m).map(|j| k + m * k2 + j * k2p))
        .collect();
    let (xi, eta) = (|j: usize| j, |j: usize| m + j);
    let x = p.q2.adjoint() * (p.v1 * p.v2) * p.q2;
    let y = p.q2p.adjoint() * (p.v2 * p.v1) * p.q2p;

    let mut v1p = BlockMat::new(cuts.clone());
    let mut v2p = BlockMat::new(cuts.clone());
    let mut wp: Vec<BlockMat> = p.w.iter().map(|_| BlockMat::new(cuts.clone())).collect();
    v1p.add(0, 0, p.v1.clone());
    v2p.add(0, 0, p.v2.clone());
    for (g, wg) in p.w.iter().enumerate() {
        wp[g].add(0, 0, wg.clone());
    }
    let w2: Vec<CMat> = p.w.iter().map(|wg| p.q2.adjoint() * wg * p.q2).collect();
    let w2p: Vec<CMat> = p.w.iter().map(|wg| p.q2p.adjoint() * wg * p.q2p).collect();
    for j in 1..=m {
        v1p.add(xi(j), xi(j), x.clone());
        v1p.add(eta(j), eta(j), y.clone());
        v2p.add(xi(j), xi(j), eye(k2));
        v2p.add(eta(j), eta(j), eye(k2p));
        for g in 0..p.w.len() {
            wp[g].add(xi(j), xi(j), w2[g].clone());
            wp[g].add(eta(j), eta(j), w2p[g].clone());
        }
    }

    let mut u = BlockMat::new(cuts);
    u.add(0, 0, p.phi.adjoint() * p.q1 * p.q1.adjoint());
    u.add(xi(1), 0, p.q2.adjoint());
    for j in 1..m {
        u.add(xi(j + 1), xi(j), eye(k2));
    }
    u.add(0, eta(1), p.q2p.clone());
    for j in 2..=m {
        u.add(eta(j - 1), eta(j), eye(k2p));
    }
    Lifted { v1p, v2p, wp, u }
}

/// `ℒ = K ⊕ K^m ⊕ K^m` with `V₁′ = V₁ ⊕ V₁^m ⊕ V₂^m` and
/// `V₂′ = V₂ ⊕ V₂^m ⊕ V₁^m`, so each `V_i′` keeps ranges orthogonal to `W′`.
/// `U` fixes the `K₁` parts (through `Φ`) and shifts the `K₂` parts between copies.
fn lift_free(p: &Parts, m: usize) -> Lifted {
    let k = p.v1.nrows();
    let cuts: Vec<usize> = (0..=2 * m + 1).map(|b| b * k).collect();
    let (xi, eta) = (|j: usize| j, |j: usize| m + j);
    let mut v1p = BlockMat::new(cuts.clone());
    let mut v2p = BlockMat::new(cuts.clone());
    let mut wp: Vec<BlockMat> = p.w.iter().map(|_| BlockMat::new(cuts.clone())).collect();
    for b in 0..=2 * m {
        let (a1, a2) = if b <= m { (p.v1, p.v2) } else { (p.v2, p.v1) };
        v1p.add(b, b, a1.clone());
        v2p.add(b, b, a2.clone());
        for (g, wg) in p.w.iter().enumerate() {
            wp[g].add(b, b, wg.clone());
        }
    }

    let fix = p.phi.adjoint() * p.q1 * p.q1.adjoint();
    let unfix = p.phi * p.q1p * p.q1p.adjoint();
    let x_part = p.q2 * p.q2.adjoint();
    let y_part = p.q2p * p.q2p.adjoint();
    let mut u = BlockMat::new(cuts);
    u.add(0, 0, fix.clone());
    u.add(eta(1), 0, x_part.clone());
    u.add(0, eta(1), y_part.clone());
    for j in 1..=m {
        u.add(xi(j), xi(j), fix.clone());
        u.add(eta(j), eta(j), unfix.clone());
        if j < m {
            u.add(eta(j + 1), xi(j), x_part.clone());
            u.add(xi(j), eta(j + 1), y_part.clone());
        }
    }
    Lifted { v1p, v2p, wp, u }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mode: AndoMode,
    glued: Glued,
    rep12: &Representation,
    s1: &CMat,
    s2: &CMat,
    rep_t: &Representation,
    od: usize,
    orbit_index: &[Element],
    d: usize,
    split_residual: f64,
    opts: AndoOptions,
) -> Result<AndoResult> {
    let Glued { v1, v2, w, h, mut dims } = glued;

    let k = dims.k;
    let m = opts.copies;
    let cut = opts.rank_cutoff;
    let spec_q = &rep12.spec;

    let v = &v1 * &v2;
    let vp = &v2 * &v1;
    let g1 = orbit_frame(&v, &w, &h, spec_q, orbit_index);
    let g1p = orbit_frame(&vp, &w, &h, spec_q, orbit_index);
    let gram12 = gram_over(rep12, orbit_index)?;
    let orbit_gram = op_norm(&(g1.adjoint() * &g1 - &gram12)).max(op_norm(&(g1p.adjoint() * &g1p - &gram12)));

    let q1 = orth(&g1, span_cutoff(cut));
    let q1p = orth(&g1p, span_cutoff(cut));
    let phi = &g1 * pinv(&g1p, span_cutoff(cut));
    let q2 = complement(&q1);
    let q2p = complement(&q1p);
    let alignment_residual = if q1.ncols() == q1p.ncols() {
        op_norm(&(&q1 * q1.adjoint() - &q1p * q1p.adjoint()))
    } else {
        1.0
    };
    let (k2, k2p) = (q2.ncols(), q2p.ncols());
    dims.k1 = q1.ncols();
    dims.k1_prime = q1p.ncols();
    dims.k2 = k2;
    dims.k2_prime = k2p;
    let total = match mode {
        AndoMode::Cartesian => k + m * (k2 + k2p),
        AndoMode::Free => k * (2 * m + 1),
    };
    dims.total = total;
    if total > opts.max_dim {
        return Err(Error::Dimension { needed: total, budget: opts.max_dim });
    }
    let parts = Parts { v1: &v1, v2: &v2, w: &w, q1: &q1, q2: &q2, q1p: &q1p, q2p: &q2p, phi: &phi };
    let Lifted { v1p, v2p, wp, u } = match mode {
        AndoMode::Cartesian => lift_cartesian(&parts, m),
        AndoMode::Free => lift_free(&parts, m),
    };

    let tv1 = v1p.mul(&u);
    let tv2 = u.adjoint().mul(&v2p);
    let mut h_l = CMat::zeros(total, h.ncols());
    set_block(&mut h_l, 0, 0, &h);
    let mut ops = vec![tv1, tv2];
    ops.extend(wp);

    let n_ops = ops.len();
    let spans = TruncatedIsoRep::word_filtration_with(n_ops, |g, x| ops[g].apply(x), &h_l, d + 1, span_cutoff(cut));
    // Every vector the checks produce is a word of length ≤ d + max(2, d/2)
    // in the operators and their adjoints, so the model lives on that span.
    let mixed = |g: usize, x: &CMat| if g < n_ops { ops[g].apply(x) } else { ops[g - n_ops].apply_adjoint(x) };
    let q = TruncatedIsoRep::word_filtration_with(2 * n_ops, mixed, &h_l, d + (d / 2).max(2), span_cutoff(cut))
        .pop()
        .expect("nonempty filtration");
    let tol = opts.tol;
    let pd = &spans[d];
    let swap = u.apply_adjoint(&v2p.apply(&v1p.apply(&u.apply(pd)))) - v1p.apply(&v2p.apply(pd));
    let u_checks = [
        CheckEntry::new("u-identity", op_norm(&swap), d, tol),
        CheckEntry::new("u-fixes-h", op_norm(&(u.apply(&h_l) - &h_l)), 0, tol),
    ];
    drop((v1p, v2p));
    let compress_op = |op: &BlockMat| q.adjoint() * op.apply(&q);
    let ops: Vec<CMat> = ops.iter().map(compress_op).collect();
    let u = compress_op(&u);
    let filtration: Vec<CMat> = spans.iter().map(|f| q.adjoint() * f).collect();
    dims.model = q.ncols();

    let provenance = match mode {
        AndoMode::Cartesian => Provenance::AndoCartesian,
        AndoMode::Free => Provenance::AndoFree,
    };
    let model = TruncatedIsoRep {
        spec: pair_spec(mode, &rep_t.spec),
        space_dim: q.ncols(),
        h_embed: q.adjoint() * &h_l,
        ops,
        filtration,
        valid_degree: d,
        provenance,
    };

    let mut gens = vec![s1.clone(), s2.clone()];
    gens.extend(rep_t.generators.iter().cloned());
    let rep_full = Representation::new(model.spec.clone(), rep_t.dim, gens)?;
    let mut report = verify_ando_model(&model, &rep_full, d, opts.tol)?;
    report.extend(u_checks);
    report.extend([
        CheckEntry::new("orbit-gram", orbit_gram, od, tol * op_norm(&gram12).max(1.0)),
        CheckEntry::new("split", split_residual, opts.radius.saturating_sub(1), tol),
    ]);
    let alignment = if alignment_residual <= tol { Alignment::Aligned } else { Alignment::AlignmentFallback };
    Ok(AndoResult { mode, alignment, alignment_residual, model, u, valid_degree: d, dims, report })
}

/// Property suite for an Ando-type model with operators `[Ṽ₁, Ṽ₂, W′...]`:
/// isometry, commutation, dilation, co-extension, Nica covariance of each
/// `Ṽ_i` with `W′`, and double commutation (Cartesian) or orthogonal ranges
/// (free) between `Ṽ_i` and `W′`.
pub fn verify_ando_model(model: &TruncatedIsoRep, rep: &Representation, d: usize, tol: f64) -> Result<VerificationReport> {
    let (mode, p) = match &model.spec {
        MonoidSpec::Cartesian(a, p) if **a == MonoidSpec::FreeAbelian(2) => (AndoMode::Cartesian, (**p).clone()),
        MonoidSpec::FreeProduct(a, p) if **a == MonoidSpec::FreeAbelian(2) => (AndoMode::Free, (**p).clone()),
        MonoidSpec::FreeAbelian(2) => (AndoMode::Cartesian, MonoidSpec::Trivial),
        other => return Err(Error::Structure(format!("{other} is not of the form NA(2) x P or NA(2) * P"))),
    };
    let mut checks = vec![
        check_isometric(model, d, tol),
        check_commutation(model, d, tol),
        check_dilation(model, rep, d, tol)?,
        check_coextension(model, d, tol),
    ];
    let w_model = TruncatedIsoRep { spec: p.clone(), ops: model.ops[2..].to_vec(), ..model.clone() };
    for i in 0..2 {
        let mut ops = vec![model.ops[i].clone()];
        ops.extend(model.ops[2..].iter().cloned());
        let sub = TruncatedIsoRep { spec: single_spec(mode, &p), ops, ..model.clone() };
        let mut nica = check_nica(&sub, d, tol);
        nica.name = format!("nica-v{}", i + 1);
        checks.push(nica);
        let mut pair = match mode {
            AndoMode::Cartesian => check_doubly_commute(&model.ops[i], &w_model, d, tol),
            AndoMode::Free => check_orthogonal_ranges(&model.ops[i], &w_model, d, tol),
        };
        pair.name = format!("{}-v{}", pair.name, i + 1);
        checks.push(pair);
    }
    Ok(VerificationReport::new(checks, tol))
}
