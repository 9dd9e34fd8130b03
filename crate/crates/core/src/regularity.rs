//! Positivity conditions for *-regular dilations.
//!
//! `Z_F = Σ_{U ⊆ F} (−1)^{|U|} T(∨U) T(∨U)*`, where terms with no common
//! upper bound vanish and `U = ∅` contributes the identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eye, min_eigenvalue, op_norm, CMat};
use crate::monoid::{Element, MonoidSpec};
use crate::representation::Representation;

/// Family of subsets `F` to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// All nonempty subsets of the generating set.
    Generators,
    /// All nonempty subsets of `ball(L) \ {e}` with at most `rank` elements.
    Ball(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZEntry {
    pub subset: Vec<String>,
    pub condition: String,
    pub min_eigenvalue: f64,
    pub norm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZReport {
    pub family: Vec<ZEntry>,
    pub passed: bool,
    /// Index into `family` of the entry with the smallest eigenvalue.
    pub worst: Option<usize>,
    pub tol: f64,
}

impl ZReport {
    fn from_entries(family: Vec<ZEntry>, tol: f64) -> Self {
        let passed = family.iter().all(|e| e.pass);
        let worst = family
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.min_eigenvalue.total_cmp(&b.1.min_eigenvalue))
            .map(|(i, _)| i);
        Self { family, passed, worst, tol }
    }

    pub fn worst_entry(&self) -> Option<&ZEntry> {
        self.worst.map(|i| &self.family[i])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.worst_entry().map_or(f64::INFINITY, |e| e.min_eigenvalue)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// One line per entry, then the verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.family {
            out.push_str(&format!(
                "{{{}}} {:<16} min_eig={:+.6e} {}\n",
                e.subset.join(","),
                e.condition,
                e.min_eigenvalue,
                if e.pass { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(if self.passed { "passed" } else { "failed" });
        out
    }
}

fn entry(spec: &MonoidSpec, f: &[Element], condition: &str, z: &CMat, tol: f64) -> ZEntry {
    let min_eigenvalue = min_eigenvalue(z);
    let norm = op_norm(z);
    ZEntry {
        subset: f.iter().map(|x| spec.format_element(x)).collect(),
        condition: condition.into(),
        min_eigenvalue,
        norm,
        pass: min_eigenvalue >= -tol * norm.max(1.0),
    }
}

pub fn z_operator(rep: &Representation, f: &[Element]) -> Result<CMat> {
    let spec = &rep.spec;
    for x in f {
        if !spec.contains(x) {
            return Err(Error::SpecMismatch { spec: spec.to_string(), element: format!("{x:?}") });
        }
        if spec.is_identity(x) {
            return Err(Error::IdentityInFamily);
        }
    }
    let mut z = eye(rep.dim);
    for mask in 1u64..(1u64 << f.len()) {
        let u: Vec<Element> =
            (0..f.len()).filter(|i| mask >> i & 1 == 1).map(|i| f[i].clone()).collect();
        if let Some(r) = spec.lcm_of_set(&u)? {
            let t = rep.evaluate(&r);
            let term = &t * t.adjoint();
            if mask.count_ones() % 2 == 1 {
                z -= term;
            } else {
                z += term;
            }
        }
    }
    Ok(z)
}

/// Nonempty subsets of `items` with at most `max_size` elements, ordered by
/// size then by index.
fn subsets<T: Clone>(items: &[T], max_size: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    fn rec<T: Clone>(items: &[T], start: usize, size: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i].clone());
            rec(items, i + 1, size, cur, out);
            cur.pop();
        }
    }
    for size in 1..=max_size.min(items.len()) {
        rec(items, 0, size, &mut Vec::new(), &mut out);
    }
    out
}

fn family(spec: &MonoidSpec, mode: Family) -> Vec<Vec<Element>> {
    match mode {
        Family::Generators => subsets(&spec.generators(), spec.rank()),
        Family::Ball(l) => {
            let pts: Vec<Element> =
                spec.ball(l).into_iter().filter(|x| !spec.is_identity(x)).collect();
            subsets(&pts, spec.rank())
        }
    }
}

pub fn is_star_regular(rep: &Representation, mode: Family, tol: f64) -> Result<ZReport> {
    let entries = family(&rep.spec, mode)
        .iter()
        .map(|f| Ok(entry(&rep.spec, f, "Z_F", &z_operator(rep, f)?, tol)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ZReport::from_entries(entries, tol))
}

fn require_commuting(s: &CMat, ts: &[CMat], tol: f64) -> Result<()> {
    for (j, t) in ts.iter().enumerate() {
        let c = op_norm(&(s * t - t * s));
        if c > tol * op_norm(s).max(op_norm(t)).max(1.0) {
            return Err(Error::Structure(format!(
                "S does not commute with generator {j}: commutator norm {c:e}"
            )));
        }
    }
    Ok(())
}

fn require_square(s: &CMat, dim: usize) -> Result<()> {
    if s.nrows() != dim || s.ncols() != dim {
        return Err(Error::Structure(format!(
            "S has shape {}x{}, expected {dim}x{dim}",
            s.nrows(),
            s.ncols()
        )));
    }
    Ok(())
}

/// `Z_F ⪰ 0` and `Z_F − S Z_F S* ⪰ 0` for every generator subset `F`: the
/// condition for `S × T` on `ℕ × P` to have a *-regular dilation.
pub fn check_mixed_cartesian(s: &CMat, rep_t: &Representation, tol: f64) -> Result<ZReport> {
    require_square(s, rep_t.dim)?;
    require_commuting(s, &rep_t.generators, tol)?;
    let spec = &rep_t.spec;
    let mut entries = Vec::new();
    for f in family(spec, Family::Generators) {
        let z = z_operator(rep_t, &f)?;
        entries.push(entry(spec, &f, "Z_F", &z, tol));
        let shifted = &z - s * &z * s.adjoint();
        entries.push(entry(spec, &f, "Z_F-S*Z_F*S^*", &shifted, tol));
    }
    Ok(ZReport::from_entries(entries, tol))
}

/// `Z_F ⪰ 0` and `Z_F − SS* ⪰ 0` for every generator subset `F`: the
/// condition for `S * T` on `ℕ * P`.
pub fn check_mixed_free(s: &CMat, rep_t: &Representation, tol: f64) -> Result<ZReport> {
    require_square(s, rep_t.dim)?;
    let spec = &rep_t.spec;
    let ss = s * s.adjoint();
    let mut entries = Vec::new();
    for f in family(spec, Family::Generators) {
        let z = z_operator(rep_t, &f)?;
        entries.push(entry(spec, &f, "Z_F", &z, tol));
        entries.push(entry(spec, &f, "Z_F-S*S^*", &(&z - &ss), tol));
    }
    Ok(ZReport::from_entries(entries, tol))
}

/// Row contraction `Σ T_jT_j* ⪯ I` together with
/// `I − SS* − Σ T_jT_j* + Σ S T_jT_j* S* ⪰ 0` for `S` commuting with each `T_j`.
pub fn fk_row_condition(s: &CMat, ts: &[CMat], tol: f64) -> Result<ZReport> {
    let n = s.nrows();
    for t in ts {
        require_square(t, n)?;
    }
    require_square(s, n)?;
    require_commuting(s, ts, tol)?;
    let spec = MonoidSpec::Free(ts.len().max(1));
    let all = spec.generators();
    let row: CMat = ts.iter().fold(eye(n), |acc, t| acc - t * t.adjoint());
    let ssum: CMat = ts
        .iter()
        .fold(CMat::zeros(n, n), |acc, t| acc + s * t * t.adjoint() * s.adjoint());
    let fk = &row - s * s.adjoint() + ssum;
    let entries = vec![
        entry(&spec, &all, "row-contraction", &row, tol),
        entry(&spec, &all, "fk-row", &fk, tol),
    ];
    Ok(ZReport::from_entries(entries, tol))
}
