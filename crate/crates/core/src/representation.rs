//! Finite-dimensional contractive representations: one complex matrix per
//! generator of a [`MonoidSpec`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eye, op_norm, CMat};
use crate::monoid::{Element, MonoidSpec};
use crate::verify::{CheckEntry, VerificationReport};

#[derive(Clone, Debug)]
pub struct Representation {
    pub spec: MonoidSpec,
    pub dim: usize,
    pub generators: Vec<CMat>,
}

impl Representation {
    pub fn new(spec: MonoidSpec, dim: usize, generators: Vec<CMat>) -> Result<Self> {
        if generators.len() != spec.rank() {
            return Err(Error::Structure(format!(
                "{} expects {} generator matrices, got {}",
                spec,
                spec.rank(),
                generators.len()
            )));
        }
        if dim == 0 {
            return Err(Error::Structure("dimension must be positive".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::Structure(format!(
                    "generator {i} has shape {}x{}, expected {dim}x{dim}",
                    g.nrows(),
                    g.ncols()
                )));
            }
        }
        Ok(Self { spec, dim, generators })
    }

    /// The representation sending every generator to zero.
    pub fn zero(spec: MonoidSpec, dim: usize) -> Self {
        let generators = vec![CMat::zeros(dim, dim); spec.rank()];
        Self { spec, dim, generators }
    }

    /// Product of generator matrices along the normal form of `x`.
    pub fn evaluate(&self, x: &Element) -> CMat {
        self.evaluate_word(&self.spec.word(x))
    }

    pub fn evaluate_word(&self, word: &[usize]) -> CMat {
        let mut out = eye(self.dim);
        for &g in word {
            out = out * &self.generators[g];
        }
        out
    }

    /// Relation and contraction check: commutators of every pair the monoid
    /// forces to commute, and `(‖T(g)‖ - 1)_+` per generator.
    pub fn validate(&self, tol: f64) -> VerificationReport {
        let commutator = self
            .spec
            .commuting_pairs()
            .into_iter()
            .map(|(i, j)| {
                let (a, b) = (&self.generators[i], &self.generators[j]);
                op_norm(&(a * b - b * a))
            })
            .fold(0.0, f64::max);
        let excess = self
            .generators
            .iter()
            .map(|g| (op_norm(g) - 1.0).max(0.0))
            .fold(0.0, f64::max);
        VerificationReport::new(
            vec![
                CheckEntry::new("commutation", commutator, 1, tol),
                CheckEntry::new("contraction", excess, 1, tol),
            ],
            tol,
        )
    }

    /// Restricts to the generators with the given global indices as a
    /// representation of `spec`.
    pub fn restrict(&self, spec: MonoidSpec, indices: &[usize]) -> Result<Self> {
        Self::new(spec, self.dim, indices.iter().map(|&i| self.generators[i].clone()).collect())
    }

    pub fn to_json(&self) -> RepresentationJson {
        RepresentationJson {
            monoid: self.spec.clone(),
            dim: self.dim,
            generators: self.generators.iter().map(matrix_to_entries).collect(),
        }
    }

    pub fn from_json(j: RepresentationJson) -> Result<Self> {
        let gens = j
            .generators
            .iter()
            .map(|g| entries_to_matrix(g, j.dim))
            .collect::<Result<Vec<_>>>()?;
        Self::new(j.monoid, j.dim, gens)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }
}

/// On-disk form: `{"monoid": "...", "dim": n, "generators": [[[re,im],...],...]}`
/// with row-major matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepresentationJson {
    pub monoid: MonoidSpec,
    pub dim: usize,
    pub generators: Vec<Vec<[f64; 2]>>,
}

/// Rectangular matrix for model and result files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMat> {
        entries_to_rect(&self.entries, self.rows, self.cols)
    }
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        MatrixJson { rows: m.nrows(), cols: m.ncols(), entries: matrix_to_entries(m) }
    }
}

pub fn matrix_to_entries(m: &CMat) -> Vec<[f64; 2]> {
    (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
        .collect()
}

pub fn entries_to_matrix(e: &[[f64; 2]], dim: usize) -> Result<CMat> {
    entries_to_rect(e, dim, dim)
}

pub fn entries_to_rect(e: &[[f64; 2]], rows: usize, cols: usize) -> Result<CMat> {
    if e.len() != rows * cols {
        return Err(Error::Structure(format!(
            "matrix has {} entries, expected {}",
            e.len(),
            rows * cols
        )));
    }
    Ok(CMat::from_row_iterator(rows, cols, e.iter().map(|[re, im]| Complex64::new(*re, *im))))
}
