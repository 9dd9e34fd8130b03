//! Seeded random contractions and commuting families.
//!
//! Output depends only on the seed and the call sequence; the stream is
//! ChaCha8, so results are identical across platforms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eye, op_norm, CMat};
use crate::monoid::MonoidSpec;
use crate::representation::Representation;

/// How the generator matrices of a sampled representation are related.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Polynomials `c₀ + c₁A + c₂A²` in one random matrix `A`.
    Polynomial,
    /// `Q D_i Q*` for one random unitary `Q` and random diagonals.
    Diagonal,
    /// Unrelated Gaussian matrices; only valid when no generators commute.
    Independent,
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        self.rng.random_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn complex(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal())
    }

    /// `n × n` matrix with i.i.d. standard complex Gaussian entries.
    pub fn gaussian(&mut self, n: usize) -> CMat {
        CMat::from_fn(n, n, |_, _| self.complex())
    }

    /// Gaussian matrix rescaled to operator norm exactly `norm`.
    pub fn contraction(&mut self, n: usize, norm: f64) -> CMat {
        rescale(self.gaussian(n), norm)
    }

    /// Haar-ish unitary from the QR factor of a Gaussian matrix.
    pub fn unitary(&mut self, n: usize) -> CMat {
        let (mut q, r) = self.gaussian(n).qr().unpack();
        // fix column phases so the distribution does not depend on the QR convention
        for j in 0..n {
            let d = r[(j, j)];
            if d.norm() > 0.0 {
                let phase = d / d.norm();
                q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
            }
        }
        q
    }

    /// `count` commuting matrices, each rescaled to a norm drawn from `norms`.
    pub fn commuting(&mut self, kind: FamilyKind, n: usize, count: usize, norms: (f64, f64)) -> Vec<CMat> {
        match kind {
            FamilyKind::Polynomial => {
                let a = self.contraction(n, 1.0);
                let a2 = &a * &a;
                (0..count)
                    .map(|_| {
                        let m = eye(n) * self.complex() + &a * self.complex() + &a2 * self.complex();
                        let norm = self.uniform(norms.0, norms.1);
                        rescale(m, norm)
                    })
                    .collect()
            }
            FamilyKind::Diagonal => {
                let q = self.unitary(n);
                (0..count)
                    .map(|_| {
                        let norm = self.uniform(norms.0, norms.1);
                        let diag: Vec<Complex64> = (0..n).map(|_| self.complex()).collect();
                        let big = diag.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                            n,
                            diag.into_iter().map(|z| z * (norm / big)),
                        ));
                        &q * d * q.adjoint()
                    })
                    .collect()
            }
            FamilyKind::Independent => (0..count)
                .map(|_| {
                    let norm = self.uniform(norms.0, norms.1);
                    self.contraction(n, norm)
                })
                .collect(),
        }
    }

    /// Random representation of `spec` on `ℂ^dim`. Specs with commuting
    /// generator pairs need a commuting `kind`.
    pub fn representation(
        &mut self,
        spec: &MonoidSpec,
        dim: usize,
        kind: FamilyKind,
        norms: (f64, f64),
    ) -> Result<Representation> {
        if kind == FamilyKind::Independent && !spec.commuting_pairs().is_empty() {
            return Err(Error::Precondition(format!("{spec} has commuting generators; use a commuting family")));
        }
        let gens = self.commuting(kind, dim, spec.rank(), norms);
        Representation::new(spec.clone(), dim, gens)
    }
}

fn rescale(m: CMat, norm: f64) -> CMat {
    let current = op_norm(&m);
    if current == 0.0 {
        return m;
    }
    m * Complex64::new(norm / current, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = Sampler::new(42).contraction(3, 0.7);
        let b = Sampler::new(42).contraction(3, 0.7);
        assert_eq!(a, b);
        assert!((op_norm(&a) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn families_commute() {
        let mut s = Sampler::new(7);
        for kind in [FamilyKind::Polynomial, FamilyKind::Diagonal] {
            let f = s.commuting(kind, 3, 3, (0.2, 0.9));
            for x in &f {
                assert!(op_norm(x) <= 0.9 + 1e-12);
                for y in &f {
                    assert!(op_norm(&(x * y - y * x)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let q = Sampler::new(1).unitary(4);
        assert!(op_norm(&(q.adjoint() * &q - eye(4))) < 1e-12);
    }

    #[test]
    fn independent_rejected_for_commuting_specs() {
        let mut s = Sampler::new(3);
        assert!(s.representation(&MonoidSpec::FreeAbelian(2), 2, FamilyKind::Independent, (0.1, 0.5)).is_err());
        let r = s.representation(&MonoidSpec::Free(2), 2, FamilyKind::Independent, (0.1, 0.5)).unwrap();
        assert!(r.validate(1e-10).overall);
    }
}
