//! Stochastic loss environments with exactly known means.
//!
//! Every built-in environment is finitely supported, so the law of a round
//! can be written down as a list of atoms and small prefixes can be
//! enumerated exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaps::GapProfile;
use crate::softmax::sample_unchecked;

/// A loss vector with every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_unit_entries(&entries, "loss")?;
        Ok(Self(entries))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for LossVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LossVector> for Vec<f64> {
    fn from(v: LossVector) -> Self {
        v.0
    }
}

fn check_unit_entries(entries: &[f64], what: &str) -> Result<()> {
    if let Some((j, v)) = entries
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return invalid(format!("{what} entry {j} is {v}, expected a value in [0, 1]"));
    }
    Ok(())
}

fn check_action_count(k: usize) -> Result<()> {
    if k < 2 {
        return invalid(format!("need at least 2 actions, got {k}"));
    }
    Ok(())
}

/// One support point of a finitely supported round law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub vector: Vec<f64>,
    pub probability: f64,
}

/// Tolerance on the total mass of a finite support.
pub const SUPPORT_MASS_TOLERANCE: f64 = 1e-12;

/// A validated finitely supported law on `[0,1]^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSupport {
    k: usize,
    atoms: Vec<Atom>,
}

impl FiniteSupport {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return invalid("finite support needs at least one atom");
        };
        let k = first.vector.len();
        check_action_count(k)?;
        let mut total = 0.0;
        for (i, atom) in atoms.iter().enumerate() {
            if atom.vector.len() != k {
                return invalid(format!(
                    "atom {i} has {} entries, expected {k}",
                    atom.vector.len()
                ));
            }
            check_unit_entries(&atom.vector, "atom")?;
            if atom.probability < 0.0 || !atom.probability.is_finite() {
                return invalid(format!("atom {i} has probability {}", atom.probability));
            }
            total += atom.probability;
        }
        if (total - 1.0).abs() > SUPPORT_MASS_TOLERANCE {
            return invalid(format!("atom probabilities sum to {total}, expected 1"));
        }
        Ok(Self { k, atoms })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.k];
        for atom in &self.atoms {
            for (m, x) in means.iter_mut().zip(&atom.vector) {
                *m += atom.probability * x;
            }
        }
        means
    }

    /// Number of length-`m` outcome sequences.
    pub fn sequence_count(&self, m: u32) -> f64 {
        (self.atoms.len() as f64).powi(m as i32)
    }

    /// Visits every length-`m` outcome sequence with its probability and the
    /// coordinatewise sum of its rows. Refuses when there are more than
    /// `limit` sequences.
    pub fn for_each_prefix_sum<F>(&self, m: u32, limit: f64, mut visit: F) -> Result<()>
    where
        F: FnMut(f64, &[f64]),
    {
        let estimate = self.sequence_count(m);
        if estimate > limit {
            return Err(Error::BudgetExceeded {
                what: "prefix enumeration",
                estimate,
                limit,
            });
        }
        let atoms: Vec<&Atom> = self.atoms.iter().filter(|a| a.probability > 0.0).collect();
        let m = m as usize;
        let mut sums = vec![vec![0.0; self.k]; m + 1];
        let mut probs = vec![1.0; m + 1];
        let mut choice = vec![0usize; m];
        let mut depth = 0;
        loop {
            while depth < m {
                let atom = atoms[choice[depth]];
                let (head, tail) = sums.split_at_mut(depth + 1);
                for ((next, prev), x) in tail[0].iter_mut().zip(&head[depth]).zip(&atom.vector) {
                    *next = prev + x;
                }
                probs[depth + 1] = probs[depth] * atom.probability;
                depth += 1;
            }
            visit(probs[m], &sums[m]);
            // Advance the odometer from the deepest level.
            loop {
                if depth == 0 {
                    return Ok(());
                }
                depth -= 1;
                choice[depth] += 1;
                if choice[depth] < atoms.len() {
                    break;
                }
                choice[depth] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Bernoulli,
    Deterministic,
    FiniteSupport { support: FiniteSupport, probabilities: Vec<f64> },
    Correlated { coupling: f64 },
}

/// An i.i.d. loss-vector generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    law: Law,
    means: Vec<f64>,
}

/// Largest action count for which a product law is expanded into atoms.
const MAX_PRODUCT_COORDS: usize = 20;

impl Environment {
    /// Independent Bernoulli coordinates with the given means.
    pub fn bernoulli(means: Vec<f64>) -> Result<Self> {
        check_action_count(means.len())?;
        check_unit_entries(&means, "mean")?;
        Ok(Self {
            law: Law::Bernoulli,
            means,
        })
    }

    /// With probability `coupling` every coordinate thresholds one shared
    /// uniform draw, `x_j = 1{U < mean_j}`; otherwise the coordinates are
    /// independent Bernoulli. Marginal means are `means` in both branches.
    pub fn correlated(means: Vec<f64>, coupling: f64) -> Result<Self> {
        check_action_count(means.len())?;
        check_unit_entries(&means, "mean")?;
        if !(0.0..=1.0).contains(&coupling) {
            return invalid(format!("coupling must lie in [0, 1], got {coupling}"));
        }
        Ok(Self {
            law: Law::Correlated { coupling },
            means,
        })
    }

    pub fn deterministic(vector: LossVector) -> Result<Self> {
        check_action_count(vector.len())?;
        Ok(Self {
            law: Law::Deterministic,
            means: vector.into_inner(),
        })
    }

    pub fn finite_support(atoms: Vec<Atom>) -> Result<Self> {
        let support = FiniteSupport::new(atoms)?;
        let means = support.means();
        let probabilities = support.atoms().iter().map(|a| a.probability).collect();
        Ok(Self {
            law: Law::FiniteSupport {
                support,
                probabilities,
            },
            means,
        })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// Exact expected loss of every action.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn kind(&self) -> &'static str {
        match self.law {
            Law::Bernoulli => "bernoulli",
            Law::Deterministic => "deterministic",
            Law::FiniteSupport { .. } => "finite_support",
            Law::Correlated { .. } => "correlated",
        }
    }

    pub fn gap_profile(&self) -> Result<GapProfile> {
        GapProfile::from_means(&self.means)
    }

    /// Draws one round into `out`, which is resized to `K`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        match &self.law {
            Law::Deterministic => out.extend_from_slice(&self.means),
            Law::Bernoulli => out.extend(self.means.iter().map(|&m| bernoulli(rng.random(), m))),
            Law::FiniteSupport {
                support,
                probabilities,
            } => {
                let i = sample_unchecked(probabilities, rng.random());
                out.extend_from_slice(&support.atoms()[i].vector);
            }
            Law::Correlated { coupling } => {
                if rng.random::<f64>() < *coupling {
                    let u: f64 = rng.random();
                    out.extend(self.means.iter().map(|&m| bernoulli(u, m)));
                } else {
                    out.extend(self.means.iter().map(|&m| bernoulli(rng.random(), m)));
                }
            }
        }
    }

    pub fn sample_round<R: Rng + ?Sized>(&self, rng: &mut R) -> LossVector {
        let mut out = Vec::with_capacity(self.k());
        self.sample_into(rng, &mut out);
        LossVector(out)
    }

    /// The round law written as a list of atoms.
    pub fn to_finite_support(&self) -> Result<FiniteSupport> {
        let atoms = match &self.law {
            Law::FiniteSupport { support, .. } => return Ok(support.clone()),
            Law::Deterministic => vec![Atom {
                vector: self.means.clone(),
                probability: 1.0,
            }],
            Law::Bernoulli => self.product_atoms(1.0)?,
            Law::Correlated { coupling } => {
                let mut atoms = self.product_atoms(1.0 - coupling)?;
                atoms.extend(self.comonotone_atoms(*coupling));
                atoms.retain(|a| a.probability > 0.0);
                atoms
            }
        };
        FiniteSupport::new(atoms)
    }

    fn product_atoms(&self, scale: f64) -> Result<Vec<Atom>> {
        let random_coords = self.means.iter().filter(|&&m| m > 0.0 && m < 1.0).count();
        if random_coords > MAX_PRODUCT_COORDS {
            return Err(Error::BudgetExceeded {
                what: "product support",
                estimate: 2f64.powi(random_coords as i32),
                limit: 2f64.powi(MAX_PRODUCT_COORDS as i32),
            });
        }
        let mut atoms = vec![Atom {
            vector: Vec::with_capacity(self.k()),
            probability: scale,
        }];
        for &m in &self.means {
            let mut next = Vec::with_capacity(atoms.len() * 2);
            for atom in atoms {
                for (value, p) in [(0.0, 1.0 - m), (1.0, m)] {
                    if p > 0.0 {
                        let mut vector = atom.vector.clone();
                        vector.push(value);
                        next.push(Atom {
                            vector,
                            probability: atom.probability * p,
                        });
                    }
                }
            }
            atoms = next;
        }
        Ok(atoms)
    }

    fn comonotone_atoms(&self, scale: f64) -> Vec<Atom> {
        let mut cuts: Vec<f64> = self.means.clone();
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        cuts.windows(2)
            .map(|w| Atom {
                vector: self.means.iter().map(|&m| bernoulli(w[0], m)).collect(),
                probability: scale * (w[1] - w[0]),
            })
            .collect()
    }
}

fn bernoulli(u: f64, mean: f64) -> f64 {
    if u < mean {
        1.0
    } else {
        0.0
    }
}
