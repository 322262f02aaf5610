//! Coherent upper expectations on local gambles.
//!
//! A local gamble is a bounded real reward vector over the state
//! alphabet. A [`LocalModel`] is a coherent upper expectation on local
//! gambles: the maximally imprecise vacuous model, a precise linear
//! expectation, a credal set given by its extreme points, or a credal
//! set induced by probability intervals.
//!
//! [`check_coherence`] is a sampling harness that probes a functional
//! for the coherence axioms (domination by the supremum, subadditivity,
//! non-negative homogeneity, monotonicity, bounds, constant additivity)
//! plus the Lipschitz bound with respect to the supremum distance, and
//! reports witnesses for any failures instead of panicking.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::fmt;

/// Tolerance for mass-vector normalization. Inputs outside it are
/// rejected, never silently renormalized.
pub const MASS_TOL: f64 = 1e-12;

/// A bounded real reward vector indexed by the state alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGamble {
    values: Vec<f64>,
}

impl LocalGamble {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::GambleDimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteGambleEntry { index: i });
            }
        }
        Ok(Self { values })
    }

    pub fn constant(dimension: usize, value: f64) -> Self {
        Self {
            values: vec![value; dimension],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dimension(), other.dimension());
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Supremum distance to another gamble of the same dimension.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn validate_mass(mass: &[f64]) -> Result<()> {
    for (i, &p) in mass.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::NegativeMass { index: i, value: p });
        }
    }
    let sum: f64 = mass.iter().sum();
    if (sum - 1.0).abs() > MASS_TOL {
        return Err(Error::MassNotNormalized { sum });
    }
    Ok(())
}

/// A coherent upper expectation on local gambles.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalModel {
    /// `Ē(h) = max h`: the maximally imprecise model.
    Vacuous,
    /// Linear expectation under a single probability mass function.
    Precise(Vec<f64>),
    /// Max of linear expectations over a finite set of extreme points.
    CredalVertices(Vec<Vec<f64>>),
    /// Credal set `{p : lower ≤ p ≤ upper, Σp = 1}` described by
    /// per-state probability intervals.
    ProbabilityIntervals { lower: Vec<f64>, upper: Vec<f64> },
}

impl LocalModel {
    pub fn vacuous() -> Self {
        LocalModel::Vacuous
    }

    pub fn precise(mass: Vec<f64>) -> Result<Self> {
        validate_mass(&mass)?;
        Ok(LocalModel::Precise(mass))
    }

    pub fn credal_vertices(masses: Vec<Vec<f64>>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::EmptyCredalSet);
        }
        let dim = masses[0].len();
        for m in &masses {
            if m.len() != dim {
                return Err(Error::GambleDimensionMismatch {
                    expected: dim,
                    got: m.len(),
                });
            }
            validate_mass(m)?;
        }
        Ok(LocalModel::CredalVertices(masses))
    }

    pub fn probability_intervals(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::GambleDimensionMismatch {
                expected: lower.len().max(1),
                got: upper.len(),
            });
        }
        for i in 0..lower.len() {
            let (l, u) = (lower[i], upper[i]);
            if !(l.is_finite() && u.is_finite()) || l < 0.0 || u > 1.0 || l > u {
                return Err(Error::BadProbabilityInterval {
                    index: i,
                    lower: l,
                    upper: u,
                });
            }
        }
        let lower_sum: f64 = lower.iter().sum();
        let upper_sum: f64 = upper.iter().sum();
        if lower_sum > 1.0 + MASS_TOL || upper_sum < 1.0 - MASS_TOL {
            return Err(Error::EmptyIntervalCredalSet {
                lower_sum,
                upper_sum,
            });
        }
        Ok(LocalModel::ProbabilityIntervals { lower, upper })
    }

    /// Dimension constraint imposed by the model, `None` when any fits
    /// (vacuous).
    pub fn dimension(&self) -> Option<usize> {
        match self {
            LocalModel::Vacuous => None,
            LocalModel::Precise(m) => Some(m.len()),
            LocalModel::CredalVertices(ms) => Some(ms[0].len()),
            LocalModel::ProbabilityIntervals { lower, .. } => Some(lower.len()),
        }
    }

    fn check_gamble(&self, h: &LocalGamble) -> Result<()> {
        if let Some(d) = self.dimension() {
            if d != h.dimension() {
                return Err(Error::GambleDimensionMismatch {
                    expected: d,
                    got: h.dimension(),
                });
            }
        }
        Ok(())
    }

    /// Upper expectation of a local gamble.
    pub fn upper(&self, h: &LocalGamble) -> Result<f64> {
        self.check_gamble(h)?;
        Ok(match self {
            LocalModel::Vacuous => h.sup(),
            LocalModel::Precise(mass) => dot(mass, h.values()),
            LocalModel::CredalVertices(masses) => masses
                .iter()
                .map(|m| dot(m, h.values()))
                .fold(f64::NEG_INFINITY, f64::max),
            LocalModel::ProbabilityIntervals { lower, upper } => {
                greedy_interval_upper(lower, upper, h.values())
            }
        })
    }

    /// Conjugate lower expectation: `−Ē(−h)`.
    pub fn lower(&self, h: &LocalGamble) -> Result<f64> {
        Ok(-self.upper(&h.negated())?)
    }
}

/// Fixed left-to-right summation order: local expectations must be
/// bit-identical across runs and threads.
fn dot(mass: &[f64], values: &[f64]) -> f64 {
    mass.iter().zip(values).map(|(p, v)| p * v).sum()
}

/// Maximizes `Σ p(x) h(x)` over `{p : lower ≤ p ≤ upper, Σp = 1}` by
/// greedy allocation: states in descending reward order receive their
/// upper bound, truncated so the remaining mass can still meet the
/// lower bounds of the states not yet served.
fn greedy_interval_upper(lower: &[f64], upper: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable by index on ties: deterministic allocation.
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));

    let mut remaining_lower: f64 = lower.iter().sum();
    let mut mass_left = 1.0;
    let mut total = 0.0;
    for &x in &order {
        remaining_lower -= lower[x];
        let p = upper[x].min(mass_left - remaining_lower).max(lower[x]);
        total += p * values[x];
        mass_left -= p;
    }
    debug_assert!(mass_left.abs() < 1e-9, "greedy allocation left mass {mass_left}");
    total
}

/// The coherence checks probed by [`check_coherence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceCheck {
    /// `Ē(f) ≤ sup f`.
    DominatedBySup,
    /// `Ē(f+g) ≤ Ē(f) + Ē(g)`.
    Subadditive,
    /// `Ē(λf) = λĒ(f)` for `λ ≥ 0`.
    NonNegativelyHomogeneous,
    /// `f ≤ g ⟹ Ē(f) ≤ Ē(g)`.
    Monotone,
    /// `inf f ≤ E(f) ≤ Ē(f) ≤ sup f`.
    Bounds,
    /// `Ē(f + c) = Ē(f) + c`.
    ConstantAdditive,
    /// `|Ē(f) − Ē(g)| ≤ sup|f − g|`; entails continuity under uniform
    /// convergence.
    Lipschitz,
}

impl fmt::Display for CoherenceCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CoherenceCheck::DominatedBySup => "dominated-by-sup",
            CoherenceCheck::Subadditive => "subadditive",
            CoherenceCheck::NonNegativelyHomogeneous => "non-negatively-homogeneous",
            CoherenceCheck::Monotone => "monotone",
            CoherenceCheck::Bounds => "bounds",
            CoherenceCheck::ConstantAdditive => "constant-additive",
            CoherenceCheck::Lipschitz => "lipschitz",
        };
        f.write_str(name)
    }
}

pub const ALL_COHERENCE_CHECKS: [CoherenceCheck; 7] = [
    CoherenceCheck::DominatedBySup,
    CoherenceCheck::Subadditive,
    CoherenceCheck::NonNegativelyHomogeneous,
    CoherenceCheck::Monotone,
    CoherenceCheck::Bounds,
    CoherenceCheck::ConstantAdditive,
    CoherenceCheck::Lipschitz,
];

/// A concrete violation: the sampled inputs and the two sides of the
/// inequality that failed.
#[derive(Debug, Clone)]
pub struct CoherenceWitness {
    pub gamble: LocalGamble,
    pub other: Option<LocalGamble>,
    pub scalar: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Per-check outcome over all trials.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub check: CoherenceCheck,
    pub failures: usize,
    pub witness: Option<CoherenceWitness>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Report of a coherence sampling run.
#[derive(Debug, Clone)]
pub struct CoherenceReport {
    pub trials: usize,
    pub tol: f64,
    pub outcomes: Vec<CheckOutcome>,
}

impl CoherenceReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(CheckOutcome::passed)
    }

    pub fn outcome(&self, check: CoherenceCheck) -> &CheckOutcome {
        self.outcomes
            .iter()
            .find(|o| o.check == check)
            .expect("all checks present")
    }
}

/// Probes a [`LocalModel`] with random gambles. See
/// [`check_coherence_of`] for checking an arbitrary functional.
pub fn check_coherence(
    model: &LocalModel,
    dimension: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> CoherenceReport {
    check_coherence_of(|h| model.upper(h).expect("dimension fixed"), dimension, trials, seed, tol)
}

/// Probes an arbitrary functional on local gambles of the given
/// dimension. Failures are reported with witnesses, never thrown.
pub fn check_coherence_of<F>(
    upper: F,
    dimension: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> CoherenceReport
where
    F: Fn(&LocalGamble) -> f64,
{
    assert!(trials >= 1, "at least one trial");
    let lower = |h: &LocalGamble| -upper(&h.negated());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut outcomes: Vec<CheckOutcome> = ALL_COHERENCE_CHECKS
        .iter()
        .map(|&check| CheckOutcome {
            check,
            failures: 0,
            witness: None,
        })
        .collect();

    let record = |outcomes: &mut Vec<CheckOutcome>,
                      check: CoherenceCheck,
                      lhs: f64,
                      rhs: f64,
                      f: &LocalGamble,
                      g: Option<&LocalGamble>,
                      scalar: Option<f64>| {
        let o = outcomes
            .iter_mut()
            .find(|o| o.check == check)
            .expect("check present");
        o.failures += 1;
        if o.witness.is_none() {
            o.witness = Some(CoherenceWitness {
                gamble: f.clone(),
                other: g.cloned(),
                scalar,
                lhs,
                rhs,
            });
        }
    };

    for _ in 0..trials {
        let f = random_gamble(&mut rng, dimension);
        let g = random_gamble(&mut rng, dimension);
        let scale = f.sup().abs().max(g.sup().abs()).max(1.0);
        let slack = tol * scale;

        let ef = upper(&f);
        let eg = upper(&g);

        // Dominated by sup.
        if ef > f.sup() + slack {
            record(&mut outcomes, CoherenceCheck::DominatedBySup, ef, f.sup(), &f, None, None);
        }
        // Subadditivity.
        let sum = f.add(&g);
        let esum = upper(&sum);
        if esum > ef + eg + slack {
            record(&mut outcomes, CoherenceCheck::Subadditive, esum, ef + eg, &f, Some(&g), None);
        }
        // Non-negative homogeneity.
        let lambda: f64 = rng.gen_range(0.0..4.0);
        let scaled = f.map(|v| lambda * v);
        let escaled = upper(&scaled);
        if (escaled - lambda * ef).abs() > slack * lambda.max(1.0) {
            record(
                &mut outcomes,
                CoherenceCheck::NonNegativelyHomogeneous,
                escaled,
                lambda * ef,
                &f,
                None,
                Some(lambda),
            );
        }
        // Monotonicity: dominate f with f + |noise|.
        let bump = random_gamble(&mut rng, dimension).map(f64::abs);
        let dominating = f.add(&bump);
        let edom = upper(&dominating);
        if ef > edom + slack {
            record(&mut outcomes, CoherenceCheck::Monotone, ef, edom, &f, Some(&dominating), None);
        }
        // Bounds: inf f ≤ E(f) ≤ Ē(f) ≤ sup f.
        let lf = lower(&f);
        if lf < f.inf() - slack || ef < lf - slack || ef > f.sup() + slack {
            record(&mut outcomes, CoherenceCheck::Bounds, lf, ef, &f, None, None);
        }
        // Constant additivity.
        let c: f64 = rng.gen_range(-5.0..5.0);
        let shifted = f.map(|v| v + c);
        let eshift = upper(&shifted);
        if (eshift - (ef + c)).abs() > slack {
            record(&mut outcomes, CoherenceCheck::ConstantAdditive, eshift, ef + c, &f, None, Some(c));
        }
        // Lipschitz with respect to the sup distance.
        if (ef - eg).abs() > f.sup_distance(&g) + slack {
            record(
                &mut outcomes,
                CoherenceCheck::Lipschitz,
                (ef - eg).abs(),
                f.sup_distance(&g),
                &f,
                Some(&g),
                None,
            );
        }
    }

    CoherenceReport {
        trials,
        tol,
        outcomes,
    }
}

fn random_gamble(rng: &mut impl Rng, dimension: usize) -> LocalGamble {
    LocalGamble::new((0..dimension).map(|_| rng.gen_range(-10.0..10.0)).collect())
        .expect("finite by construction")
}
