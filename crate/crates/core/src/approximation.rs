//! Convergence drivers for variables that are not n-measurable.
//!
//! A [`VariableFamily`] represents an extended-real path variable
//! through its n-measurable approximants. The drivers here evaluate the
//! approximants (each one exactly, via the recursion engines) and watch
//! the iterate trail:
//!
//! * [`upward_limit`] handles non-decreasing, uniformly bounded below
//!   families. The limit of the iterates is the upper expectation of
//!   the limit variable whenever the latter is finite.
//! * [`fatou_bound`] takes a running tail infimum of the iterates of an
//!   arbitrary uniformly bounded-below sequence, an upper bound for the
//!   upper expectation of its pointwise lim inf.
//! * [`lower_cut_limit`] and [`two_sided_cut_limit`] clamp the variable
//!   from below (or both sides) along geometric cut schedules and drive
//!   the cuts outward.
//!
//! No driver can prove that the limit's upper expectation is finite;
//! divergence is detected heuristically (a ceiling plus non-vanishing
//! deltas) and flagged as a verdict, and every report carries its full
//! iterate trail so callers can judge.

use crate::error::{Error, Result};
use crate::global_expectation::{upper_expectation, NMeasurableGamble};
use crate::processes::{certify_supermartingale, RealProcess, SupermartingaleCertificate};
use crate::tree::{ImpreciseTree, Situation, StateSpace};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;

/// Declared monotonicity of a variable family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
    None,
}

type Generator = dyn Fn(usize) -> Result<NMeasurableGamble> + Send + Sync;

/// A sequence of n-measurable gambles `{f_n}` representing an
/// extended-real variable by approximation.
#[derive(Clone)]
pub struct VariableFamily {
    generator: Arc<Generator>,
    monotone: Monotonicity,
    uniform_lower_bound: Option<f64>,
}

impl VariableFamily {
    pub fn new(
        generator: impl Fn(usize) -> Result<NMeasurableGamble> + Send + Sync + 'static,
        monotone: Monotonicity,
        uniform_lower_bound: Option<f64>,
    ) -> Self {
        Self {
            generator: Arc::new(generator),
            monotone,
            uniform_lower_bound,
        }
    }

    /// The constant family of a single gamble. A constant family is
    /// trivially bounded below by its own table; computing that bound
    /// needs a dense pass, so it is left to callers via
    /// [`VariableFamily::with_lower_bound`].
    pub fn constant(gamble: NMeasurableGamble) -> Self {
        Self::new(move |_| Ok(gamble.clone()), Monotonicity::NonDecreasing, None)
    }

    pub fn with_lower_bound(mut self, bound: f64) -> Self {
        self.uniform_lower_bound = Some(bound);
        self
    }

    pub fn monotone(&self) -> Monotonicity {
        self.monotone
    }

    pub fn uniform_lower_bound(&self) -> Option<f64> {
        self.uniform_lower_bound
    }

    pub fn gamble(&self, n: usize) -> Result<NMeasurableGamble> {
        (self.generator)(n)
    }

    /// `scale·f_n + offset` for every member; flips the declared
    /// monotonicity when `scale < 0`.
    pub fn affine(&self, scale: f64, offset: f64) -> Self {
        let generator = Arc::clone(&self.generator);
        let monotone = match self.monotone {
            m if scale >= 0.0 => m,
            Monotonicity::NonDecreasing => Monotonicity::NonIncreasing,
            Monotonicity::NonIncreasing => Monotonicity::NonDecreasing,
            Monotonicity::None => Monotonicity::None,
        };
        let bound = if scale > 0.0 {
            self.uniform_lower_bound.map(|m| scale * m + offset)
        } else if scale == 0.0 {
            Some(offset)
        } else {
            None
        };
        Self {
            generator: Arc::new(move |n| Ok(generator(n)?.affine(scale, offset))),
            monotone,
            uniform_lower_bound: bound,
        }
    }

    pub fn negated(&self) -> Self {
        self.affine(-1.0, 0.0)
    }

    /// Clamps every member; clamping is monotone, so the declared
    /// direction is preserved and a lower clamp becomes a uniform
    /// lower bound.
    pub fn clamp(&self, lo: Option<f64>, hi: Option<f64>) -> Self {
        let generator = Arc::clone(&self.generator);
        let bound = match (lo, self.uniform_lower_bound) {
            (Some(a), Some(m)) => Some(a.max(m)),
            (Some(a), None) => Some(a),
            (None, m) => m,
        };
        Self {
            generator: Arc::new(move |n| generator(n)?.clamp(lo, hi)),
            monotone: self.monotone,
            uniform_lower_bound: bound,
        }
    }
}

impl std::fmt::Debug for VariableFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VariableFamily")
            .field("monotone", &self.monotone)
            .field("uniform_lower_bound", &self.uniform_lower_bound)
            .finish()
    }
}

/// A variable clamped from both sides.
#[derive(Debug, Clone)]
pub struct CutVariable {
    base: VariableFamily,
    lower: f64,
    upper: f64,
}

impl CutVariable {
    pub fn new(base: VariableFamily, lower: f64, upper: f64) -> Result<Self> {
        if upper < lower {
            return Err(Error::BadCutPair { a: lower, b: upper });
        }
        Ok(Self { base, lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// The approximants of the clamped variable.
    pub fn approximants(&self) -> VariableFamily {
        self.base.clamp(Some(self.lower), Some(self.upper))
    }
}

/// The hitting-time approximants of a target state: member n is the
/// first 1-based time the target appears, capped at n.
///
/// Non-decreasing; the declared uniform lower bound is 0 (conservative:
/// member 0 is the constant 0).
pub fn hitting_time_family(space: &StateSpace, target: usize) -> Result<VariableFamily> {
    if target >= space.size() {
        return Err(Error::StateOutOfRange {
            index: target,
            alphabet: space.size(),
        });
    }
    let alphabet = space.size();
    Ok(VariableFamily::new(
        move |n| NMeasurableGamble::hitting_time(alphabet, target, n),
        Monotonicity::NonDecreasing,
        Some(0.0),
    ))
}

/// Driver parameters. `tol` and `budget` bound the stopping rule;
/// `window` is the number of consecutive small deltas demanded before
/// declaring convergence; `ceiling` triggers the divergence verdict;
/// `seed` feeds the pointwise monotonicity spot checks.
#[derive(Debug, Clone, Copy)]
pub struct DriverConfig {
    pub tol: f64,
    pub budget: usize,
    pub window: usize,
    pub ceiling: f64,
    pub seed: u64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            budget: 200,
            window: 3,
            ceiling: 1e12,
            seed: 0,
        }
    }
}

impl DriverConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Nested loops run their inner evaluations at a tightened
    /// tolerance so that inner truncation error stays below the outer
    /// stopping threshold.
    fn tightened(&self) -> Self {
        Self {
            tol: self.tol * 0.1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    /// Iterates crossed the ceiling (or exhausted the budget) with
    /// non-vanishing deltas: the upper expectation appears to be +∞,
    /// which the convergence guarantees exclude.
    Diverging,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy)]
pub struct Iterate {
    pub n: usize,
    pub value: f64,
    /// `value − previous value`; 0 for the first iterate.
    pub delta: f64,
}

/// Outcome of a driver run: the full iterate trail, the verdict, and
/// the final value when converged.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub iterates: Vec<Iterate>,
    pub verdict: Verdict,
    pub final_value: Option<f64>,
}

impl ConvergenceReport {
    /// CSV with fixed 17-significant-digit rendering, stable across
    /// runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,delta\n");
        for it in &self.iterates {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", it.n, it.value, it.delta));
        }
        out
    }
}

/// Checks `f_prev ≤ f_next` (or ≥, per declaration) and the declared
/// uniform lower bound on random sampled prefixes; a violation means
/// the family was misdeclared.
fn spot_check_family(
    prev: &NMeasurableGamble,
    next: &NMeasurableGamble,
    family: &VariableFamily,
    n: usize,
    rng: &mut ChaCha12Rng,
) -> Result<()> {
    let declared = family.monotone();
    let depth = prev.horizon().max(next.horizon());
    let alphabet = prev.alphabet();
    for _ in 0..8 {
        let states: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..alphabet)).collect();
        let prefix = Situation::from_states(&states, alphabet)?;
        let before = prev.value_at(&prefix)?;
        let after = next.value_at(&prefix)?;
        if let Some(bound) = family.uniform_lower_bound() {
            if after < bound - 1e-9 {
                return Err(Error::LowerBoundViolation {
                    n,
                    witness: prefix,
                    value: after,
                    bound,
                });
            }
        }
        let bad = match declared {
            Monotonicity::NonDecreasing => before > after + 1e-9,
            Monotonicity::NonIncreasing => before < after - 1e-9,
            Monotonicity::None => false,
        };
        if bad {
            return Err(Error::MonotonicityViolation {
                declared,
                n,
                witness: prefix,
                before,
                after,
            });
        }
    }
    Ok(())
}

/// Shared iterate loop: evaluates `Ē(f_n)` for n = 1.. and applies the
/// stopping rule.
fn family_limit(
    tree: &ImpreciseTree,
    family: &VariableFamily,
    cfg: &DriverConfig,
) -> Result<ConvergenceReport> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut iterates: Vec<Iterate> = Vec::new();
    let mut previous_gamble: Option<NMeasurableGamble> = None;

    for n in 1..=cfg.budget.max(1) {
        let f_n = family.gamble(n)?;
        if let Some(prev) = &previous_gamble {
            spot_check_family(prev, &f_n, family, n, &mut rng)?;
        }
        let value = upper_expectation(tree, &f_n)?;
        let delta = iterates.last().map(|it| value - it.value).unwrap_or(0.0);

        if let Some(last) = iterates.last() {
            let slack = 1e-9 * (1.0 + value.abs());
            let out_of_order = match family.monotone() {
                Monotonicity::NonDecreasing => value < last.value - slack,
                Monotonicity::NonIncreasing => value > last.value + slack,
                Monotonicity::None => false,
            };
            if out_of_order {
                return Err(Error::IterateOrderViolation {
                    n,
                    before: last.value,
                    after: value,
                });
            }
        }

        iterates.push(Iterate { n, value, delta });
        previous_gamble = Some(f_n);
        log::debug!("iterate n={n} value={value} delta={delta}");

        if value.abs() > cfg.ceiling && delta.abs() >= cfg.tol {
            return Ok(ConvergenceReport {
                iterates,
                verdict: Verdict::Diverging,
                final_value: None,
            });
        }

        // The first iterate has no delta; stability needs `window`
        // genuine deltas.
        if iterates.len() > cfg.window
            && iterates[iterates.len() - cfg.window..]
                .iter()
                .all(|it| it.delta.abs() < cfg.tol)
        {
            return Ok(ConvergenceReport {
                final_value: Some(value),
                iterates,
                verdict: Verdict::Converged,
            });
        }
    }

    // Budget exhausted. Deltas that are neither small nor shrinking
    // (constant or growing steps, as under the vacuous model) are
    // divergence; shrinking-but-large deltas are a slow sequence whose
    // limit this budget cannot judge.
    let verdict = if iterates.len() > cfg.window {
        let tail = &iterates[iterates.len() - cfg.window..];
        let all_large = tail.iter().all(|it| it.delta.abs() >= cfg.tol);
        let not_shrinking = tail.last().map(|l| l.delta.abs()).unwrap_or(0.0)
            >= 0.999 * tail.first().map(|f| f.delta.abs()).unwrap_or(0.0);
        if all_large && not_shrinking {
            Verdict::Diverging
        } else {
            Verdict::BudgetExhausted
        }
    } else {
        Verdict::BudgetExhausted
    };
    Ok(ConvergenceReport {
        iterates,
        verdict,
        final_value: None,
    })
}

/// Upward-convergence driver: evaluates the approximants of a
/// non-decreasing, uniformly bounded-below family until the iterates
/// stabilize.
pub fn upward_limit(
    tree: &ImpreciseTree,
    family: &VariableFamily,
    cfg: &DriverConfig,
) -> Result<ConvergenceReport> {
    if family.monotone() != Monotonicity::NonDecreasing {
        return Err(Error::NotAnUpwardFamily);
    }
    if family.uniform_lower_bound().is_none() {
        return Err(Error::MissingLowerBound);
    }
    family_limit(tree, family, cfg)
}

/// Result of a Fatou run: the iterate trail and the running tail
/// infimum, an upper bound for the upper expectation of the pointwise
/// lim inf of the sequence.
#[derive(Debug, Clone)]
pub struct FatouReport {
    pub iterates: Vec<Iterate>,
    pub tail_window: usize,
    pub estimate: f64,
}

impl FatouReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,delta\n");
        for it in &self.iterates {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", it.n, it.value, it.delta));
        }
        out
    }
}

/// Desk-scale estimate of `liminf_n Ē(f_n)`: evaluates the sequence up
/// to the budget and takes the infimum over the trailing half.
pub fn fatou_bound(
    tree: &ImpreciseTree,
    family: &VariableFamily,
    cfg: &DriverConfig,
) -> Result<FatouReport> {
    if family.uniform_lower_bound().is_none() {
        return Err(Error::MissingLowerBound);
    }
    let budget = cfg.budget.max(1);
    let mut iterates = Vec::with_capacity(budget);
    for n in 1..=budget {
        let value = upper_expectation(tree, &family.gamble(n)?)?;
        let delta = iterates
            .last()
            .map(|it: &Iterate| value - it.value)
            .unwrap_or(0.0);
        iterates.push(Iterate { n, value, delta });
    }
    let tail_window = (budget / 2).max(cfg.window).min(budget);
    let estimate = iterates[iterates.len() - tail_window..]
        .iter()
        .map(|it| it.value)
        .fold(f64::INFINITY, f64::min);
    Ok(FatouReport {
        iterates,
        tail_window,
        estimate,
    })
}

/// Geometric lower-cut schedule `−1, −2, −4, …`.
pub fn default_lower_schedule(len: usize) -> Vec<f64> {
    (0..len.min(60)).map(|k| -(2f64.powi(k as i32))).collect()
}

/// Geometric upper-cut schedule `1, 2, 4, …`.
pub fn default_upper_schedule(len: usize) -> Vec<f64> {
    (0..len.min(60)).map(|k| 2f64.powi(k as i32)).collect()
}

/// Evaluates `Ē(f_A)` for one lower cut through the clamped family.
fn evaluate_cut(
    tree: &ImpreciseTree,
    base: &VariableFamily,
    lo: Option<f64>,
    hi: Option<f64>,
    cfg: &DriverConfig,
) -> Result<ConvergenceReport> {
    family_limit(tree, &base.clamp(lo, hi), cfg)
}

/// Lower-cut driver: drives `A → −∞` along the schedule, evaluating
/// `Ē(max{f, A})` at each step through the clamped family, and stops
/// when successive values differ by less than the tolerance.
///
/// The clamped inner families are evaluated at a tightened tolerance.
/// A non-increasing base family is accepted: the inner sequences this
/// driver meets are clamped from below, hence eventually pointwise
/// constant, and their stabilized value is read off the iterate trail
/// (upward-convergence guarantees cover only the non-decreasing case).
pub fn lower_cut_limit(
    tree: &ImpreciseTree,
    base: &VariableFamily,
    schedule: &[f64],
    cfg: &DriverConfig,
) -> Result<ConvergenceReport> {
    if schedule.is_empty() {
        return Err(Error::EmptyCutSchedule);
    }
    let inner_cfg = cfg.tightened();
    let mut iterates: Vec<Iterate> = Vec::new();
    for (k, &a) in schedule.iter().enumerate() {
        let inner = evaluate_cut(tree, base, Some(a), None, &inner_cfg)?;
        let value = match inner.verdict {
            Verdict::Converged => inner.final_value.expect("converged implies value"),
            verdict => {
                iterates.extend(inner.iterates.last().map(|it| Iterate {
                    n: k,
                    value: it.value,
                    delta: 0.0,
                }));
                return Ok(ConvergenceReport {
                    iterates,
                    verdict,
                    final_value: None,
                });
            }
        };
        let delta = iterates.last().map(|it| value - it.value).unwrap_or(0.0);
        iterates.push(Iterate { n: k, value, delta });

        // Ē(f_A) is non-decreasing in A, so the trail must be
        // non-increasing along the descending schedule.
        if iterates.len() >= 2 {
            let prev = iterates[iterates.len() - 2].value;
            if value > prev + cfg.tol {
                return Err(Error::IterateOrderViolation {
                    n: k,
                    before: prev,
                    after: value,
                });
            }
            if delta.abs() < cfg.tol {
                return Ok(ConvergenceReport {
                    final_value: Some(value),
                    iterates,
                    verdict: Verdict::Converged,
                });
            }
        }
    }
    Ok(ConvergenceReport {
        iterates,
        verdict: Verdict::BudgetExhausted,
        final_value: None,
    })
}

/// Two-sided cut driver: inner loop `B → +∞`, outer loop `A → −∞`,
/// converged when both loops stabilize within the tolerance. An inner
/// loop that keeps growing past the ceiling reports divergence (the
/// `Ē(f) = +∞` case, for which no cut limit is guaranteed).
pub fn two_sided_cut_limit(
    tree: &ImpreciseTree,
    base: &VariableFamily,
    lower_schedule: &[f64],
    upper_schedule: &[f64],
    cfg: &DriverConfig,
) -> Result<ConvergenceReport> {
    if lower_schedule.is_empty() || upper_schedule.is_empty() {
        return Err(Error::EmptyCutSchedule);
    }
    let inner_cfg = cfg.tightened();
    let family_cfg = inner_cfg.tightened();
    let mut outer: Vec<Iterate> = Vec::new();

    for (k, &a) in lower_schedule.iter().enumerate() {
        // Inner loop over B for this A.
        let mut inner_values: Vec<f64> = Vec::new();
        let mut inner_converged = None;
        for &b in upper_schedule {
            if b < a {
                continue;
            }
            let run = evaluate_cut(tree, base, Some(a), Some(b), &family_cfg)?;
            let value = match run.verdict {
                Verdict::Converged => run.final_value.expect("converged implies value"),
                verdict => {
                    return Ok(ConvergenceReport {
                        iterates: outer,
                        verdict,
                        final_value: None,
                    })
                }
            };
            if let Some(&prev) = inner_values.last() {
                if value.abs() > cfg.ceiling && (value - prev).abs() >= inner_cfg.tol {
                    return Ok(ConvergenceReport {
                        iterates: outer,
                        verdict: Verdict::Diverging,
                        final_value: None,
                    });
                }
                if (value - prev).abs() < inner_cfg.tol {
                    inner_converged = Some(value);
                    break;
                }
            }
            inner_values.push(value);
        }
        let value = match inner_converged {
            Some(v) => v,
            None => {
                return Ok(ConvergenceReport {
                    iterates: outer,
                    verdict: Verdict::BudgetExhausted,
                    final_value: None,
                })
            }
        };

        let delta = outer.last().map(|it| value - it.value).unwrap_or(0.0);
        outer.push(Iterate { n: k, value, delta });
        if outer.len() >= 2 && delta.abs() < cfg.tol {
            return Ok(ConvergenceReport {
                final_value: Some(value),
                iterates: outer,
                verdict: Verdict::Converged,
            });
        }
    }
    Ok(ConvergenceReport {
        iterates: outer,
        verdict: Verdict::BudgetExhausted,
        final_value: None,
    })
}

/// Lower expectation of a family's limit through conjugacy: the
/// lower-cut driver on `−f`, negated back. The approximants of `−f`
/// are the non-increasing lower cuts of the conjugate variable.
pub fn lower_expectation_via_cuts(
    tree: &ImpreciseTree,
    family: &VariableFamily,
    schedule: &[f64],
    cfg: &DriverConfig,
) -> Result<ConvergenceReport> {
    let conjugate = lower_cut_limit(tree, &family.negated(), schedule, cfg)?;
    Ok(ConvergenceReport {
        iterates: conjugate
            .iterates
            .iter()
            .map(|it| Iterate {
                n: it.n,
                value: -it.value,
                delta: -it.delta,
            })
            .collect(),
        verdict: conjugate.verdict,
        final_value: conjugate.final_value.map(|v| -v),
    })
}

/// Report of the downward-convergence counterexample under the vacuous
/// model: per-step upper expectations of the shrinking prefix events
/// (all exactly 1), the upper expectation of the pointwise limit
/// variable (exactly 0), and the constant-1 witness certificate.
#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub iterates: Vec<Iterate>,
    pub limit_value: f64,
    pub witness: SupermartingaleCertificate,
}

impl CounterexampleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,delta\n");
        for it in &self.iterates {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", it.n, it.value, it.delta));
        }
        out
    }

    /// How the non-n-measurable step events are evaluated.
    pub fn substitution_note() -> &'static str {
        "Each step-n event (all of the first n states equal 1, excluding the \
         constant-1 path) is evaluated through its n-measurable surrogate, the \
         indicator of the all-ones length-n prefix. Under the vacuous model both \
         have upper expectation 1: the constant-1 test supermartingale dominates \
         either indicator, and both are 1 somewhere on the surviving cylinder. \
         The pointwise limit of the original events is the zero variable, whose \
         upper expectation is 0."
    }
}

/// Builds the vacuous binary tree and exhibits the failure of downward
/// continuity: every step value is 1, the limit variable's value is 0.
pub fn downward_counterexample(n_max: usize) -> Result<CounterexampleReport> {
    assert!(n_max >= 1, "need at least one step");
    let tree = ImpreciseTree::iid(StateSpace::binary(), crate::local_models::LocalModel::vacuous())?;
    let mut iterates = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let ones = vec![1usize; n];
        let g_n = NMeasurableGamble::prefix_indicator(2, &ones, n)?;
        let value = upper_expectation(&tree, &g_n)?;
        let delta = iterates
            .last()
            .map(|it: &Iterate| value - it.value)
            .unwrap_or(0.0);
        iterates.push(Iterate { n, value, delta });
    }
    let limit_value = upper_expectation(&tree, &NMeasurableGamble::constant(2, 0.0)?)?;
    let witness =
        certify_supermartingale(&RealProcess::constant(1.0), &tree, n_max.min(10), 1e-9)?;
    Ok(CounterexampleReport {
        iterates,
        limit_value,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_models::LocalModel;

    fn credal_36() -> ImpreciseTree {
        ImpreciseTree::iid(
            StateSpace::binary(),
            LocalModel::credal_vertices(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap(),
        )
        .unwrap()
    }

    fn hitting() -> VariableFamily {
        hitting_time_family(&StateSpace::binary(), 1).unwrap()
    }

    #[test]
    fn hitting_family_members() {
        let fam = hitting();
        let f1 = fam.gamble(1).unwrap().to_dense().unwrap();
        assert_eq!(f1, vec![1.0, 1.0]);
        let f2 = fam.gamble(2).unwrap().to_dense().unwrap();
        // (0,0)=2, (0,1)=2, (1,0)=1, (1,1)=1
        assert_eq!(f2, vec![2.0, 2.0, 1.0, 1.0]);
        let f3 = fam.gamble(3).unwrap();
        let deep = Situation::from_states(&[0, 0, 0], 2).unwrap();
        assert_eq!(f3.value_at(&deep).unwrap(), 3.0);
    }

    #[test]
    fn upward_limit_precise_half() {
        let tree = ImpreciseTree::iid(
            StateSpace::binary(),
            LocalModel::precise(vec![0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let cfg = DriverConfig::default().with_tol(1e-9);
        let report = upward_limit(&tree, &hitting(), &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Converged);
        assert!((report.final_value.unwrap() - 2.0).abs() < 1e-6);
        // Iterates match the closed form (1 - 0.5^n)/0.5.
        for it in &report.iterates {
            let expected = (1.0 - 0.5f64.powi(it.n as i32)) / 0.5;
            assert!((it.value - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn upward_limit_credal_reaches_ten_thirds() {
        // The stopping rule bounds the deltas, not the distance to the
        // limit; a geometric tail of ratio 0.7 needs the driver at
        // 1e-7 to land within 1e-6 of the limit.
        let cfg = DriverConfig::default().with_tol(1e-7);
        let report = upward_limit(&credal_36(), &hitting(), &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Converged);
        assert!((report.final_value.unwrap() - 10.0 / 3.0).abs() < 1e-6);
        assert!(report.iterates.len() <= 60);
    }

    #[test]
    fn upward_limit_diverges_under_vacuous() {
        let tree =
            ImpreciseTree::iid(StateSpace::binary(), LocalModel::vacuous()).unwrap();
        let cfg = DriverConfig::default().with_tol(1e-6).with_budget(50);
        let report = upward_limit(&tree, &hitting(), &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Diverging);
        assert!(report.final_value.is_none());
        // sup f_n = n.
        for it in &report.iterates {
            assert_eq!(it.value, it.n as f64);
        }
    }

    #[test]
    fn upward_limit_rejects_misdeclared_families() {
        let tree = credal_36();
        let not_upward = hitting().negated();
        assert!(matches!(
            upward_limit(&tree, &not_upward, &DriverConfig::default()),
            Err(Error::NotAnUpwardFamily)
        ));

        // Declared non-decreasing but actually decreasing.
        let lying = VariableFamily::new(
            |n| NMeasurableGamble::constant(2, -(n as f64)),
            Monotonicity::NonDecreasing,
            Some(-1e9),
        );
        assert!(matches!(
            upward_limit(&tree, &lying, &DriverConfig::default()),
            Err(Error::MonotonicityViolation { .. }) | Err(Error::IterateOrderViolation { .. })
        ));
    }

    #[test]
    fn iterates_of_upward_runs_never_decrease() {
        let report = upward_limit(
            &credal_36(),
            &hitting(),
            &DriverConfig::default().with_tol(1e-6),
        )
        .unwrap();
        for pair in report.iterates.windows(2) {
            assert!(pair[1].value >= pair[0].value - 1e-12);
        }
    }

    #[test]
    fn fatou_of_constant_family_is_the_value() {
        let tree = credal_36();
        let f = NMeasurableGamble::from_table(2, 2, vec![2.0, 2.0, 1.0, 1.0]).unwrap();
        let fam = VariableFamily::constant(f.clone()).with_lower_bound(1.0);
        let report = fatou_bound(&tree, &fam, &DriverConfig::default().with_budget(6)).unwrap();
        let direct = upper_expectation(&tree, &f).unwrap();
        assert!((report.estimate - direct).abs() < 1e-12);
    }

    #[test]
    fn fatou_of_alternating_pair_takes_the_min() {
        let tree = credal_36();
        let g = NMeasurableGamble::from_table(2, 2, vec![3.0, 0.0, 1.0, 2.0]).unwrap();
        let h = NMeasurableGamble::from_table(2, 2, vec![0.0, 2.0, 2.0, 0.5]).unwrap();
        let (g2, h2) = (g.clone(), h.clone());
        let fam = VariableFamily::new(
            move |n| Ok(if n % 2 == 0 { g2.clone() } else { h2.clone() }),
            Monotonicity::None,
            Some(0.0),
        );
        let report = fatou_bound(&tree, &fam, &DriverConfig::default().with_budget(8)).unwrap();
        let eg = upper_expectation(&tree, &g).unwrap();
        let eh = upper_expectation(&tree, &h).unwrap();
        assert!((report.estimate - eg.min(eh)).abs() < 1e-12);

        // The Fatou contract: Ē of the pointwise liminf is below the estimate.
        let liminf = g.pointwise_min(&h).unwrap();
        let bound = upper_expectation(&tree, &liminf).unwrap();
        assert!(bound <= report.estimate + 1e-9);
    }

    #[test]
    fn fatou_gap_on_the_shrinking_prefix_events() {
        // Under the vacuous model the shrinking all-ones prefix events
        // all have upper expectation 1, so the tail infimum is 1, while
        // the pointwise limit of the original events is the zero
        // variable with upper expectation 0: the bound is strict.
        let tree =
            ImpreciseTree::iid(StateSpace::binary(), LocalModel::vacuous()).unwrap();
        let fam = VariableFamily::new(
            |n| NMeasurableGamble::prefix_indicator(2, &vec![1; n], n),
            Monotonicity::None,
            Some(0.0),
        );
        let report = fatou_bound(&tree, &fam, &DriverConfig::default().with_budget(10)).unwrap();
        assert_eq!(report.estimate, 1.0);
        let limit_value =
            upper_expectation(&tree, &NMeasurableGamble::constant(2, 0.0).unwrap()).unwrap();
        assert_eq!(limit_value, 0.0);
        assert!(limit_value < report.estimate);
    }

    #[test]
    fn lower_cut_on_nonnegative_variable_stops_immediately() {
        // f ≥ 0, so every A ≤ 0 leaves it untouched: first two cuts agree.
        let cfg = DriverConfig::default().with_tol(1e-6);
        let schedule = default_lower_schedule(cfg.budget);
        let report = lower_cut_limit(&credal_36(), &hitting(), &schedule, &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Converged);
        assert_eq!(report.iterates.len(), 2);
        assert!((report.final_value.unwrap() - 10.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn lower_cut_of_constant_variable() {
        let fam = VariableFamily::constant(NMeasurableGamble::constant(2, 7.5).unwrap())
            .with_lower_bound(7.5);
        let cfg = DriverConfig::default();
        let schedule = default_lower_schedule(cfg.budget);
        let report = lower_cut_limit(&credal_36(), &fam, &schedule, &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Converged);
        assert!((report.final_value.unwrap() - 7.5).abs() < 1e-9);
    }

    #[test]
    fn negated_hitting_time_reaches_minus_five_thirds() {
        let cfg = DriverConfig::default().with_tol(1e-6);
        let schedule = default_lower_schedule(cfg.budget);
        let report =
            lower_cut_limit(&credal_36(), &hitting().negated(), &schedule, &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Converged);
        assert!((report.final_value.unwrap() + 5.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn two_sided_agrees_with_one_sided_routes() {
        let cfg = DriverConfig::default().with_tol(1e-6);
        let lower = default_lower_schedule(cfg.budget);
        let upper = default_upper_schedule(cfg.budget);

        let up = two_sided_cut_limit(&credal_36(), &hitting(), &lower, &upper, &cfg).unwrap();
        assert_eq!(up.verdict, Verdict::Converged);
        assert!((up.final_value.unwrap() - 10.0 / 3.0).abs() < 1e-6);

        let down =
            two_sided_cut_limit(&credal_36(), &hitting().negated(), &lower, &upper, &cfg)
                .unwrap();
        assert_eq!(down.verdict, Verdict::Converged);
        assert!((down.final_value.unwrap() + 5.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn two_sided_bounded_variable_is_immediate() {
        let tree = credal_36();
        let f = NMeasurableGamble::from_table(2, 2, vec![0.3, 0.9, 0.1, 0.6]).unwrap();
        let fam = VariableFamily::constant(f.clone()).with_lower_bound(0.0);
        let cfg = DriverConfig::default();
        let report = two_sided_cut_limit(
            &tree,
            &fam,
            &default_lower_schedule(8),
            &default_upper_schedule(8),
            &cfg,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Converged);
        let direct = upper_expectation(&tree, &f).unwrap();
        assert!((report.final_value.unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn conjugate_lower_driver_reaches_five_thirds() {
        let cfg = DriverConfig::default().with_tol(1e-6);
        let schedule = default_lower_schedule(cfg.budget);
        let report =
            lower_expectation_via_cuts(&credal_36(), &hitting(), &schedule, &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Converged);
        assert!((report.final_value.unwrap() - 5.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn counterexample_sequence_is_constant_one_with_zero_limit() {
        let report = downward_counterexample(10).unwrap();
        assert_eq!(report.iterates.len(), 10);
        for it in &report.iterates {
            assert_eq!(it.value, 1.0);
        }
        assert_eq!(report.limit_value, 0.0);
        assert!(report.witness.certified());
        assert!(report.witness.is_test);
    }

    #[test]
    fn cut_variable_validates_and_clamps() {
        assert!(matches!(
            CutVariable::new(hitting(), 2.0, 1.0),
            Err(Error::BadCutPair { .. })
        ));
        let cut = CutVariable::new(hitting(), 0.0, 2.0).unwrap();
        let clamped = cut.approximants().gamble(3).unwrap().to_dense().unwrap();
        assert!(clamped.iter().all(|&v| (0.0..=2.0).contains(&v)));
    }

    #[test]
    fn slow_convergence_is_budget_exhaustion_not_divergence() {
        // Ratio-0.99 tail: deltas stay above tol for the whole budget
        // but shrink, so the verdict must not claim divergence.
        let tree = ImpreciseTree::iid(
            StateSpace::binary(),
            LocalModel::credal_vertices(vec![vec![0.99, 0.01], vec![0.98, 0.02]]).unwrap(),
        )
        .unwrap();
        let cfg = DriverConfig::default().with_tol(1e-6).with_budget(60);
        let report = upward_limit(&tree, &hitting(), &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::BudgetExhausted);
    }

    #[test]
    fn lower_cut_propagates_inner_divergence() {
        let tree =
            ImpreciseTree::iid(StateSpace::binary(), LocalModel::vacuous()).unwrap();
        let cfg = DriverConfig::default().with_tol(1e-6).with_budget(50);
        let schedule = default_lower_schedule(cfg.budget);
        let report = lower_cut_limit(&tree, &hitting(), &schedule, &cfg).unwrap();
        assert_eq!(report.verdict, Verdict::Diverging);
        assert!(report.final_value.is_none());
    }

    #[test]
    fn drivers_enforce_declared_bounds() {
        let tree = credal_36();
        assert!(matches!(
            fatou_bound(&tree, &hitting().negated(), &DriverConfig::default()),
            Err(Error::MissingLowerBound)
        ));

        // Declared bound 5 but the members sit at 1: caught on samples.
        let lying = hitting().with_lower_bound(5.0);
        assert!(matches!(
            upward_limit(&tree, &lying, &DriverConfig::default()),
            Err(Error::LowerBoundViolation { .. })
        ));
    }

    #[test]
    fn cut_values_are_monotone_in_both_parameters() {
        let tree = credal_36();
        let fam = hitting().negated(); // unbounded below
        let cfg = DriverConfig::default().with_tol(1e-8);
        let levels = [-16.0, -8.0, -4.0, -2.0];
        let caps = [2.0, 4.0, 8.0];
        let mut grid = Vec::new();
        for &a in &levels {
            let mut row = Vec::new();
            for &b in &caps {
                let run = family_limit(&tree, &fam.clamp(Some(a), Some(b)), &cfg).unwrap();
                row.push(run.final_value.unwrap());
            }
            grid.push(row);
        }
        for (i, row) in grid.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if j + 1 < row.len() {
                    assert!(row[j + 1] >= v - 1e-9, "not monotone in B at ({i},{j})");
                }
                if i + 1 < grid.len() {
                    assert!(grid[i + 1][j] >= v - 1e-9, "not monotone in A at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn drivers_agree_on_bounded_variables() {
        let tree = credal_36();
        let f = NMeasurableGamble::from_table(2, 2, vec![1.5, -0.5, 2.0, 0.25]).unwrap();
        let direct = upper_expectation(&tree, &f).unwrap();
        let fam = VariableFamily::constant(f).with_lower_bound(-0.5);
        let cfg = DriverConfig::default();

        let up = upward_limit(&tree, &fam, &cfg).unwrap();
        assert!((up.final_value.unwrap() - direct).abs() <= cfg.tol);

        let schedule = default_lower_schedule(cfg.budget);
        let low = lower_cut_limit(&tree, &fam, &schedule, &cfg).unwrap();
        assert!((low.final_value.unwrap() - direct).abs() <= cfg.tol);

        let two = two_sided_cut_limit(
            &tree,
            &fam,
            &schedule,
            &default_upper_schedule(cfg.budget),
            &cfg,
        )
        .unwrap();
        assert!((two.final_value.unwrap() - direct).abs() <= cfg.tol);
    }

    #[test]
    fn csv_rendering_is_stable() {
        let report = ConvergenceReport {
            iterates: vec![Iterate {
                n: 1,
                value: 10.0 / 3.0,
                delta: 0.5,
            }],
            verdict: Verdict::Converged,
            final_value: Some(10.0 / 3.0),
        };
        let csv = report.to_csv();
        assert_eq!(csv, report.to_csv());
        assert!(csv.starts_with("n,value,delta\n"));
        assert!(csv.contains("3.3333333333333335e0"));
    }
}
