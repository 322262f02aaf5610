//! Real and gamble processes on the event tree.
//!
//! A real process maps situations to reals; a gamble process maps each
//! situation to a local gamble on the next state. The two are connected
//! by four constructions: the process difference and its inverse, the
//! summation process, and the process multiplier and its inverse, the
//! product process.
//!
//! A supermartingale is a real process whose difference has non-positive
//! local upper expectation in every situation. Since that cannot be
//! verified for infinitely many situations, certification here is always
//! relative to an explicit checked depth; behavior past that depth is
//! deliberately left undeclared.

use crate::error::{Error, Result};
use crate::local_models::LocalGamble;
use crate::tree::{ImpreciseTree, Situation};
use std::sync::Arc;

type RealEval = dyn Fn(&Situation) -> Result<f64> + Send + Sync;
type GambleEval = dyn Fn(&Situation) -> Result<LocalGamble> + Send + Sync;

/// A deterministic map from situations to finite reals.
///
/// Evaluators must be pure; callers may evaluate distinct situations
/// concurrently. Memoization inside an evaluator is allowed as long as
/// the result is deterministic.
#[derive(Clone)]
pub struct RealProcess {
    eval: Arc<RealEval>,
    known_lower_bound: Option<f64>,
}

impl RealProcess {
    pub fn new(eval: impl Fn(&Situation) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            known_lower_bound: None,
        }
    }

    pub fn with_lower_bound(
        eval: impl Fn(&Situation) -> Result<f64> + Send + Sync + 'static,
        bound: f64,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            known_lower_bound: Some(bound),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            eval: Arc::new(move |_| Ok(value)),
            known_lower_bound: Some(value),
        }
    }

    pub fn evaluate(&self, s: &Situation) -> Result<f64> {
        (self.eval)(s)
    }

    pub fn known_lower_bound(&self) -> Option<f64> {
        self.known_lower_bound
    }
}

impl std::fmt::Debug for RealProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealProcess")
            .field("known_lower_bound", &self.known_lower_bound)
            .finish()
    }
}

/// A deterministic map from situations to local gambles on the next
/// state.
#[derive(Clone)]
pub struct GambleProcess {
    eval: Arc<GambleEval>,
}

impl GambleProcess {
    pub fn new(eval: impl Fn(&Situation) -> Result<LocalGamble> + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(move |s| Ok(LocalGamble::constant(s.alphabet(), value)))
    }

    pub fn evaluate(&self, s: &Situation) -> Result<LocalGamble> {
        (self.eval)(s)
    }
}

impl std::fmt::Debug for GambleProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("GambleProcess")
    }
}

/// Process difference: `ΔL(s)(x) = L(sx) − L(s)`.
pub fn difference(process: &RealProcess) -> GambleProcess {
    let p = process.clone();
    GambleProcess::new(move |s| {
        let base = p.evaluate(s)?;
        let mut values = Vec::with_capacity(s.alphabet());
        for x in 0..s.alphabet() {
            values.push(p.evaluate(&s.child(x)?)? - base);
        }
        LocalGamble::new(values)
    })
}

/// Summation process: partial sums of the gambles along the way to a
/// situation, 0 at the root.
pub fn summation(gambles: &GambleProcess) -> RealProcess {
    let d = gambles.clone();
    RealProcess::new(move |s| {
        let mut total = 0.0;
        let mut prefix = Situation::root(s.alphabet());
        for &x in s.states() {
            total += d.evaluate(&prefix)?.values()[x];
            prefix = prefix.child(x)?;
        }
        Ok(total)
    })
}

/// Process multiplier: `μL(s)(x) = L(sx) / L(s)`. Evaluation fails on a
/// zero value.
pub fn multiplier(process: &RealProcess) -> GambleProcess {
    let p = process.clone();
    GambleProcess::new(move |s| {
        let base = p.evaluate(s)?;
        if base == 0.0 {
            return Err(Error::ZeroProcessValue(s.clone()));
        }
        let mut values = Vec::with_capacity(s.alphabet());
        for x in 0..s.alphabet() {
            values.push(p.evaluate(&s.child(x)?)? / base);
        }
        LocalGamble::new(values)
    })
}

/// Product process: running product of the gambles along the way to a
/// situation, 1 at the root.
pub fn product(gambles: &GambleProcess) -> RealProcess {
    let d = gambles.clone();
    RealProcess::new(move |s| {
        let mut total = 1.0;
        let mut prefix = Situation::root(s.alphabet());
        for &x in s.states() {
            total *= d.evaluate(&prefix)?.values()[x];
            prefix = prefix.child(x)?;
        }
        Ok(total)
    })
}

/// Pointwise `min{L(s), bound}`.
pub fn clip(process: &RealProcess, bound: f64) -> RealProcess {
    let p = process.clone();
    let lower = process.known_lower_bound().map(|m| m.min(bound));
    let eval = move |s: &Situation| Ok(p.evaluate(s)?.min(bound));
    match lower {
        Some(m) => RealProcess::with_lower_bound(eval, m),
        None => RealProcess::new(eval),
    }
}

/// Pointwise convex combination of processes.
///
/// `alpha` is the declared common multiplier bound of the inputs; the
/// combination inherits it (checked downstream via certification, not
/// here). Weights are validated eagerly; positivity of the inputs is
/// checked at evaluation time.
pub fn convex_combine(
    processes: &[RealProcess],
    weights: &[f64],
    alpha: f64,
) -> Result<RealProcess> {
    if processes.is_empty() {
        return Err(Error::EmptyCombination);
    }
    if weights.len() != processes.len() {
        return Err(Error::BadWeights {
            sum: weights.iter().sum(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::BadWeights { sum });
    }
    let _ = alpha;
    let processes = processes.to_vec();
    let weights = weights.to_vec();
    Ok(RealProcess::with_lower_bound(
        move |s| {
            let mut total = 0.0;
            for (i, (p, w)) in processes.iter().zip(&weights).enumerate() {
                let v = p.evaluate(s)?;
                if v <= 0.0 {
                    return Err(Error::NonPositiveCombinationInput {
                        index: i,
                        situation: s.clone(),
                        value: v,
                    });
                }
                total += w * v;
            }
            Ok(total)
        },
        0.0,
    ))
}

/// Default certification tolerance; deep products accumulate floating
/// error, so this is overridable at every call site.
pub const DEFAULT_CERT_TOL: f64 = 1e-9;

/// Guard on the number of situations a certification sweep may visit.
pub const MAX_CERTIFY_SITUATIONS: usize = 1 << 22;

/// Outcome of a depth-bounded supermartingale check.
///
/// `certified()` means every checked situation had
/// `Q̄(ΔL(s) | s) ≤ tol`; it says nothing about situations beyond
/// `checked_depth`.
#[derive(Debug, Clone)]
pub struct SupermartingaleCertificate {
    process: RealProcess,
    pub checked_depth: usize,
    pub max_violation: f64,
    pub tol: f64,
    /// Non-negative at every checked situation and 1 at the root.
    pub is_test: bool,
}

impl SupermartingaleCertificate {
    pub fn certified(&self) -> bool {
        self.max_violation <= self.tol
    }

    pub fn process(&self) -> &RealProcess {
        &self.process
    }
}

/// Evaluates `Q̄(ΔL(s) | s)` for every situation strictly above `depth`
/// and records the worst value. `is_test` additionally checks
/// non-negativity on all visited situations and value 1 at the root.
pub fn certify_supermartingale(
    process: &RealProcess,
    tree: &ImpreciseTree,
    depth: usize,
    tol: f64,
) -> Result<SupermartingaleCertificate> {
    let alphabet = tree.alphabet();
    let total: u128 = (0..=depth).map(|d| (alphabet as u128).pow(d as u32)).sum();
    if total > MAX_CERTIFY_SITUATIONS as u128 {
        return Err(Error::DenseLimitExceeded {
            cells: total,
            limit: MAX_CERTIFY_SITUATIONS,
        });
    }

    let diff = difference(process);
    let mut max_violation = f64::NEG_INFINITY;
    let mut non_negative = true;
    for d in 0..=depth {
        for s in Situation::all_at_depth(alphabet, d) {
            if process.evaluate(&s)? < 0.0 {
                non_negative = false;
            }
            if d < depth {
                let local = tree.resolve_model(&s)?;
                let value = local.upper(&diff.evaluate(&s)?)?;
                max_violation = max_violation.max(value);
            }
        }
    }
    if depth == 0 {
        max_violation = 0.0;
    }

    let root_value = process.evaluate(&tree.root())?;
    let is_test = non_negative && (root_value - 1.0).abs() <= tol;
    Ok(SupermartingaleCertificate {
        process: process.clone(),
        checked_depth: depth,
        max_violation,
        tol,
        is_test,
    })
}

/// Finite-depth analogue of the supermartingale lower bound: a certified
/// supermartingale dominates the minimum of its values over all
/// descendants at any fixed relative depth.
///
/// Returns `(lhs, rhs) = (L(s), min over descendants)`; the contract is
/// `lhs ≥ rhs − tol`, which callers assert.
pub fn finite_levy_bound(
    certificate: &SupermartingaleCertificate,
    s: &Situation,
    relative_depth: usize,
) -> Result<(f64, f64)> {
    if !certificate.certified() {
        return Err(Error::NotCertified {
            max_violation: certificate.max_violation,
            tol: certificate.tol,
        });
    }
    if s.depth() + relative_depth > certificate.checked_depth {
        return Err(Error::CertificateTooShallow {
            situation: s.clone(),
            relative: relative_depth,
            checked: certificate.checked_depth,
        });
    }
    let process = certificate.process();
    let lhs = process.evaluate(s)?;
    let mut rhs = f64::INFINITY;
    for suffix in Situation::all_at_depth(s.alphabet(), relative_depth) {
        let mut t = s.clone();
        for &x in suffix.states() {
            t = t.child(x)?;
        }
        rhs = rhs.min(process.evaluate(&t)?);
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_models::LocalModel;
    use crate::tree::StateSpace;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn binary_tree(model: LocalModel) -> ImpreciseTree {
        ImpreciseTree::iid(StateSpace::binary(), model).unwrap()
    }

    fn depth_process() -> RealProcess {
        RealProcess::new(|s| Ok(s.depth() as f64))
    }

    #[test]
    fn difference_of_constant_is_zero() {
        let d = difference(&RealProcess::constant(7.0));
        let s = Situation::root(2);
        assert_eq!(d.evaluate(&s).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn difference_of_depth_is_one() {
        let d = difference(&depth_process());
        let s = Situation::from_states(&[1, 0], 2).unwrap();
        assert_eq!(d.evaluate(&s).unwrap().values(), &[1.0, 1.0]);
    }

    #[test]
    fn difference_of_doubling_doubles() {
        let p = RealProcess::new(|s| Ok(2f64.powi(s.depth() as i32)));
        let d = difference(&p);
        let s = Situation::from_states(&[0, 1], 2).unwrap();
        // 2^3 - 2^2 = 4 at every child.
        assert_eq!(d.evaluate(&s).unwrap().values(), &[4.0, 4.0]);
    }

    #[test]
    fn summation_of_unit_gamble_counts_depth() {
        let s = summation(&GambleProcess::constant(1.0));
        let sit = Situation::from_states(&[1, 1, 0], 2).unwrap();
        assert_eq!(s.evaluate(&sit).unwrap(), 3.0);
        assert_eq!(s.evaluate(&Situation::root(2)).unwrap(), 0.0);
    }

    #[test]
    fn product_of_twos_is_exponential() {
        let p = product(&GambleProcess::constant(2.0));
        let sit = Situation::from_states(&[0, 1, 0], 2).unwrap();
        assert_eq!(p.evaluate(&sit).unwrap(), 8.0);
        assert_eq!(p.evaluate(&Situation::root(2)).unwrap(), 1.0);
    }

    fn random_table_process(rng: &mut impl Rng, depth: usize, positive: bool) -> RealProcess {
        let tables: Vec<Vec<f64>> = (0..=depth)
            .map(|d| {
                (0..2usize.pow(d as u32))
                    .map(|_| {
                        if positive {
                            rng.gen_range(0.5..4.0)
                        } else {
                            rng.gen_range(-3.0..3.0)
                        }
                    })
                    .collect()
            })
            .collect();
        RealProcess::new(move |s| Ok(tables[s.depth()][s.rank()]))
    }

    #[test]
    fn summation_inverts_difference_up_to_root_value() {
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        for _ in 0..20 {
            let l = random_table_process(&mut rng, 4, false);
            let recovered = summation(&difference(&l));
            let root = l.evaluate(&Situation::root(2)).unwrap();
            for d in 0..=4 {
                for s in Situation::all_at_depth(2, d) {
                    let direct = l.evaluate(&s).unwrap() - root;
                    let telescoped = recovered.evaluate(&s).unwrap();
                    assert!((direct - telescoped).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_inverts_multiplier_up_to_root_value() {
        let mut rng = ChaCha12Rng::seed_from_u64(202);
        for _ in 0..20 {
            let l = random_table_process(&mut rng, 4, true);
            let recovered = product(&multiplier(&l));
            let root = l.evaluate(&Situation::root(2)).unwrap();
            for d in 0..=4 {
                for s in Situation::all_at_depth(2, d) {
                    let direct = l.evaluate(&s).unwrap();
                    let rebuilt = recovered.evaluate(&s).unwrap() * root;
                    assert!((direct - rebuilt).abs() <= 1e-12 * direct.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn multiplier_rejects_zero_values() {
        let p = RealProcess::new(|s| Ok(if s.depth() == 1 { 0.0 } else { 1.0 }));
        let m = multiplier(&p);
        let at_zero = Situation::from_states(&[0], 2).unwrap();
        assert!(matches!(
            m.evaluate(&at_zero),
            Err(Error::ZeroProcessValue(_))
        ));
        assert!(m.evaluate(&Situation::root(2)).is_ok());
    }

    #[test]
    fn constant_process_certifies() {
        let tree = binary_tree(LocalModel::precise(vec![0.5, 0.5]).unwrap());
        let cert = certify_supermartingale(&RealProcess::constant(3.0), &tree, 3, 1e-9).unwrap();
        assert!(cert.certified());
        assert_eq!(cert.max_violation, 0.0);
        assert!(!cert.is_test); // root value is 3, not 1
    }

    #[test]
    fn depth_process_is_not_a_supermartingale() {
        let tree = binary_tree(LocalModel::precise(vec![0.5, 0.5]).unwrap());
        let cert = certify_supermartingale(&depth_process(), &tree, 3, 1e-9).unwrap();
        assert!(!cert.certified());
        assert!((cert.max_violation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clip_of_constant() {
        let clipped = clip(&RealProcess::constant(7.0), 3.0);
        assert_eq!(clipped.evaluate(&Situation::root(2)).unwrap(), 3.0);
        let untouched = clip(&RealProcess::constant(7.0), 10.0);
        assert_eq!(untouched.evaluate(&Situation::root(2)).unwrap(), 7.0);
    }

    #[test]
    fn convex_combine_identity_and_idempotence() {
        let t = RealProcess::constant(1.0);
        let single = convex_combine(std::slice::from_ref(&t), &[1.0], 2.0).unwrap();
        assert_eq!(single.evaluate(&Situation::root(2)).unwrap(), 1.0);

        let duplicated = convex_combine(&[t.clone(), t], &[0.5, 0.5], 2.0).unwrap();
        assert_eq!(duplicated.evaluate(&Situation::root(2)).unwrap(), 1.0);
    }

    #[test]
    fn convex_combine_validates_inputs() {
        let t = RealProcess::constant(1.0);
        assert!(matches!(
            convex_combine(&[], &[], 2.0),
            Err(Error::EmptyCombination)
        ));
        assert!(matches!(
            convex_combine(&[t.clone(), t.clone()], &[0.5, 0.6], 2.0),
            Err(Error::BadWeights { .. })
        ));
        let negative = RealProcess::constant(-1.0);
        let combined = convex_combine(&[negative], &[1.0], 2.0).unwrap();
        assert!(matches!(
            combined.evaluate(&Situation::root(2)),
            Err(Error::NonPositiveCombinationInput { .. })
        ));
    }

    #[test]
    fn levy_bound_on_constant_process_is_tight() {
        let tree = binary_tree(LocalModel::vacuous());
        let cert = certify_supermartingale(&RealProcess::constant(2.0), &tree, 4, 1e-9).unwrap();
        let (lhs, rhs) = finite_levy_bound(&cert, &Situation::root(2), 3).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn levy_bound_requires_certificate_depth() {
        let tree = binary_tree(LocalModel::vacuous());
        let cert = certify_supermartingale(&RealProcess::constant(2.0), &tree, 2, 1e-9).unwrap();
        assert!(matches!(
            finite_levy_bound(&cert, &Situation::root(2), 3),
            Err(Error::CertificateTooShallow { .. })
        ));

        let bad = certify_supermartingale(&depth_process(), &tree, 3, 1e-9).unwrap();
        assert!(matches!(
            finite_levy_bound(&bad, &Situation::root(2), 1),
            Err(Error::NotCertified { .. })
        ));
    }

    #[test]
    fn min_commutes_with_running_minimum() {
        // Finite analogue of the min/liminf switch: clipping before or
        // after taking the running minimum along a prefix is the same.
        let mut rng = ChaCha12Rng::seed_from_u64(303);
        for _ in 0..10 {
            let l = random_table_process(&mut rng, 4, false);
            let b = rng.gen_range(-2.0..2.0);
            for prefix in Situation::all_at_depth(2, 4) {
                let values: Vec<f64> = (0..=4)
                    .map(|d| l.evaluate(&prefix.truncate(d)).unwrap())
                    .collect();
                let min_then_clip = values.iter().copied().fold(f64::INFINITY, f64::min).min(b);
                let clip_then_min = values
                    .iter()
                    .map(|v| v.min(b))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(min_then_clip, clip_then_min);
            }
        }
    }
}
