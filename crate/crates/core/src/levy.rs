//! Constructive zero-one-law machinery.
//!
//! For a gamble `f` and a rational couple `0 < a < b`, the event tree
//! splits into alternating first-hit cuts: `V_k` collects the first
//! situations (after `U_{k−1}`) where the conditional upper expectation
//! of `f` drops below `a`, and `U_k` the first situations after `V_k`
//! where a witness supermartingale climbs above `b`. Betting the
//! witness's multiplier inside each `[V_k, U_k)` window and holding
//! otherwise yields a positive test supermartingale `T^{a,b}` that
//! multiplies by more than `b/a` per completed crossing; a convex
//! combination over couples with multiplier bound `α` is the composite
//! test supermartingale `T`.
//!
//! The witness is instantiated as the expectation process itself,
//! extended constantly below the horizon: it is positive after the
//! normalization shift, stays inside `[inf f, sup f]`, sits below `a`
//! on every `V_k` by construction, and equals `f` from the horizon
//! onward.
//!
//! At desk scale the asymptotic divergence of `T` on violation paths is
//! not observable; what is verified instead are the structural facts:
//! certification as a positive test supermartingale, the multiplier
//! bound `μT ≤ α`, and the per-prefix growth bounds of the crossing
//! case analysis.

use crate::error::{Error, Result};
use crate::global_expectation::{backward_recursion, ExpectationProcess, NMeasurableGamble};
use crate::local_models::LocalGamble;
use crate::processes::{
    certify_supermartingale, convex_combine, multiplier, product, GambleProcess, RealProcess,
    SupermartingaleCertificate,
};
use crate::tree::{ImpreciseTree, PathPrefix, Situation};
use num::rational::Ratio;
use num::ToPrimitive;
use std::sync::Arc;

/// A rational couple `0 < a < b` indexing one crossing construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalCouple {
    a: Ratio<i64>,
    b: Ratio<i64>,
}

impl RationalCouple {
    pub fn new(a: Ratio<i64>, b: Ratio<i64>) -> Result<Self> {
        if a <= Ratio::from_integer(0) || b <= a {
            return Err(Error::BadRationalCouple {
                a: a.to_string(),
                b: b.to_string(),
            });
        }
        Ok(Self { a, b })
    }

    /// Couple from integer numerators and denominators.
    pub fn from_parts(a_num: i64, a_den: i64, b_num: i64, b_den: i64) -> Result<Self> {
        if a_den == 0 || b_den == 0 {
            return Err(Error::BadRationalCouple {
                a: format!("{a_num}/{a_den}"),
                b: format!("{b_num}/{b_den}"),
            });
        }
        Self::new(Ratio::new(a_num, a_den), Ratio::new(b_num, b_den))
    }

    pub fn a(&self) -> f64 {
        self.a.to_f64().expect("i64 ratio fits in f64")
    }

    pub fn b(&self) -> f64 {
        self.b.to_f64().expect("i64 ratio fits in f64")
    }

    pub fn a_ratio(&self) -> Ratio<i64> {
        self.a
    }

    pub fn b_ratio(&self) -> Ratio<i64> {
        self.b
    }
}

impl std::fmt::Display for RationalCouple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Consecutive dyadic rationals (denominator 4) spanning `(lo, hi)`,
/// capped in count. The pragmatic default when no couples are supplied.
pub fn default_couples(lo: f64, hi: f64, max_count: usize) -> Vec<RationalCouple> {
    let mut couples = Vec::new();
    let first = (lo * 4.0).floor() as i64 + 1;
    let last = (hi * 4.0).ceil() as i64 - 1;
    for j in first.max(1)..last {
        if couples.len() >= max_count {
            break;
        }
        if let Ok(c) = RationalCouple::from_parts(j, 4, j + 1, 4) {
            couples.push(c);
        }
    }
    couples
}

/// One detected crossing pair: the situations entering the window and
/// the situations closing it. `closing` may be empty when the witness
/// never climbs above `b` inside the depth bound.
#[derive(Debug, Clone)]
pub struct CutPair {
    pub entering: Vec<Situation>,
    pub closing: Vec<Situation>,
}

/// Alternating first-hit cuts detected for one couple.
#[derive(Debug, Clone)]
pub struct CutTrace {
    pub couple: RationalCouple,
    pub pairs: Vec<CutPair>,
}

impl CutTrace {
    /// A couple is informative when it detects at least one entering
    /// cut.
    pub fn is_informative(&self) -> bool {
        self.pairs.first().is_some_and(|p| !p.entering.is_empty())
    }

    /// Number of pairs with a realized closing cut.
    pub fn realized_crossings(&self) -> usize {
        self.pairs.iter().filter(|p| !p.closing.is_empty()).count()
    }

    /// Whether the multiplier window is open at `s`: some entering
    /// situation is an ancestor-or-self, no closing situation is, and
    /// some closing situation lies strictly below `s` (the window is
    /// realized under `s`).
    fn window_open(&self, s: &Situation) -> bool {
        for pair in &self.pairs {
            let entered = pair.entering.iter().any(|v| v.is_prefix_of(s));
            if !entered {
                continue;
            }
            let closed = pair.closing.iter().any(|u| u.is_prefix_of(s));
            if closed {
                continue;
            }
            return pair
                .closing
                .iter()
                .any(|u| s.is_prefix_of(u) && u.depth() > s.depth());
        }
        false
    }
}

/// Minimal situations below (or at) the start situations where the
/// predicate first holds, scanned depth-first in state order.
fn first_hits(
    starts: &[Situation],
    include_starts: bool,
    depth_bound: usize,
    pred: &dyn Fn(&Situation) -> Result<bool>,
) -> Result<Vec<Situation>> {
    fn scan(
        s: &Situation,
        depth_bound: usize,
        pred: &dyn Fn(&Situation) -> Result<bool>,
        hits: &mut Vec<Situation>,
    ) -> Result<()> {
        if pred(s)? {
            hits.push(s.clone());
            return Ok(());
        }
        if s.depth() >= depth_bound {
            return Ok(());
        }
        for x in 0..s.alphabet() {
            scan(&s.child(x)?, depth_bound, pred, hits)?;
        }
        Ok(())
    }

    let mut hits = Vec::new();
    for start in starts {
        if include_starts {
            scan(start, depth_bound, pred, &mut hits)?;
        } else if start.depth() < depth_bound {
            for x in 0..start.alphabet() {
                scan(&start.child(x)?, depth_bound, pred, &mut hits)?;
            }
        }
    }
    Ok(hits)
}

/// Detects the alternating cut sequence for one couple by breadth of
/// first-hit scans to the depth bound.
///
/// The conditional values come from the expectation process (extended
/// constantly below its horizon); the witness drives the closing rule.
/// The first entering scan includes the root itself, so a root value
/// already below `a` yields `V_1 = {□}`.
pub fn detect_cuts(
    tree: &ImpreciseTree,
    e: &ExpectationProcess,
    couple: RationalCouple,
    witness: &RealProcess,
    depth_bound: usize,
) -> Result<CutTrace> {
    if tree.alphabet() != e.gamble().alphabet() {
        return Err(Error::MismatchedStateSpaces {
            left: e.gamble().alphabet(),
            right: tree.alphabet(),
        });
    }
    let conditional = e.extended_process();
    let a = couple.a();
    let b = couple.b();

    let mut pairs = Vec::new();
    let mut frontier = vec![tree.root()];
    let mut include = true;
    loop {
        let entering = first_hits(&frontier, include, depth_bound, &|s| {
            Ok(conditional.evaluate(s)? < a)
        })?;
        if entering.is_empty() {
            break;
        }
        let closing = first_hits(&entering, false, depth_bound, &|s| {
            Ok(witness.evaluate(s)? > b)
        })?;
        let done = closing.is_empty();
        frontier = closing.clone();
        pairs.push(CutPair { entering, closing });
        if done {
            break;
        }
        include = false;
    }
    Ok(CutTrace { couple, pairs })
}

/// Shifts a gamble so the whole table is positive and its spread fits
/// the multiplier bound: `inf(f+c) > 0` and
/// `sup(f+c) / inf(f+c) ≤ alpha`. Returns the shifted gamble and the
/// offset used.
pub fn normalize_gamble(f: &NMeasurableGamble, alpha: f64) -> Result<(NMeasurableGamble, f64)> {
    if alpha <= 1.0 {
        return Err(Error::BadAlpha(alpha));
    }
    let table = f.to_dense()?;
    let (inf, sup) = table
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut offset = ((sup - alpha * inf) / (alpha - 1.0)).max(0.0);
    if inf + offset <= 0.0 {
        // Constant tables (and only those) land here; any positive
        // shift keeps the ratio at 1.
        offset = offset.max(1.0 - inf);
    }
    debug_assert!(inf + offset > 0.0);
    debug_assert!(sup + offset <= alpha * (inf + offset) + 1e-9 * alpha.max(sup.abs()));
    Ok((f.affine(1.0, offset), offset))
}

/// Growth check along one prefix: crossings completed by the dominant
/// couple, the case-analysis lower bound, and the per-couple test
/// supermartingale's actual value.
#[derive(Debug, Clone)]
pub struct GrowthCheck {
    pub couple_index: usize,
    pub crossings: usize,
    /// The prefix sits strictly inside an entered, realized window.
    pub in_window: bool,
    pub lower_bound: f64,
    pub value: f64,
}

impl GrowthCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.value >= self.lower_bound - tol
    }
}

/// The assembled construction: normalized gamble, detected cuts, the
/// per-couple test supermartingales and their convex combination.
#[derive(Debug, Clone)]
pub struct LevyConstruction {
    shifted: NMeasurableGamble,
    offset: f64,
    alpha: f64,
    weights: Vec<f64>,
    depth_bound: usize,
    inf_shifted: f64,
    sup_shifted: f64,
    traces: Vec<CutTrace>,
    per_couple: Vec<RealProcess>,
    combined: RealProcess,
}

impl LevyConstruction {
    pub fn shifted_gamble(&self) -> &NMeasurableGamble {
        &self.shifted
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn depth_bound(&self) -> usize {
        self.depth_bound
    }

    pub fn inf_shifted(&self) -> f64 {
        self.inf_shifted
    }

    pub fn sup_shifted(&self) -> f64 {
        self.sup_shifted
    }

    pub fn traces(&self) -> &[CutTrace] {
        &self.traces
    }

    /// The composite test supermartingale `T`.
    pub fn test_supermartingale(&self) -> &RealProcess {
        &self.combined
    }

    /// The per-couple test supermartingale `T^{a,b}`.
    pub fn couple_supermartingale(&self, index: usize) -> &RealProcess {
        &self.per_couple[index]
    }

    /// Certifies `T` to the depth bound.
    pub fn certify(&self, tree: &ImpreciseTree, tol: f64) -> Result<SupermartingaleCertificate> {
        certify_supermartingale(&self.combined, tree, self.depth_bound, tol)
    }

    /// Largest multiplier value of `T` over all situations strictly
    /// above the depth bound.
    pub fn max_multiplier(&self) -> Result<f64> {
        let mult = multiplier(&self.combined);
        let alphabet = self.shifted.alphabet();
        let mut max = f64::NEG_INFINITY;
        for d in 0..self.depth_bound {
            for s in Situation::all_at_depth(alphabet, d) {
                max = max.max(mult.evaluate(&s)?.sup());
            }
        }
        Ok(max)
    }

    /// Walks the prefix for every couple, counts completed crossings,
    /// and returns the check for the dominant couple (most crossings,
    /// first on ties).
    pub fn verify_growth(&self, prefix: &PathPrefix) -> Result<GrowthCheck> {
        if prefix.depth() > self.depth_bound {
            return Err(Error::PrefixBeyondDepthBound {
                depth: prefix.depth(),
                bound: self.depth_bound,
            });
        }
        let mut best: Option<GrowthCheck> = None;
        for (index, trace) in self.traces.iter().enumerate() {
            let (crossings, in_window) = walk_crossings(trace, prefix);
            let ratio = trace.couple.b() / trace.couple.a();
            let mut lower_bound = ratio.powi(crossings as i32);
            if in_window {
                lower_bound *= self.inf_shifted / trace.couple.a();
            }
            let value = self.per_couple[index].evaluate(prefix)?;
            let check = GrowthCheck {
                couple_index: index,
                crossings,
                in_window,
                lower_bound,
                value,
            };
            let better = match &best {
                None => true,
                Some(b) => crossings > b.crossings,
            };
            if better {
                best = Some(check);
            }
        }
        best.ok_or(Error::EmptyCombination)
    }
}

/// Completed crossings along the ancestor chain of `prefix`, plus
/// whether the prefix ends strictly inside an open window entered at a
/// proper ancestor.
fn walk_crossings(trace: &CutTrace, prefix: &PathPrefix) -> (usize, bool) {
    let mut completed = 0usize;
    let mut open_entry: Option<usize> = None;
    for d in 0..=prefix.depth() {
        let anc = prefix.truncate(d);
        match open_entry {
            None => {
                if let Some(pair) = trace.pairs.get(completed) {
                    if pair.entering.contains(&anc) {
                        open_entry = Some(d);
                    }
                }
            }
            Some(_) => {
                let pair = &trace.pairs[completed];
                if pair.closing.contains(&anc) {
                    completed += 1;
                    open_entry = None;
                }
            }
        }
    }
    // Entered strictly above the end of the prefix: the product may
    // carry partial window ratios (down to inf/a even when the window
    // is not realized below this branch), so the in-window bound is the
    // safe one. Entry exactly at the end multiplies nothing yet.
    let in_window = matches!(open_entry, Some(d) if d < prefix.depth());
    (completed, in_window)
}

/// Builds the composite construction: normalizes the gamble, runs the
/// recursion once, detects cuts per couple, forms each windowed product
/// and combines them.
pub fn build_levy_supermartingale(
    tree: &ImpreciseTree,
    f: &NMeasurableGamble,
    alpha: f64,
    couples: &[RationalCouple],
    weights: &[f64],
    depth_bound: usize,
) -> Result<LevyConstruction> {
    if alpha <= 1.0 {
        return Err(Error::BadAlpha(alpha));
    }
    if couples.is_empty() {
        return Err(Error::EmptyCombination);
    }
    if couples.len() != weights.len() {
        return Err(Error::CoupleWeightMismatch {
            couples: couples.len(),
            weights: weights.len(),
        });
    }

    let (shifted, offset) = normalize_gamble(f, alpha)?;
    let table = shifted.to_dense()?;
    let (inf_shifted, sup_shifted) = table
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    let e = backward_recursion(tree, &shifted)?;
    let witness = e.extended_process();
    let witness_multiplier = multiplier(&witness);

    let mut traces = Vec::with_capacity(couples.len());
    let mut per_couple = Vec::with_capacity(couples.len());
    for &couple in couples {
        let trace = detect_cuts(tree, &e, couple, &witness, depth_bound)?;
        let window_trace = Arc::new(trace.clone());
        let mult = witness_multiplier.clone();
        let windowed = GambleProcess::new(move |s| {
            if window_trace.window_open(s) {
                mult.evaluate(s)
            } else {
                Ok(LocalGamble::constant(s.alphabet(), 1.0))
            }
        });
        per_couple.push(product(&windowed));
        traces.push(trace);
    }

    let combined = convex_combine(&per_couple, weights, alpha)?;
    Ok(LevyConstruction {
        shifted,
        offset,
        alpha,
        weights: weights.to_vec(),
        depth_bound,
        inf_shifted,
        sup_shifted,
        traces,
        per_couple,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_models::LocalModel;
    use crate::tree::StateSpace;

    fn credal_tree() -> ImpreciseTree {
        ImpreciseTree::iid(
            StateSpace::binary(),
            LocalModel::credal_vertices(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn couples_validate() {
        assert!(RationalCouple::from_parts(1, 2, 3, 4).is_ok());
        assert!(RationalCouple::from_parts(3, 4, 1, 2).is_err());
        assert!(RationalCouple::from_parts(0, 1, 1, 2).is_err());
        assert!(RationalCouple::from_parts(-1, 2, 1, 2).is_err());
        assert!(RationalCouple::from_parts(1, 0, 1, 2).is_err());
    }

    #[test]
    fn default_couples_span_the_range() {
        let couples = default_couples(1.0, 2.0, 8);
        assert!(!couples.is_empty());
        for c in &couples {
            assert!(c.a() > 1.0 - 1e-12 && c.b() < 2.0 + 1e-12);
            assert!(c.a() < c.b());
        }
    }

    #[test]
    fn normalization_examples() {
        let in_range = NMeasurableGamble::from_table(2, 1, vec![1.0, 2.0]).unwrap();
        let (_, offset) = normalize_gamble(&in_range, 2.0).unwrap();
        assert_eq!(offset, 0.0);

        let unit = NMeasurableGamble::from_table(2, 1, vec![0.0, 1.0]).unwrap();
        let (shifted, offset) = normalize_gamble(&unit, 2.0).unwrap();
        assert_eq!(offset, 1.0);
        assert_eq!(shifted.to_dense().unwrap(), vec![1.0, 2.0]);

        let zero = NMeasurableGamble::constant(2, 0.0).unwrap();
        let (_, offset) = normalize_gamble(&zero, 2.0).unwrap();
        assert_eq!(offset, 1.0);

        assert!(matches!(
            normalize_gamble(&zero, 1.0),
            Err(Error::BadAlpha(_))
        ));
    }

    #[test]
    fn uninformative_couple_gives_constant_one() {
        let tree = credal_tree();
        // Conditional values of this gamble stay in [1, 2]; a couple
        // below that range never triggers.
        let f = NMeasurableGamble::from_table(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let couple = RationalCouple::from_parts(1, 2, 3, 4).unwrap();
        let c = build_levy_supermartingale(&tree, &f, 2.0, &[couple], &[1.0], 4).unwrap();
        assert!(!c.traces()[0].is_informative());
        for d in 0..=4 {
            for s in Situation::all_at_depth(2, d) {
                assert_eq!(c.test_supermartingale().evaluate(&s).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn root_below_a_enters_at_the_root() {
        let tree = credal_tree();
        let f = NMeasurableGamble::from_table(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        // Root value is at most 2 = sup, so a = 4 triggers at once.
        let couple = RationalCouple::from_parts(4, 1, 5, 1).unwrap();
        let (shifted, _) = normalize_gamble(&f, 2.0).unwrap();
        let e = backward_recursion(&tree, &shifted).unwrap();
        let witness = e.extended_process();
        let trace = detect_cuts(&tree, &e, couple, &witness, 3).unwrap();
        assert_eq!(trace.pairs[0].entering, vec![Situation::root(2)]);
        // The witness never exceeds b = 5 ≥ sup: the window never closes.
        assert!(trace.pairs[0].closing.is_empty());
    }

    /// A hand-built depth-3 table whose conditional values dip below a
    /// on the 0-branch and recover above b after a 1.
    fn dipping_instance() -> (ImpreciseTree, NMeasurableGamble) {
        let tree = credal_tree();
        let f = NMeasurableGamble::from_table(
            2,
            3,
            vec![1.0, 1.0, 1.0, 2.0, 1.6, 1.8, 1.9, 2.0],
        )
        .unwrap();
        (tree, f)
    }

    #[test]
    fn detected_cuts_match_a_brute_force_scan() {
        let (tree, f) = dipping_instance();
        let (shifted, offset) = normalize_gamble(&f, 2.0).unwrap();
        assert_eq!(offset, 0.0);
        let e = backward_recursion(&tree, &shifted).unwrap();
        let witness = e.extended_process();
        let couple = RationalCouple::from_parts(3, 2, 7, 4).unwrap(); // (1.5, 1.75)
        let trace = detect_cuts(&tree, &e, couple, &witness, 3).unwrap();

        // Brute force: first situations with value < 1.5, scanning from
        // the root.
        let mut expected_entering = Vec::new();
        let mut stack = vec![Situation::root(2)];
        while let Some(s) = stack.pop() {
            if witness.evaluate(&s).unwrap() < 1.5 {
                expected_entering.push(s);
            } else if s.depth() < 3 {
                for x in (0..2).rev() {
                    stack.push(s.child(x).unwrap());
                }
            }
        }
        let mut got = trace.pairs[0].entering.clone();
        got.sort_by_key(|s| (s.depth(), s.rank()));
        expected_entering.sort_by_key(|s| (s.depth(), s.rank()));
        assert_eq!(got, expected_entering);
        assert!(trace.is_informative());
    }

    #[test]
    fn construction_certifies_with_bounded_multiplier() {
        let (tree, f) = dipping_instance();
        let couples = [
            RationalCouple::from_parts(3, 2, 7, 4).unwrap(),
            RationalCouple::from_parts(5, 4, 3, 2).unwrap(),
        ];
        let c =
            build_levy_supermartingale(&tree, &f, 2.0, &couples, &[0.5, 0.5], 4).unwrap();
        let cert = c.certify(&tree, 1e-9).unwrap();
        assert!(cert.certified(), "violation {}", cert.max_violation);
        assert!(cert.is_test);
        assert!(c.max_multiplier().unwrap() <= 2.0 + 1e-9);
    }

    #[test]
    fn growth_bounds_hold_on_all_prefixes() {
        let (tree, f) = dipping_instance();
        let couples = [RationalCouple::from_parts(3, 2, 7, 4).unwrap()];
        let c = build_levy_supermartingale(&tree, &f, 2.0, &couples, &[1.0], 4).unwrap();
        let mut saw_crossing = false;
        for d in 0..=4 {
            for prefix in Situation::all_at_depth(2, d) {
                let check = c.verify_growth(&prefix).unwrap();
                assert!(
                    check.holds(1e-9),
                    "prefix {prefix}: value {} < bound {}",
                    check.value,
                    check.lower_bound
                );
                saw_crossing |= check.crossings > 0;
            }
        }
        assert!(saw_crossing, "instance should realize at least one crossing");
    }

    #[test]
    fn growth_before_any_window_is_exactly_one() {
        let (tree, f) = dipping_instance();
        let couples = [RationalCouple::from_parts(3, 2, 7, 4).unwrap()];
        let c = build_levy_supermartingale(&tree, &f, 2.0, &couples, &[1.0], 4).unwrap();
        let check = c.verify_growth(&Situation::root(2)).unwrap();
        assert_eq!(check.crossings, 0);
        assert_eq!(check.lower_bound, 1.0);
        assert_eq!(check.value, 1.0);
    }

    #[test]
    fn witness_sits_below_a_on_entering_cuts_and_equals_f_at_the_horizon() {
        let (tree, f) = dipping_instance();
        let (shifted, _) = normalize_gamble(&f, 2.0).unwrap();
        let e = backward_recursion(&tree, &shifted).unwrap();
        let witness = e.extended_process();
        let couple = RationalCouple::from_parts(3, 2, 7, 4).unwrap();
        let trace = detect_cuts(&tree, &e, couple, &witness, 3).unwrap();
        for pair in &trace.pairs {
            for s in &pair.entering {
                assert!(witness.evaluate(s).unwrap() < couple.a());
            }
            for s in &pair.closing {
                assert!(witness.evaluate(s).unwrap() > couple.b());
            }
        }
        for leaf in Situation::all_at_depth(2, 3) {
            assert_eq!(
                witness.evaluate(&leaf).unwrap(),
                shifted.value_at(&leaf).unwrap()
            );
        }
    }

    #[test]
    fn prefix_beyond_bound_is_rejected() {
        let (tree, f) = dipping_instance();
        let couples = [RationalCouple::from_parts(3, 2, 7, 4).unwrap()];
        let c = build_levy_supermartingale(&tree, &f, 2.0, &couples, &[1.0], 3).unwrap();
        let deep = Situation::from_states(&[0, 0, 0, 0], 2).unwrap();
        assert!(matches!(
            c.verify_growth(&deep),
            Err(Error::PrefixBeyondDepthBound { .. })
        ));
    }
}
