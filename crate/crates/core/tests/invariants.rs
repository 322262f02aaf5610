//! Property tests for the order structure, the local models and the
//! recursion engine.

use imptree::{
    backward_recursion, cylinder_contains, lower_backward_recursion, relate, upper_expectation,
    ImpreciseTree, LocalGamble, LocalModel, NMeasurableGamble, Relation, Situation, StateSpace,
};
use proptest::prelude::*;

fn arb_situation(alphabet: usize, max_depth: usize) -> impl Strategy<Value = Situation> {
    prop::collection::vec(0..alphabet, 0..=max_depth)
        .prop_map(move |states| Situation::from_states(&states, alphabet).unwrap())
}

fn arb_mass(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, dim).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.iter().map(|v| v / total).collect()
    })
}

fn arb_model(dim: usize) -> impl Strategy<Value = LocalModel> {
    prop_oneof![
        Just(LocalModel::vacuous()),
        arb_mass(dim).prop_map(|m| LocalModel::precise(m).unwrap()),
        prop::collection::vec(arb_mass(dim), 1..4)
            .prop_map(|ms| LocalModel::credal_vertices(ms).unwrap()),
        arb_mass(dim).prop_map(|center| {
            let lower: Vec<f64> = center.iter().map(|c| (c - 0.1).max(0.0)).collect();
            let upper: Vec<f64> = center.iter().map(|c| (c + 0.1).min(1.0)).collect();
            LocalModel::probability_intervals(lower, upper).unwrap()
        }),
    ]
}

fn arb_gamble(dim: usize) -> impl Strategy<Value = LocalGamble> {
    prop::collection::vec(-10.0..10.0f64, dim).prop_map(|v| LocalGamble::new(v).unwrap())
}

proptest! {
    /// The prefix order is a partial order and `relate` reports it
    /// consistently in both argument orders.
    #[test]
    fn relate_is_a_partial_order(
        s in arb_situation(3, 4),
        t in arb_situation(3, 4),
        u in arb_situation(3, 4),
    ) {
        prop_assert_eq!(relate(&s, &s).unwrap(), Relation::Equal);

        let st = relate(&s, &t).unwrap();
        let ts = relate(&t, &s).unwrap();
        match st {
            Relation::Equal => prop_assert_eq!(ts, Relation::Equal),
            Relation::Precedes => prop_assert_eq!(ts, Relation::Follows),
            Relation::Follows => prop_assert_eq!(ts, Relation::Precedes),
            Relation::Incomparable => prop_assert_eq!(ts, Relation::Incomparable),
        }

        // Transitivity on {precedes ∪ equal}.
        let weakly = |r: Relation| matches!(r, Relation::Precedes | Relation::Equal);
        if weakly(relate(&s, &t).unwrap()) && weakly(relate(&t, &u).unwrap()) {
            prop_assert!(weakly(relate(&s, &u).unwrap()));
        }
    }

    /// Cylinder events nest: an ancestor's cylinder contains every
    /// descendant's.
    #[test]
    fn cylinders_nest(p in arb_situation(2, 6), cut_a in 0usize..6, cut_b in 0usize..6) {
        let d = p.depth();
        let (shallow, deep) = (cut_a.min(cut_b).min(d), cut_a.max(cut_b).min(d));
        let r = p.truncate(shallow);
        let s = p.truncate(deep);
        if cylinder_contains(&s, &p).unwrap() {
            prop_assert!(cylinder_contains(&r, &p).unwrap());
        }
    }

    /// Local conjugacy and the sandwich bounds hold for every model
    /// variant.
    #[test]
    fn local_models_are_sandwiched(model in arb_model(3), h in arb_gamble(3)) {
        let upper = model.upper(&h).unwrap();
        let lower = model.lower(&h).unwrap();
        prop_assert!(lower <= upper + 1e-12);
        prop_assert!(upper <= h.sup() + 1e-12);
        prop_assert!(lower >= h.inf() - 1e-12);
        // Conjugacy is exact by construction.
        prop_assert_eq!(lower, -model.upper(&h.negated()).unwrap());
    }

    /// Root values inherit the local coherence structure: bounds,
    /// monotonicity and subadditivity.
    #[test]
    fn recursion_root_is_coherent(
        model in arb_model(2),
        f in prop::collection::vec(-5.0..5.0f64, 8),
        g in prop::collection::vec(-5.0..5.0f64, 8),
    ) {
        let tree = ImpreciseTree::iid(StateSpace::binary(), model).unwrap();
        let fg = NMeasurableGamble::from_table(2, 3, f.clone()).unwrap();
        let gg = NMeasurableGamble::from_table(2, 3, g.clone()).unwrap();
        let ef = upper_expectation(&tree, &fg).unwrap();
        let eg = upper_expectation(&tree, &gg).unwrap();

        let sup = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inf = f.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(ef <= sup + 1e-9 && ef >= inf - 1e-9);

        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let esum =
            upper_expectation(&tree, &NMeasurableGamble::from_table(2, 3, sum).unwrap()).unwrap();
        prop_assert!(esum <= ef + eg + 1e-9);

        let dominated: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a.min(*b)).collect();
        let edom = upper_expectation(
            &tree,
            &NMeasurableGamble::from_table(2, 3, dominated).unwrap(),
        )
        .unwrap();
        prop_assert!(edom <= ef + 1e-9 && edom <= eg + 1e-9);
    }

    /// Conditional lower values are exactly the negated conditionals of
    /// the negated gamble, at every situation.
    #[test]
    fn recursion_conjugacy_is_exact(
        model in arb_model(2),
        f in prop::collection::vec(-5.0..5.0f64, 4),
    ) {
        let tree = ImpreciseTree::iid(StateSpace::binary(), model).unwrap();
        let gamble = NMeasurableGamble::from_table(2, 2, f).unwrap();
        let lower = lower_backward_recursion(&tree, &gamble).unwrap();
        let conjugate = backward_recursion(&tree, &gamble.negated()).unwrap();
        for d in 0..=2 {
            for s in Situation::all_at_depth(2, d) {
                prop_assert_eq!(
                    lower.conditional(&s).unwrap(),
                    -conjugate.conditional(&s).unwrap()
                );
            }
        }
    }
}

/// Exhaustive check (not sampled): on all situations to depth 4 over
/// alphabets of size 2 and 3, every complete cut built from a frontier
/// covers each deep situation exactly once.
#[test]
fn frontier_cuts_cover_exactly_once() {
    for alphabet in 2..=3usize {
        let space = StateSpace::new((0..alphabet).map(|i| i.to_string())).unwrap();
        // A mixed-depth complete cut: expand the first child to depth 2.
        let mut members = Vec::new();
        for x in 1..alphabet {
            members.push(Situation::from_states(&[x], alphabet).unwrap());
        }
        for x in 0..alphabet {
            members.push(Situation::from_states(&[0, x], alphabet).unwrap());
        }
        let cut = imptree::Cut::new(members);
        assert_eq!(
            imptree::validate_cut(&cut, &space, 4).unwrap(),
            imptree::CutStatus::Complete
        );
        for leaf in Situation::all_at_depth(alphabet, 4) {
            let covering = cut
                .situations()
                .iter()
                .filter(|m| m.is_prefix_of(&leaf))
                .count();
            assert_eq!(covering, 1);
        }
    }
}
