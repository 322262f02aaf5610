//! Exact conditional upper expectations of n-measurable gambles.
//!
//! An n-measurable gamble is constant on every depth-n cylinder, so it
//! is a finite table over the depth-n situations. Its conditional upper
//! expectation in any situation is computed by backward recursion: leaf
//! values are the table, and each interior value is the local model's
//! upper expectation of the child values. The root value is the global
//! upper expectation.
//!
//! Two engines share that local step:
//!
//! * [`backward_recursion`] materializes the full table of conditional
//!   values (the [`ExpectationProcess`]). Dense tables are used up to
//!   [`MAX_DENSE_CELLS`]; beyond that the call refuses rather than
//!   silently switching representation.
//! * [`upper_expectation`] computes the root value only. For structured
//!   gambles (hitting times, prefix indicators, and their affine or
//!   clamped images) on IID or Markov trees it collapses situations
//!   that provably share a conditional value, which scales to horizons
//!   far past any dense limit and returns bit-identical numbers where
//!   both engines apply.
//!
//! [`oracle_enumerate`] is an independent brute-force check: it
//! enumerates every assignment of a credal vertex to every interior
//! situation and takes the best induced precise-tree expectation.

use crate::error::{Error, Result};
use crate::local_models::{LocalGamble, LocalModel};
use crate::processes::{certify_supermartingale, RealProcess, SupermartingaleCertificate};
use crate::tree::{ImpreciseTree, Situation, SubtreeModelKey};
use std::collections::HashMap;
use std::sync::Arc;

/// Upper limit on the number of table cells a dense computation may
/// allocate.
pub const MAX_DENSE_CELLS: usize = 1 << 22;

/// Upper limit on the number of strategies [`oracle_enumerate`] may
/// visit.
pub const MAX_ORACLE_STRATEGIES: u64 = 1 << 21;

#[derive(Debug, Clone)]
enum Repr {
    /// Values indexed by depth-`horizon` situation rank.
    Dense(Arc<Vec<f64>>),
    /// First 1-based index of `target`, capped at the horizon.
    HittingTime { target: usize },
    /// 1 on situations extending `prefix`, 0 elsewhere.
    PrefixIndicator { prefix: Arc<Vec<usize>> },
    Affine {
        inner: Arc<Repr>,
        scale: f64,
        offset: f64,
    },
    Clamp {
        inner: Arc<Repr>,
        lo: f64,
        hi: f64,
    },
}

/// How a gamble restricts to the subtree of a situation.
///
/// Two situations of equal depth with equal classes carry identical
/// sub-tables, which is what lets the collapsed evaluator share their
/// conditional values. Every representation here produces at most one
/// non-constant class per depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubtreeClass {
    /// The gamble is constant on the whole subtree.
    Constant(f64),
    /// Not yet decided; the sub-table depends only on the depth.
    Pending,
}

/// A bounded real table over the depth-n situations, with structured
/// representations for the variable families the convergence drivers
/// iterate over.
#[derive(Debug, Clone)]
pub struct NMeasurableGamble {
    alphabet: usize,
    horizon: usize,
    repr: Repr,
}

impl NMeasurableGamble {
    /// Dense table, `values[rank(s)] = f(s)` over depth-`horizon`
    /// situations.
    pub fn from_table(alphabet: usize, horizon: usize, values: Vec<f64>) -> Result<Self> {
        let expected = checked_cells(alphabet, horizon)
            .filter(|&c| c <= MAX_DENSE_CELLS as u128)
            .ok_or(Error::DenseLimitExceeded {
                cells: u128::MAX,
                limit: MAX_DENSE_CELLS,
            })? as usize;
        if values.len() != expected {
            return Err(Error::BadTableSize {
                expected,
                got: values.len(),
                horizon,
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteTableEntry { index: i });
            }
        }
        Ok(Self {
            alphabet,
            horizon,
            repr: Repr::Dense(Arc::new(values)),
        })
    }

    /// Horizon-0 constant.
    pub fn constant(alphabet: usize, value: f64) -> Result<Self> {
        Self::from_table(alphabet, 0, vec![value])
    }

    /// `min{first 1-based hit of target, horizon}`.
    pub fn hitting_time(alphabet: usize, target: usize, horizon: usize) -> Result<Self> {
        if target >= alphabet {
            return Err(Error::StateOutOfRange {
                index: target,
                alphabet,
            });
        }
        Ok(Self {
            alphabet,
            horizon,
            repr: Repr::HittingTime { target },
        })
    }

    /// Indicator of the cylinder of `prefix`, read at depth `horizon`.
    pub fn prefix_indicator(alphabet: usize, prefix: &[usize], horizon: usize) -> Result<Self> {
        if prefix.len() > horizon {
            return Err(Error::DepthBeyondHorizon {
                depth: prefix.len(),
                horizon,
            });
        }
        for &s in prefix {
            if s >= alphabet {
                return Err(Error::StateOutOfRange {
                    index: s,
                    alphabet,
                });
            }
        }
        Ok(Self {
            alphabet,
            horizon,
            repr: Repr::PrefixIndicator {
                prefix: Arc::new(prefix.to_vec()),
            },
        })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `scale · f + offset`, applied eagerly to dense tables.
    pub fn affine(&self, scale: f64, offset: f64) -> Self {
        if scale == 1.0 && offset == 0.0 {
            return self.clone();
        }
        let repr = match &self.repr {
            Repr::Dense(values) => {
                Repr::Dense(Arc::new(values.iter().map(|v| scale * v + offset).collect()))
            }
            other => Repr::Affine {
                inner: Arc::new(other.clone()),
                scale,
                offset,
            },
        };
        Self {
            alphabet: self.alphabet,
            horizon: self.horizon,
            repr,
        }
    }

    pub fn negated(&self) -> Self {
        self.affine(-1.0, 0.0)
    }

    /// Two-sided clamp; `None` leaves a side open.
    pub fn clamp(&self, lo: Option<f64>, hi: Option<f64>) -> Result<Self> {
        let lo = lo.unwrap_or(f64::NEG_INFINITY);
        let hi = hi.unwrap_or(f64::INFINITY);
        if hi < lo {
            return Err(Error::BadCutPair { a: lo, b: hi });
        }
        let repr = match &self.repr {
            Repr::Dense(values) => {
                Repr::Dense(Arc::new(values.iter().map(|v| v.clamp(lo, hi)).collect()))
            }
            other => Repr::Clamp {
                inner: Arc::new(other.clone()),
                lo,
                hi,
            },
        };
        Ok(Self {
            alphabet: self.alphabet,
            horizon: self.horizon,
            repr,
        })
    }

    /// Value on the cylinder of `s`; `s` must be at least `horizon`
    /// deep (deeper prefixes are truncated).
    pub fn value_at(&self, s: &Situation) -> Result<f64> {
        if s.alphabet() != self.alphabet {
            return Err(Error::MismatchedStateSpaces {
                left: s.alphabet(),
                right: self.alphabet,
            });
        }
        if s.depth() < self.horizon {
            return Err(Error::PrefixTooShort {
                prefix: s.depth(),
                situation: self.horizon,
            });
        }
        Ok(repr_value(
            &self.repr,
            &s.states()[..self.horizon],
            self.horizon,
            self.alphabet,
        ))
    }

    /// Class of the gamble's restriction to the subtree of `s`
    /// (`s.depth() ≤ horizon`); `None` when the representation carries
    /// no structure to collapse on.
    pub fn subtree_class(&self, s: &Situation) -> Option<SubtreeClass> {
        debug_assert!(s.depth() <= self.horizon);
        repr_class(&self.repr, s.states(), self.horizon)
    }

    /// Whether [`upper_expectation`] can evaluate this gamble without a
    /// dense table.
    pub fn supports_collapse(&self) -> bool {
        fn walk(repr: &Repr) -> bool {
            match repr {
                Repr::Dense(_) => false,
                Repr::HittingTime { .. } | Repr::PrefixIndicator { .. } => true,
                Repr::Affine { inner, .. } | Repr::Clamp { inner, .. } => walk(inner),
            }
        }
        walk(&self.repr)
    }

    /// Materializes the dense table, refusing above [`MAX_DENSE_CELLS`].
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let cells = checked_cells(self.alphabet, self.horizon).ok_or(Error::DenseLimitExceeded {
            cells: u128::MAX,
            limit: MAX_DENSE_CELLS,
        })?;
        if cells > MAX_DENSE_CELLS as u128 {
            return Err(Error::DenseLimitExceeded {
                cells,
                limit: MAX_DENSE_CELLS,
            });
        }
        if let Repr::Dense(values) = &self.repr {
            return Ok(values.as_ref().clone());
        }
        Ok(Situation::all_at_depth(self.alphabet, self.horizon)
            .iter()
            .map(|s| repr_value(&self.repr, s.states(), self.horizon, self.alphabet))
            .collect())
    }

    /// Pointwise minimum after lifting both tables to the larger
    /// horizon. Dense-only.
    pub fn pointwise_min(&self, other: &Self) -> Result<Self> {
        if self.alphabet != other.alphabet {
            return Err(Error::MismatchedStateSpaces {
                left: self.alphabet,
                right: other.alphabet,
            });
        }
        let horizon = self.horizon.max(other.horizon);
        let a = self.lift_to_horizon(horizon)?.to_dense()?;
        let b = other.lift_to_horizon(horizon)?.to_dense()?;
        let values = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        Self::from_table(self.alphabet, horizon, values)
    }

    /// Reads the same variable at a deeper horizon (each entry repeats
    /// over the refined cylinders). Dense-only.
    pub fn lift_to_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon < self.horizon {
            return Err(Error::DepthBeyondHorizon {
                depth: self.horizon,
                horizon,
            });
        }
        if horizon == self.horizon {
            return Ok(self.clone());
        }
        let base = self.to_dense()?;
        let repeat = checked_cells(self.alphabet, horizon - self.horizon)
            .filter(|&c| c.saturating_mul(base.len() as u128) <= MAX_DENSE_CELLS as u128)
            .ok_or(Error::DenseLimitExceeded {
                cells: u128::MAX,
                limit: MAX_DENSE_CELLS,
            })? as usize;
        let mut values = Vec::with_capacity(base.len() * repeat);
        for v in base {
            values.extend(std::iter::repeat_n(v, repeat));
        }
        Self::from_table(self.alphabet, horizon, values)
    }
}

fn checked_cells(alphabet: usize, horizon: usize) -> Option<u128> {
    (alphabet as u128).checked_pow(u32::try_from(horizon).ok()?)
}

fn repr_value(repr: &Repr, states: &[usize], horizon: usize, alphabet: usize) -> f64 {
    match repr {
        Repr::Dense(values) => {
            let rank = states.iter().fold(0usize, |acc, &s| acc * alphabet + s);
            values[rank]
        }
        Repr::HittingTime { target } => states
            .iter()
            .position(|s| s == target)
            .map(|i| (i + 1) as f64)
            .unwrap_or(horizon as f64),
        Repr::PrefixIndicator { prefix } => {
            if states.len() >= prefix.len() && states[..prefix.len()] == prefix[..] {
                1.0
            } else {
                0.0
            }
        }
        Repr::Affine {
            inner,
            scale,
            offset,
        } => scale * repr_value(inner, states, horizon, alphabet) + offset,
        Repr::Clamp { inner, lo, hi } => {
            repr_value(inner, states, horizon, alphabet).clamp(*lo, *hi)
        }
    }
}

fn repr_class(repr: &Repr, states: &[usize], horizon: usize) -> Option<SubtreeClass> {
    match repr {
        Repr::Dense(_) => None,
        Repr::HittingTime { target } => Some(match states.iter().position(|s| s == target) {
            Some(i) => SubtreeClass::Constant((i + 1) as f64),
            None if states.len() == horizon => SubtreeClass::Constant(horizon as f64),
            None => SubtreeClass::Pending,
        }),
        Repr::PrefixIndicator { prefix } => Some(if states.len() >= prefix.len() {
            SubtreeClass::Constant(if states[..prefix.len()] == prefix[..] {
                1.0
            } else {
                0.0
            })
        } else if prefix[..states.len()] == states[..] {
            SubtreeClass::Pending
        } else {
            SubtreeClass::Constant(0.0)
        }),
        Repr::Affine {
            inner,
            scale,
            offset,
        } => Some(match repr_class(inner, states, horizon)? {
            SubtreeClass::Constant(c) => SubtreeClass::Constant(scale * c + offset),
            SubtreeClass::Pending => SubtreeClass::Pending,
        }),
        Repr::Clamp { inner, lo, hi } => Some(match repr_class(inner, states, horizon)? {
            SubtreeClass::Constant(c) => SubtreeClass::Constant(c.clamp(*lo, *hi)),
            SubtreeClass::Pending => SubtreeClass::Pending,
        }),
    }
}

/// The table of conditional upper expectations of a gamble in every
/// situation up to its horizon.
///
/// Level `horizon` is the gamble itself; each interior value is the
/// local model's upper expectation of its children's values.
#[derive(Debug, Clone)]
pub struct ExpectationProcess {
    gamble: NMeasurableGamble,
    levels: Arc<Vec<Vec<f64>>>,
}

impl ExpectationProcess {
    pub fn gamble(&self) -> &NMeasurableGamble {
        &self.gamble
    }

    pub fn horizon(&self) -> usize {
        self.gamble.horizon()
    }

    /// The global upper expectation `Ē(f)`: the value at `□`.
    pub fn root_value(&self) -> f64 {
        self.levels[0][0]
    }

    /// Conditional value `Ē(f | s)` for `s` up to the horizon.
    pub fn conditional(&self, s: &Situation) -> Result<f64> {
        if s.alphabet() != self.gamble.alphabet() {
            return Err(Error::MismatchedStateSpaces {
                left: s.alphabet(),
                right: self.gamble.alphabet(),
            });
        }
        if s.depth() > self.horizon() {
            return Err(Error::DepthBeyondHorizon {
                depth: s.depth(),
                horizon: self.horizon(),
            });
        }
        Ok(self.levels[s.depth()][s.rank()])
    }

    /// The conditional values as a real process, extended constantly
    /// below the horizon (a situation deeper than the horizon takes the
    /// value of its depth-horizon ancestor).
    pub fn extended_process(&self) -> RealProcess {
        let levels = Arc::clone(&self.levels);
        let horizon = self.horizon();
        let mut bound = f64::INFINITY;
        for level in levels.iter() {
            for &v in level {
                bound = bound.min(v);
            }
        }
        RealProcess::with_lower_bound(
            move |s| {
                let d = s.depth().min(horizon);
                Ok(levels[d][s.truncate(d).rank()])
            },
            bound,
        )
    }
}

/// Computes the full conditional-value table of `f` under `tree` by
/// backward recursion over dense levels.
pub fn backward_recursion(tree: &ImpreciseTree, f: &NMeasurableGamble) -> Result<ExpectationProcess> {
    let alphabet = tree.alphabet();
    if alphabet != f.alphabet() {
        return Err(Error::MismatchedStateSpaces {
            left: f.alphabet(),
            right: alphabet,
        });
    }
    let n = f.horizon();
    let total: u128 = (0..=n)
        .map(|d| checked_cells(alphabet, d))
        .try_fold(0u128, |acc, c| c.map(|c| acc + c))
        .ok_or(Error::DenseLimitExceeded {
            cells: u128::MAX,
            limit: MAX_DENSE_CELLS,
        })?;
    if total > MAX_DENSE_CELLS as u128 {
        return Err(Error::DenseLimitExceeded {
            cells: total,
            limit: MAX_DENSE_CELLS,
        });
    }

    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    levels.push(f.to_dense()?);
    // levels is built from the horizon upward, then reversed.
    for depth in (0..n).rev() {
        let below = levels.last().expect("pushed above");
        let count = alphabet.pow(depth as u32);
        let mut level = Vec::with_capacity(count);
        for rank in 0..count {
            let s = Situation::from_rank(rank, depth, alphabet);
            let children =
                LocalGamble::new(below[rank * alphabet..(rank + 1) * alphabet].to_vec())?;
            level.push(tree.resolve_model(&s)?.upper(&children)?);
        }
        levels.push(level);
    }
    levels.reverse();
    Ok(ExpectationProcess {
        gamble: f.clone(),
        levels: Arc::new(levels),
    })
}

/// Conditional lower expectations via conjugacy: the recursion on `−f`,
/// negated. Exact: every table entry is the negation of the conjugate
/// entry.
pub fn lower_backward_recursion(
    tree: &ImpreciseTree,
    f: &NMeasurableGamble,
) -> Result<ExpectationProcess> {
    let conjugate = backward_recursion(tree, &f.negated())?;
    let levels: Vec<Vec<f64>> = conjugate
        .levels
        .iter()
        .map(|level| level.iter().map(|v| -v).collect())
        .collect();
    Ok(ExpectationProcess {
        gamble: f.clone(),
        levels: Arc::new(levels),
    })
}

/// The global upper expectation `Ē(f)`.
///
/// Prefers the collapsed evaluator when the gamble and tree support it
/// (same local step, shared conditional values, any horizon); falls
/// back to dense backward recursion otherwise.
pub fn upper_expectation(tree: &ImpreciseTree, f: &NMeasurableGamble) -> Result<f64> {
    if f.supports_collapse() && tree.subtree_model_key(&tree.root()).is_some() {
        return collapsed_root(tree, f);
    }
    Ok(backward_recursion(tree, f)?.root_value())
}

/// The global lower expectation `E(f) = −Ē(−f)`.
pub fn lower_expectation(tree: &ImpreciseTree, f: &NMeasurableGamble) -> Result<f64> {
    Ok(-upper_expectation(tree, &f.negated())?)
}

/// Root value by collapsing situations with equal depth, subtree class
/// and subtree model key. Exact for the structured representations:
/// each such group provably shares its conditional value, and at most
/// one non-constant class exists per depth.
fn collapsed_root(tree: &ImpreciseTree, f: &NMeasurableGamble) -> Result<f64> {
    if tree.alphabet() != f.alphabet() {
        return Err(Error::MismatchedStateSpaces {
            left: f.alphabet(),
            right: tree.alphabet(),
        });
    }

    fn eval(
        tree: &ImpreciseTree,
        f: &NMeasurableGamble,
        s: &Situation,
        memo: &mut HashMap<(usize, SubtreeModelKey), f64>,
    ) -> Result<f64> {
        match f.subtree_class(s) {
            Some(SubtreeClass::Constant(c)) => return Ok(c),
            Some(SubtreeClass::Pending) => {}
            None => {
                return Err(Error::DenseLimitExceeded {
                    cells: u128::MAX,
                    limit: MAX_DENSE_CELLS,
                })
            }
        }
        if s.depth() == f.horizon() {
            return f.value_at(s);
        }
        let key = (
            s.depth(),
            tree.subtree_model_key(s).ok_or(Error::DenseLimitExceeded {
                cells: u128::MAX,
                limit: MAX_DENSE_CELLS,
            })?,
        );
        if let Some(&v) = memo.get(&key) {
            return Ok(v);
        }
        let mut children = Vec::with_capacity(s.alphabet());
        for x in 0..s.alphabet() {
            children.push(eval(tree, f, &s.child(x)?, memo)?);
        }
        let value = tree.resolve_model(s)?.upper(&LocalGamble::new(children)?)?;
        memo.insert(key, value);
        Ok(value)
    }

    let mut memo = HashMap::new();
    eval(tree, f, &tree.root(), &mut memo)
}

/// Brute-force oracle: enumerates every assignment of a vertex to every
/// interior situation, computes each induced precise-tree expectation
/// by full path enumeration, and returns the maximum.
///
/// Only precise and credal-vertex models are supported, and the
/// strategy count is guarded by [`MAX_ORACLE_STRATEGIES`].
pub fn oracle_enumerate(tree: &ImpreciseTree, f: &NMeasurableGamble) -> Result<f64> {
    let alphabet = tree.alphabet();
    if alphabet != f.alphabet() {
        return Err(Error::MismatchedStateSpaces {
            left: f.alphabet(),
            right: alphabet,
        });
    }
    let n = f.horizon();
    let table = f.to_dense()?;

    let mut interior: Vec<Situation> = Vec::new();
    for d in 0..n {
        interior.extend(Situation::all_at_depth(alphabet, d));
    }
    let vertex_sets: Vec<Vec<Vec<f64>>> = interior
        .iter()
        .map(|s| match tree.resolve_model(s)? {
            LocalModel::Precise(m) => Ok(vec![m.clone()]),
            LocalModel::CredalVertices(ms) => Ok(ms.clone()),
            _ => Err(Error::OracleUnsupportedModel(s.clone())),
        })
        .collect::<Result<_>>()?;

    let strategies = vertex_sets
        .iter()
        .try_fold(1u128, |acc, vs| acc.checked_mul(vs.len() as u128))
        .ok_or(Error::OracleLimitExceeded {
            strategies: u128::MAX,
            limit: MAX_ORACLE_STRATEGIES,
        })?;
    if strategies > MAX_ORACLE_STRATEGIES as u128 {
        return Err(Error::OracleLimitExceeded {
            strategies,
            limit: MAX_ORACLE_STRATEGIES,
        });
    }

    // Offset of each depth level inside `interior`.
    let mut offsets = vec![0usize; n + 1];
    for d in 0..n {
        offsets[d + 1] = offsets[d] + alphabet.pow(d as u32);
    }
    let index_of = |depth: usize, rank: usize| offsets[depth] + rank;

    let leaves = Situation::all_at_depth(alphabet, n);
    let mut choice = vec![0usize; interior.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut total = 0.0;
        for (leaf_rank, leaf) in leaves.iter().enumerate() {
            let mut prob = 1.0;
            let mut rank = 0usize;
            for (depth, &x) in leaf.states().iter().enumerate() {
                let idx = index_of(depth, rank);
                prob *= vertex_sets[idx][choice[idx]][x];
                rank = rank * alphabet + x;
            }
            total += prob * table[leaf_rank];
        }
        best = best.max(total);

        // Advance the mixed-radix strategy counter.
        let mut pos = 0usize;
        loop {
            if pos == choice.len() {
                return Ok(best);
            }
            choice[pos] += 1;
            if choice[pos] < vertex_sets[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Certifies that the expectation process, extended constantly below
/// its horizon, is a supermartingale: `Q̄(ΔS(s) | s)` is 0 at interior
/// situations and 0 on the constant continuation.
pub fn certify_expectation_process(
    e: &ExpectationProcess,
    tree: &ImpreciseTree,
) -> Result<SupermartingaleCertificate> {
    let process = e.extended_process();
    certify_supermartingale(&process, tree, e.horizon() + 1, crate::processes::DEFAULT_CERT_TOL)
}
