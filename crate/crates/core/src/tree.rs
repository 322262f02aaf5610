//! Situations, paths, cuts and the imprecise probability tree.
//!
//! A *situation* is a finite string of state values: a node of the event
//! tree over a fixed finite alphabet. The empty string is the initial
//! situation, written `□`. Infinite paths are never materialized; every
//! path-level notion in this crate works on finite prefixes with an
//! explicit truncation depth.
//!
//! An [`ImpreciseTree`] attaches a [`LocalModel`] to every situation,
//! either uniformly (IID), keyed on the last state (Markov) or through an
//! explicit finite map with an optional default.

use crate::error::{Error, Result};
use crate::local_models::LocalModel;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// A finite, ordered alphabet of state labels.
///
/// States are addressed by index everywhere in the crate; labels only
/// matter at the user-facing boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    /// Builds a state space from distinct labels. Order is fixed after
    /// construction.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyStateSpace);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateStateLabel(l.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// The binary alphabet `{"0", "1"}`.
    pub fn binary() -> Self {
        Self::new(["0", "1"]).expect("binary labels are distinct")
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A node of the event tree: a finite string of state indices.
///
/// Carries the alphabet size so that cross-space misuse is detectable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Situation {
    states: Vec<usize>,
    alphabet: usize,
}

/// A situation used as a finite surrogate for a path truncated at some
/// depth.
pub type PathPrefix = Situation;

impl Situation {
    /// The initial situation `□`.
    pub fn root(alphabet: usize) -> Self {
        Self {
            states: Vec::new(),
            alphabet,
        }
    }

    /// Builds a situation from explicit state indices.
    pub fn from_states(states: &[usize], alphabet: usize) -> Result<Self> {
        for &s in states {
            if s >= alphabet {
                return Err(Error::StateOutOfRange {
                    index: s,
                    alphabet,
                });
            }
        }
        Ok(Self {
            states: states.to_vec(),
            alphabet,
        })
    }

    pub fn depth(&self) -> usize {
        self.states.len()
    }

    pub fn is_root(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn last(&self) -> Option<usize> {
        self.states.last().copied()
    }

    /// The child reached by appending one state.
    pub fn child(&self, state: usize) -> Result<Self> {
        if state >= self.alphabet {
            return Err(Error::StateOutOfRange {
                index: state,
                alphabet: self.alphabet,
            });
        }
        let mut states = Vec::with_capacity(self.states.len() + 1);
        states.extend_from_slice(&self.states);
        states.push(state);
        Ok(Self {
            states,
            alphabet: self.alphabet,
        })
    }

    pub fn parent(&self) -> Option<Self> {
        if self.states.is_empty() {
            return None;
        }
        Some(Self {
            states: self.states[..self.states.len() - 1].to_vec(),
            alphabet: self.alphabet,
        })
    }

    /// The ancestor at the given depth (self if `depth == self.depth()`).
    pub fn truncate(&self, depth: usize) -> Self {
        assert!(depth <= self.depth(), "cannot truncate below the root");
        Self {
            states: self.states[..depth].to_vec(),
            alphabet: self.alphabet,
        }
    }

    /// True when `self` is a prefix of `other` (including equality).
    pub fn is_prefix_of(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.states.len() <= other.states.len()
            && other.states[..self.states.len()] == self.states[..]
    }

    /// Rank of this situation among all situations of the same depth, in
    /// lexicographic order with the first state most significant.
    pub fn rank(&self) -> usize {
        self.states
            .iter()
            .fold(0usize, |acc, &s| acc * self.alphabet + s)
    }

    /// Inverse of [`Situation::rank`].
    pub fn from_rank(mut rank: usize, depth: usize, alphabet: usize) -> Self {
        let mut states = vec![0usize; depth];
        for slot in states.iter_mut().rev() {
            *slot = rank % alphabet;
            rank /= alphabet;
        }
        Self { states, alphabet }
    }

    /// All situations of exactly the given depth, in rank order.
    pub fn all_at_depth(alphabet: usize, depth: usize) -> Vec<Self> {
        let count = alphabet.pow(depth as u32);
        (0..count)
            .map(|r| Self::from_rank(r, depth, alphabet))
            .collect()
    }
}

impl fmt::Display for Situation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.states.is_empty() {
            return write!(f, "□");
        }
        let parts: Vec<String> = self.states.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Order relation between two situations of the same tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `s` is a proper prefix of `t`: every path through `t` goes through `s`.
    Precedes,
    /// `t` is a proper prefix of `s`.
    Follows,
    Equal,
    /// Neither precedes the other.
    Incomparable,
}

/// Compares two situations in the prefix order.
pub fn relate(s: &Situation, t: &Situation) -> Result<Relation> {
    if s.alphabet != t.alphabet {
        return Err(Error::MismatchedStateSpaces {
            left: s.alphabet,
            right: t.alphabet,
        });
    }
    if s.states == t.states {
        Ok(Relation::Equal)
    } else if s.is_prefix_of(t) {
        Ok(Relation::Precedes)
    } else if t.is_prefix_of(s) {
        Ok(Relation::Follows)
    } else {
        Ok(Relation::Incomparable)
    }
}

/// Decides membership of the cylinder event of `s` on a finite path
/// prefix. Errors when the prefix is too short to decide.
pub fn cylinder_contains(s: &Situation, p: &PathPrefix) -> Result<bool> {
    if s.alphabet != p.alphabet {
        return Err(Error::MismatchedStateSpaces {
            left: s.alphabet,
            right: p.alphabet,
        });
    }
    if p.depth() < s.depth() {
        return Err(Error::PrefixTooShort {
            prefix: p.depth(),
            situation: s.depth(),
        });
    }
    Ok(s.is_prefix_of(p))
}

/// A set of situations intended to be pairwise incomparable.
///
/// Incomparability is not enforced at construction; [`validate_cut`]
/// reports it, so invalid cuts are representable and detectable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    situations: Vec<Situation>,
}

impl Cut {
    pub fn new(situations: Vec<Situation>) -> Self {
        Self { situations }
    }

    pub fn situations(&self) -> &[Situation] {
        &self.situations
    }

    pub fn is_empty(&self) -> bool {
        self.situations.is_empty()
    }

    /// Some member is a prefix of `s` (inclusive).
    pub fn has_ancestor_of(&self, s: &Situation) -> bool {
        self.situations.iter().any(|m| m.is_prefix_of(s))
    }

    /// Some member strictly extends `s`.
    pub fn has_descendant_of(&self, s: &Situation) -> bool {
        self.situations
            .iter()
            .any(|m| s.is_prefix_of(m) && m.depth() > s.depth())
    }
}

/// Classification of a cut relative to a finite truncation depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutStatus {
    /// Every depth-`depth` situation has an ancestor-or-self in the cut.
    Complete,
    Partial,
    /// Two members are comparable.
    Invalid,
}

/// Checks a cut for pairwise incomparability, then for completeness at
/// the given depth.
pub fn validate_cut(cut: &Cut, space: &StateSpace, depth: usize) -> Result<CutStatus> {
    let members = cut.situations();
    for (i, s) in members.iter().enumerate() {
        for t in &members[i + 1..] {
            if relate(s, t)? != Relation::Incomparable {
                return Ok(CutStatus::Invalid);
            }
        }
    }
    let alphabet = space.size();
    let complete = Situation::all_at_depth(alphabet, depth)
        .iter()
        .all(|t| cut.has_ancestor_of(t));
    Ok(if complete {
        CutStatus::Complete
    } else {
        CutStatus::Partial
    })
}

/// Rule assigning a local model to every situation.
#[derive(Clone)]
pub enum ModelMap {
    /// One model everywhere.
    Iid(LocalModel),
    /// Model keyed on the last state; the root gets its own model.
    Markov {
        root: LocalModel,
        by_last_state: Vec<LocalModel>,
    },
    /// Finite explicit assignment with an optional default.
    Explicit {
        map: Arc<HashMap<Situation, LocalModel>>,
        default: Option<LocalModel>,
    },
}

impl fmt::Debug for ModelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelMap::Iid(_) => write!(f, "ModelMap::Iid"),
            ModelMap::Markov { .. } => write!(f, "ModelMap::Markov"),
            ModelMap::Explicit { map, default } => write!(
                f,
                "ModelMap::Explicit({} entries, default: {})",
                map.len(),
                default.is_some()
            ),
        }
    }
}

/// Key identifying which situations share a local model *and* share the
/// model assignment of their whole subtree. Used by the collapsed
/// recursion in `global_expectation`; explicit maps have no such key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubtreeModelKey {
    Uniform,
    Root,
    LastState(usize),
}

/// An imprecise probability tree: a state space plus a local model for
/// every situation.
#[derive(Debug, Clone)]
pub struct ImpreciseTree {
    space: StateSpace,
    map: ModelMap,
}

impl ImpreciseTree {
    pub fn new(space: StateSpace, map: ModelMap) -> Result<Self> {
        let check = |m: &LocalModel| -> Result<()> {
            if let Some(d) = m.dimension() {
                if d != space.size() {
                    return Err(Error::ModelDimensionMismatch {
                        model: d,
                        space: space.size(),
                    });
                }
            }
            Ok(())
        };
        match &map {
            ModelMap::Iid(m) => check(m)?,
            ModelMap::Markov {
                root,
                by_last_state,
            } => {
                check(root)?;
                if by_last_state.len() != space.size() {
                    return Err(Error::ModelDimensionMismatch {
                        model: by_last_state.len(),
                        space: space.size(),
                    });
                }
                for m in by_last_state {
                    check(m)?;
                }
            }
            ModelMap::Explicit { map, default } => {
                for m in map.values() {
                    check(m)?;
                }
                if let Some(m) = default {
                    check(m)?;
                }
            }
        }
        Ok(Self { space, map })
    }

    /// IID tree: the same model in every situation.
    pub fn iid(space: StateSpace, model: LocalModel) -> Result<Self> {
        Self::new(space, ModelMap::Iid(model))
    }

    /// Markov tree keyed on the last observed state.
    pub fn markov(space: StateSpace, root: LocalModel, by_last_state: Vec<LocalModel>) -> Result<Self> {
        Self::new(
            space,
            ModelMap::Markov {
                root,
                by_last_state,
            },
        )
    }

    /// Explicit finite assignment, with `default` filling the gaps.
    pub fn explicit(
        space: StateSpace,
        entries: HashMap<Situation, LocalModel>,
        default: Option<LocalModel>,
    ) -> Result<Self> {
        Self::new(
            space,
            ModelMap::Explicit {
                map: Arc::new(entries),
                default,
            },
        )
    }

    pub fn state_space(&self) -> &StateSpace {
        &self.space
    }

    pub fn alphabet(&self) -> usize {
        self.space.size()
    }

    pub fn root(&self) -> Situation {
        Situation::root(self.alphabet())
    }

    /// Resolves the local model attached to a situation.
    pub fn resolve_model(&self, s: &Situation) -> Result<&LocalModel> {
        if s.alphabet() != self.alphabet() {
            return Err(Error::MismatchedStateSpaces {
                left: s.alphabet(),
                right: self.alphabet(),
            });
        }
        match &self.map {
            ModelMap::Iid(m) => Ok(m),
            ModelMap::Markov {
                root,
                by_last_state,
            } => Ok(match s.last() {
                None => root,
                Some(x) => &by_last_state[x],
            }),
            ModelMap::Explicit { map, default } => map
                .get(s)
                .or(default.as_ref())
                .ok_or_else(|| Error::MissingLocalModel(s.clone())),
        }
    }

    /// Subtree model key when the assignment is position-independent
    /// enough to collapse on, `None` for explicit maps.
    pub fn subtree_model_key(&self, s: &Situation) -> Option<SubtreeModelKey> {
        match &self.map {
            ModelMap::Iid(_) => Some(SubtreeModelKey::Uniform),
            ModelMap::Markov { .. } => Some(match s.last() {
                None => SubtreeModelKey::Root,
                Some(x) => SubtreeModelKey::LastState(x),
            }),
            ModelMap::Explicit { .. } => None,
        }
    }
}
