//! Problem-description parsing and validation.
//!
//! A problem is a JSON document with four sections: the state space,
//! the tree model, the variable, and the task. Parsing is strict
//! (unknown fields and unknown kinds are rejected with the valid
//! alternatives named) and validation errors name the offending field.

use anyhow::{anyhow, bail, Context, Result};
use imptree::{
    ImpreciseTree, LocalModel, Monotonicity, NMeasurableGamble, RationalCouple, Situation,
    StateSpace, VariableFamily,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub state_space: Vec<String>,
    pub model: ModelSpec,
    pub variable: VariableSpec,
    pub task: TaskSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Iid {
        local: LocalModelSpec,
    },
    Markov {
        root: LocalModelSpec,
        by_state: BTreeMap<String, LocalModelSpec>,
    },
    Explicit {
        entries: Vec<ExplicitEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<LocalModelSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExplicitEntry {
    pub situation: Vec<String>,
    pub local: LocalModelSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocalModelSpec {
    Vacuous,
    Precise { mass: Vec<f64> },
    Vertices { masses: Vec<Vec<f64>> },
    Intervals { lower: Vec<f64>, upper: Vec<f64> },
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VariableSpec {
    /// A dense table over depth-`horizon` situations, rank order.
    Table {
        horizon: usize,
        values: Vec<f64>,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    /// First 1-based time the target state appears; family member n is
    /// capped at n. `horizon` pins the fixed-gamble member for
    /// single-evaluation tasks.
    HittingTime {
        target: String,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    /// Indicator of the cylinder of a prefix.
    PrefixIndicator {
        prefix: Vec<String>,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Expectation,
    LowerExpectation,
    UpwardLimit,
    Fatou,
    LowerCut,
    TwoSided,
    Counterexample,
    LevyCheck,
    Certify,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Expectation => "expectation",
            TaskKind::LowerExpectation => "lower_expectation",
            TaskKind::UpwardLimit => "upward_limit",
            TaskKind::Fatou => "fatou",
            TaskKind::LowerCut => "lower_cut",
            TaskKind::TwoSided => "two_sided",
            TaskKind::Counterexample => "counterexample",
            TaskKind::LevyCheck => "levy_check",
            TaskKind::Certify => "certify",
        }
    }
}

fn default_tol() -> f64 {
    1e-9
}

fn default_budget() -> usize {
    200
}

fn default_alpha() -> f64 {
    2.0
}

fn default_levy_depth() -> usize {
    5
}

fn default_n_max() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Depth bound for levy_check.
    #[serde(default = "default_levy_depth")]
    pub depth: usize,
    /// Step count for the counterexample task.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couples: Option<Vec<CoupleSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// A rational couple as `[numerator, denominator]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoupleSpec {
    pub a: [i64; 2],
    pub b: [i64; 2],
}

/// A parsed and validated problem, with the core objects materialized.
#[derive(Debug)]
pub struct CompiledProblem {
    pub spec: ProblemSpec,
    pub space: StateSpace,
    pub tree: ImpreciseTree,
}

/// Parses the JSON and validates it into a [`CompiledProblem`]. Syntax
/// errors carry line/column; schema errors name the field; invariant
/// violations name the constraint.
pub fn parse_spec(text: &str) -> Result<CompiledProblem> {
    let spec: ProblemSpec = serde_json::from_str(text)
        .map_err(|e| anyhow!("{} (line {}, column {})", e, e.line(), e.column()))?;
    compile(spec)
}

fn build_local(spec: &LocalModelSpec, field: &str) -> Result<LocalModel> {
    match spec {
        LocalModelSpec::Vacuous => Ok(LocalModel::vacuous()),
        LocalModelSpec::Precise { mass } => {
            LocalModel::precise(mass.clone()).with_context(|| format!("{field}.mass"))
        }
        LocalModelSpec::Vertices { masses } => {
            LocalModel::credal_vertices(masses.clone()).with_context(|| format!("{field}.masses"))
        }
        LocalModelSpec::Intervals { lower, upper } => {
            LocalModel::probability_intervals(lower.clone(), upper.clone())
                .with_context(|| format!("{field}.lower/upper"))
        }
    }
}

fn check_dimension(model: &LocalModel, dim: usize, field: &str) -> Result<()> {
    if let Some(d) = model.dimension() {
        if d != dim {
            bail!("{field}: model has dimension {d} but the state space has {dim} states");
        }
    }
    Ok(())
}

pub fn compile(spec: ProblemSpec) -> Result<CompiledProblem> {
    let space = StateSpace::new(spec.state_space.clone()).context("state_space")?;
    let dim = space.size();

    let tree = match &spec.model {
        ModelSpec::Iid { local } => {
            let model = build_local(local, "model.local")?;
            check_dimension(&model, dim, "model.local")?;
            ImpreciseTree::iid(space.clone(), model).context("model")?
        }
        ModelSpec::Markov { root, by_state } => {
            let root_model = build_local(root, "model.root")?;
            check_dimension(&root_model, dim, "model.root")?;
            let mut by_last = Vec::with_capacity(dim);
            for i in 0..dim {
                let label = space.label(i);
                let entry = by_state.get(label).ok_or_else(|| {
                    anyhow!("model.by_state: missing entry for state `{label}`")
                })?;
                let model = build_local(entry, &format!("model.by_state.{label}"))?;
                check_dimension(&model, dim, &format!("model.by_state.{label}"))?;
                by_last.push(model);
            }
            for label in by_state.keys() {
                if space.index_of(label).is_none() {
                    bail!("model.by_state: unknown state `{label}`");
                }
            }
            ImpreciseTree::markov(space.clone(), root_model, by_last).context("model")?
        }
        ModelSpec::Explicit { entries, default } => {
            let mut map = HashMap::new();
            for (i, entry) in entries.iter().enumerate() {
                let states = resolve_labels(&space, &entry.situation)
                    .with_context(|| format!("model.entries[{i}].situation"))?;
                let situation = Situation::from_states(&states, dim)?;
                let model = build_local(&entry.local, &format!("model.entries[{i}].local"))?;
                check_dimension(&model, dim, &format!("model.entries[{i}].local"))?;
                map.insert(situation, model);
            }
            let default_model = default
                .as_ref()
                .map(|d| build_local(d, "model.default"))
                .transpose()?;
            if let Some(m) = &default_model {
                check_dimension(m, dim, "model.default")?;
            }
            ImpreciseTree::explicit(space.clone(), map, default_model).context("model")?
        }
    };

    validate_variable(&spec.variable, &space)?;
    validate_task(&spec)?;

    Ok(CompiledProblem { spec, space, tree })
}

fn resolve_labels(space: &StateSpace, labels: &[String]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            space
                .index_of(l)
                .ok_or_else(|| anyhow!("unknown state label `{l}`"))
        })
        .collect()
}

fn validate_variable(variable: &VariableSpec, space: &StateSpace) -> Result<()> {
    let dim = space.size();
    match variable {
        VariableSpec::Table {
            horizon,
            values,
            scale,
            offset,
        } => {
            let expected = dim
                .checked_pow(u32::try_from(*horizon).unwrap_or(u32::MAX))
                .ok_or_else(|| anyhow!("variable.horizon: {horizon} is too large"))?;
            if values.len() != expected {
                bail!(
                    "variable.values: has {} entries, expected {expected} for horizon {horizon}",
                    values.len()
                );
            }
            if !(scale.is_finite() && offset.is_finite()) {
                bail!("variable.scale/offset: must be finite");
            }
            if values.iter().any(|v| !v.is_finite()) {
                bail!("variable.values: entries must be finite");
            }
        }
        VariableSpec::HittingTime { target, .. } => {
            resolve_labels(space, std::slice::from_ref(target)).context("variable.target")?;
        }
        VariableSpec::PrefixIndicator { prefix, .. } => {
            resolve_labels(space, prefix).context("variable.prefix")?;
        }
    }
    Ok(())
}

fn validate_task(spec: &ProblemSpec) -> Result<()> {
    let t = &spec.task;
    if !(t.tol.is_finite() && t.tol > 0.0) {
        bail!("task.tol: must be positive and finite (got {})", t.tol);
    }
    if t.budget == 0 {
        bail!("task.budget: must be at least 1");
    }
    if t.alpha <= 1.0 {
        bail!("task.alpha: must be greater than 1 (got {})", t.alpha);
    }
    if t.n_max == 0 || t.n_max > 10_000 {
        bail!("task.n_max: must be between 1 and 10000 (got {})", t.n_max);
    }
    if t.depth > 20 {
        bail!(
            "task.depth: must be at most 20 (got {}); the cut scan visits every situation \
             to that depth",
            t.depth
        );
    }
    if let (Some(c), Some(w)) = (&t.couples, &t.weights) {
        if c.len() != w.len() {
            bail!(
                "task.weights: has {} entries for {} couples",
                w.len(),
                c.len()
            );
        }
    }
    if let Some(c) = &t.couples {
        for (i, couple) in c.iter().enumerate() {
            RationalCouple::from_parts(couple.a[0], couple.a[1], couple.b[0], couple.b[1])
                .with_context(|| format!("task.couples[{i}]"))?;
        }
    }
    if needs_fixed_gamble(t.kind) {
        fixed_horizon(&spec.variable)
            .with_context(|| format!("task `{}` evaluates one gamble", t.kind.name()))?;
    }
    Ok(())
}

fn needs_fixed_gamble(kind: TaskKind) -> bool {
    matches!(
        kind,
        TaskKind::Expectation | TaskKind::LowerExpectation | TaskKind::LevyCheck | TaskKind::Certify
    )
}

fn fixed_horizon(variable: &VariableSpec) -> Result<usize> {
    match variable {
        VariableSpec::Table { horizon, .. } => Ok(*horizon),
        VariableSpec::HittingTime { horizon, .. } | VariableSpec::PrefixIndicator { horizon, .. } => {
            horizon.ok_or_else(|| anyhow!("variable.horizon: required for this task"))
        }
    }
}

impl CompiledProblem {
    /// The variable as an approximant family (for the convergence
    /// drivers).
    pub fn family(&self) -> Result<VariableFamily> {
        let dim = self.space.size();
        Ok(match &self.spec.variable {
            VariableSpec::Table {
                horizon,
                values,
                scale,
                offset,
            } => {
                let gamble = NMeasurableGamble::from_table(dim, *horizon, values.clone())?
                    .affine(*scale, *offset);
                let bound = gamble
                    .to_dense()?
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                VariableFamily::constant(gamble).with_lower_bound(bound)
            }
            VariableSpec::HittingTime {
                target,
                scale,
                offset,
                ..
            } => {
                let target = self
                    .space
                    .index_of(target)
                    .expect("validated at compile time");
                imptree::hitting_time_family(&self.space, target)?.affine(*scale, *offset)
            }
            VariableSpec::PrefixIndicator {
                prefix,
                scale,
                offset,
                ..
            } => {
                let states = resolve_labels(&self.space, prefix).expect("validated");
                let (s, o) = (*scale, *offset);
                VariableFamily::new(
                    move |n| {
                        if n < states.len() {
                            Ok(NMeasurableGamble::constant(dim, 0.0)?.affine(s, o))
                        } else {
                            Ok(NMeasurableGamble::prefix_indicator(dim, &states, n)?
                                .affine(s, o))
                        }
                    },
                    if s >= 0.0 {
                        Monotonicity::NonDecreasing
                    } else {
                        Monotonicity::NonIncreasing
                    },
                    Some(o.min(s + o)),
                )
            }
        })
    }

    /// The variable as a single gamble at its declared horizon (for
    /// exact-evaluation tasks).
    pub fn fixed_gamble(&self) -> Result<NMeasurableGamble> {
        let horizon = fixed_horizon(&self.spec.variable)?;
        let dim = self.space.size();
        Ok(match &self.spec.variable {
            VariableSpec::Table {
                values,
                scale,
                offset,
                ..
            } => NMeasurableGamble::from_table(dim, horizon, values.clone())?
                .affine(*scale, *offset),
            VariableSpec::HittingTime {
                target,
                scale,
                offset,
                ..
            } => {
                let target = self.space.index_of(target).expect("validated");
                NMeasurableGamble::hitting_time(dim, target, horizon)?.affine(*scale, *offset)
            }
            VariableSpec::PrefixIndicator {
                prefix,
                scale,
                offset,
                ..
            } => {
                let states = resolve_labels(&self.space, prefix).expect("validated");
                NMeasurableGamble::prefix_indicator(dim, &states, horizon)?
                    .affine(*scale, *offset)
            }
        })
    }

    /// Couples for the levy_check task: the declared ones, or dyadic
    /// defaults spanning the shifted gamble's range.
    pub fn couples(&self, range: (f64, f64)) -> Result<Vec<RationalCouple>> {
        match &self.spec.task.couples {
            Some(specs) => specs
                .iter()
                .map(|c| Ok(RationalCouple::from_parts(c.a[0], c.a[1], c.b[0], c.b[1])?))
                .collect(),
            None => {
                let couples = imptree::default_couples(range.0, range.1, 8);
                if couples.is_empty() {
                    bail!(
                        "no dyadic couples fit the shifted range ({}, {}); supply task.couples",
                        range.0,
                        range.1
                    );
                }
                Ok(couples)
            }
        }
    }

    /// Weights matching [`CompiledProblem::couples`]: declared, or
    /// uniform.
    pub fn weights(&self, count: usize) -> Result<Vec<f64>> {
        match &self.spec.task.weights {
            Some(w) => {
                if w.len() != count {
                    bail!("task.weights: has {} entries for {count} couples", w.len());
                }
                Ok(w.clone())
            }
            None => Ok(vec![1.0 / count as f64; count]),
        }
    }
}
