//! Finite-domain boolean solving over compiled systems: propagation,
//! first/next solution, enumeration, counting, consequence deduction,
//! attribute filters and bounds, and branch-and-bound optimization.

mod engine;
mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::compiler::{
    attribute_bound_constraint, BoundDirection, ConstraintSystem, LinearConstraint, Provenance, Relation,
};
use crate::model::{Configuration, FeatureId, FeatureModel, ModelError, PartialConfiguration, State};
use crate::rational::{common_denominator, Rational};

use engine::{Engine, Reason};
pub use search::SolutionCursor;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` is both selected and excluded")]
    Contradictory(FeatureId),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("cursor belongs to a constraint system that has since changed")]
    StaleCursor,
    #[error("coefficients of `{0}` do not fit the solver's integer range")]
    Overflow(String),
    #[error("no configuration exists: {0}")]
    Unsat(Box<Conflict>),
}

impl From<ModelError> for SolverError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownFeature(f) => SolverError::UnknownFeature(f),
            ModelError::Contradictory(f) => SolverError::Contradictory(f),
            other => SolverError::UnknownFeature(other.to_string()),
        }
    }
}

/// Why a trail entry holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepReason {
    /// Fixed by the caller's partial configuration.
    Decision,
    /// Chosen by the search.
    Search,
    /// Forced by a constraint.
    Propagated { constraint: usize, provenance: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrailStep {
    pub feature: FeatureId,
    pub value: bool,
    pub reason: StepReason,
}

/// A violated constraint together with the assignments that led to it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Conflict {
    /// Index into the system's constraint list.
    pub constraint: usize,
    pub rendered: String,
    pub provenance: String,
    pub trail: Vec<TrailStep>,
}

impl Conflict {
    /// Re-applies the trail and checks that the cited constraint cannot be
    /// satisfied by any completion of that assignment.
    pub fn replays(&self, system: &ConstraintSystem) -> bool {
        let mut values: Vec<Option<bool>> = vec![None; system.vars().len()];
        for step in &self.trail {
            match system.var_of(step.feature.as_str()) {
                Some(v) => values[v] = Some(step.value),
                None => return false,
            }
        }
        let Some(c) = system.constraints().get(self.constraint) else {
            return false;
        };
        let (low, high) = difference_range(c, &values);
        match c.relation {
            Relation::Le => low > c.rhs_const,
            Relation::Eq => low > c.rhs_const || high < c.rhs_const,
        }
    }

    /// Features whose values came from decisions, in trail order.
    pub fn decisions(&self) -> impl Iterator<Item = &TrailStep> {
        self.trail.iter().filter(|s| s.reason == StepReason::Decision)
    }
}

/// Range of `Σlhs - Σrhs_terms` over completions of a partial assignment.
fn difference_range(c: &LinearConstraint, values: &[Option<bool>]) -> (i64, i64) {
    let mut low = 0;
    let mut high = 0;
    let terms = c.lhs.iter().map(|t| (t.coeff, t.var)).chain(c.rhs_terms.iter().map(|t| (-t.coeff, t.var)));
    for (a, v) in terms {
        match values[v] {
            Some(true) => {
                low += a;
                high += a;
            }
            Some(false) => {}
            None => {
                low += a.min(0);
                high += a.max(0);
            }
        }
    }
    (low, high)
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "violated `{}` ({})", self.rendered, self.provenance)
    }
}

impl Conflict {
    /// Multi-line explanation: the violated constraint then one line per
    /// trail step.
    pub fn explain(&self) -> String {
        let mut out = format!("conflict: {} # {}\n", self.rendered, self.provenance);
        for step in &self.trail {
            let why = match &step.reason {
                StepReason::Decision => "decision".to_owned(),
                StepReason::Search => "search".to_owned(),
                StepReason::Propagated { provenance, .. } => format!("by {provenance}"),
            };
            out.push_str(&format!("  {} = {} ({why})\n", step.feature, u8::from(step.value)));
        }
        out
    }
}

/// Values of all variables after propagation; `None` = undecided.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    features: Vec<FeatureId>,
    values: Vec<Option<bool>>,
    propagated: Vec<bool>,
}

impl Assignment {
    pub fn get(&self, feature: &str) -> Option<bool> {
        self.features.iter().position(|f| f.as_str() == feature).and_then(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FeatureId, Option<bool>)> {
        self.features.iter().zip(self.values.iter().copied())
    }

    /// Features fixed to `value` by propagation (not by the caller).
    pub fn forced(&self, value: bool) -> BTreeSet<FeatureId> {
        self.features
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.propagated[i] && self.values[i] == Some(value))
            .map(|(_, f)| f.clone())
            .collect()
    }

    pub fn undecided(&self) -> BTreeSet<FeatureId> {
        self.iter().filter(|(_, v)| v.is_none()).map(|(f, _)| f.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Propagation {
    Consistent(Assignment),
    Conflict(Conflict),
}

pub(crate) fn seeded_engine(system: &ConstraintSystem, partial: &PartialConfiguration) -> Result<Engine, SolverError> {
    let mut engine = Engine::new(system);
    for (feature, state) in partial.decisions() {
        let var = system.var_of(feature.as_str()).ok_or_else(|| SolverError::UnknownFeature(feature.to_string()))?;
        engine.assign(var, state.as_bool(), Reason::Decision);
    }
    Ok(engine)
}

fn assignment_of(system: &ConstraintSystem, engine: &Engine) -> Assignment {
    let mut propagated = vec![false; system.vars().len()];
    for step in engine.trail() {
        if matches!(step.reason, Reason::Row(_)) {
            propagated[step.var] = true;
        }
    }
    Assignment {
        features: system.vars().iter().map(|v| v.feature.clone()).collect(),
        values: engine.values().to_vec(),
        propagated,
    }
}

/// Applies the constraint rules to a fixpoint starting from `partial`.
pub fn propagate(system: &ConstraintSystem, partial: &PartialConfiguration) -> Result<Propagation, SolverError> {
    let mut engine = seeded_engine(system, partial)?;
    Ok(match engine.propagate_all() {
        Ok(()) => Propagation::Consistent(assignment_of(system, &engine)),
        Err(raw) => Propagation::Conflict(engine.conflict(system, &raw)),
    })
}

/// First configuration in search order extending `partial`.
pub fn first_solution(system: &ConstraintSystem, partial: &PartialConfiguration) -> Result<Configuration, SolverError> {
    let mut cursor = SolutionCursor::new(system, partial)?;
    match cursor.next(system)? {
        Some(config) => Ok(config),
        None => Err(unsat(system, &cursor)),
    }
}

fn unsat(system: &ConstraintSystem, cursor: &SolutionCursor) -> SolverError {
    let conflict = cursor.last_conflict(system).expect("an exhausted search without solutions met a conflict");
    SolverError::Unsat(Box::new(conflict))
}

/// Solutions in search order, at most `limit` of them.
pub fn enumerate(
    system: &ConstraintSystem,
    partial: &PartialConfiguration,
    limit: Option<usize>,
) -> Result<Vec<Configuration>, SolverError> {
    let mut cursor = SolutionCursor::new(system, partial)?;
    let mut out = Vec::new();
    while limit.is_none_or(|l| out.len() < l) {
        match cursor.next(system)? {
            Some(c) => out.push(c),
            None => break,
        }
    }
    Ok(out)
}

/// Number of configurations extending `partial`.
pub fn count(system: &ConstraintSystem, partial: &PartialConfiguration) -> Result<u64, SolverError> {
    let mut cursor = SolutionCursor::new(system, partial)?;
    while cursor.advance() {}
    Ok(cursor.delivered())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Depth {
    Propagation,
    Probing,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ConsequenceStatus {
    Consistent,
    Conflict { conflict: Box<Conflict> },
}

/// Decided, forced and open features for a partial configuration. The five
/// sets partition the model's features.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Consequences {
    pub decided_in: BTreeSet<FeatureId>,
    pub decided_out: BTreeSet<FeatureId>,
    pub forced_in: BTreeSet<FeatureId>,
    pub forced_out: BTreeSet<FeatureId>,
    pub open: BTreeSet<FeatureId>,
    pub status: ConsequenceStatus,
}

impl Consequences {
    /// Every feature known to be selected: decisions and forced.
    pub fn all_in(&self) -> BTreeSet<FeatureId> {
        self.decided_in.union(&self.forced_in).cloned().collect()
    }

    pub fn all_out(&self) -> BTreeSet<FeatureId> {
        self.decided_out.union(&self.forced_out).cloned().collect()
    }

    pub fn is_conflict(&self) -> bool {
        matches!(self.status, ConsequenceStatus::Conflict { .. })
    }

    pub fn conflict(&self) -> Option<&Conflict> {
        match &self.status {
            ConsequenceStatus::Conflict { conflict } => Some(conflict),
            ConsequenceStatus::Consistent => None,
        }
    }

    /// Where a feature stands, if it is not open.
    pub fn determination(&self, feature: &str) -> Option<(&'static str, State)> {
        if self.decided_in.contains(feature) {
            Some(("decided", State::In))
        } else if self.decided_out.contains(feature) {
            Some(("decided", State::Out))
        } else if self.forced_in.contains(feature) {
            Some(("forced", State::In))
        } else if self.forced_out.contains(feature) {
            Some(("forced", State::Out))
        } else {
            None
        }
    }
}

/// Deduces what follows from `partial`. At propagation depth the rules are
/// run to a fixpoint; at probing depth every undecided feature is tried at
/// both values with full search, which makes the forced sets exact.
pub fn consequences(
    system: &ConstraintSystem,
    partial: &PartialConfiguration,
    depth: Depth,
) -> Result<Consequences, SolverError> {
    let mut engine = seeded_engine(system, partial)?;
    let vars = system.vars();
    let mut out = Consequences {
        decided_in: partial.decided_in().clone(),
        decided_out: partial.decided_out().clone(),
        forced_in: BTreeSet::new(),
        forced_out: BTreeSet::new(),
        open: BTreeSet::new(),
        status: ConsequenceStatus::Consistent,
    };
    let undecided_by_user = |f: &FeatureId| partial.state_of(f.as_str()).is_none();

    if let Err(raw) = engine.propagate_all() {
        out.status = ConsequenceStatus::Conflict { conflict: Box::new(engine.conflict(system, &raw)) };
        out.open = vars.iter().map(|v| v.feature.clone()).filter(undecided_by_user).collect();
        return Ok(out);
    }

    let mut known: Vec<Option<bool>> = engine.values().to_vec();
    if depth == Depth::Probing {
        let mut cursor = SolutionCursor::from_engine(system, engine.clone());
        if !cursor.advance() {
            let conflict = cursor.last_conflict(system).expect("search without solutions met a conflict");
            out.status = ConsequenceStatus::Conflict { conflict: Box::new(conflict) };
            out.open = vars.iter().map(|v| v.feature.clone()).filter(undecided_by_user).collect();
            return Ok(out);
        }
        let n = vars.len();
        let mut seen = vec![[false; 2]; n];
        let mark = |values: &[Option<bool>], seen: &mut Vec<[bool; 2]>| {
            for (v, value) in values.iter().enumerate() {
                if let Some(b) = value {
                    seen[v][usize::from(*b)] = true;
                }
            }
        };
        mark(cursor.values(), &mut seen);
        for var in 0..n {
            if known[var].is_some() {
                continue;
            }
            for value in [true, false] {
                if seen[var][usize::from(value)] {
                    continue;
                }
                let mut probe = engine.clone();
                probe.assign(var, value, Reason::Branch);
                let mut cursor = SolutionCursor::from_engine(system, probe);
                if cursor.advance() {
                    mark(cursor.values(), &mut seen);
                } else {
                    known[var] = Some(!value);
                    break;
                }
            }
        }
    }

    for (var, value) in known.iter().enumerate() {
        let feature = &vars[var].feature;
        if !undecided_by_user(feature) {
            continue;
        }
        match value {
            Some(true) => out.forced_in.insert(feature.clone()),
            Some(false) => out.forced_out.insert(feature.clone()),
            None => out.open.insert(feature.clone()),
        };
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Consistency {
    pub consistent: bool,
    pub witness: Option<Configuration>,
    pub conflict: Option<Conflict>,
}

/// Whether some configuration extends `partial` plus one more decision.
pub fn is_consistent(
    system: &ConstraintSystem,
    partial: &PartialConfiguration,
    feature: &FeatureId,
    state: State,
) -> Result<Consistency, SolverError> {
    let extended = partial.with(feature.clone(), state)?;
    match first_solution(system, &extended) {
        Ok(witness) => Ok(Consistency { consistent: true, witness: Some(witness), conflict: None }),
        Err(SolverError::Unsat(conflict)) => {
            Ok(Consistency { consistent: false, witness: None, conflict: Some(*conflict) })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(alias = "min")]
    Minimize,
    #[serde(alias = "max")]
    Maximize,
}

/// A linear objective over features.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Objective {
    pub attribute: String,
    pub direction: Direction,
    pub coefficients: BTreeMap<FeatureId, Rational>,
}

impl Objective {
    /// Uses a model attribute as coefficients; features without a value count as zero.
    pub fn attribute(system: &ConstraintSystem, attribute: &str, direction: Direction) -> Result<Self, SolverError> {
        let values = system.attribute(attribute).ok_or_else(|| SolverError::UnknownAttribute(attribute.to_owned()))?;
        Ok(Objective {
            attribute: attribute.to_owned(),
            direction,
            coefficients: system.vars().iter().zip(values).map(|(v, c)| (v.feature.clone(), c.clone())).collect(),
        })
    }

    /// Number of selected features.
    pub fn feature_count(system: &ConstraintSystem, direction: Direction) -> Self {
        Objective {
            attribute: "features".to_owned(),
            direction,
            coefficients: system.vars().iter().map(|v| (v.feature.clone(), Rational::from_integer(1.into()))).collect(),
        }
    }

    pub fn value(&self, config: &Configuration) -> Rational {
        config.selected.iter().filter_map(|f| self.coefficients.get(f)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Optimum {
    pub configuration: Configuration,
    pub value: Rational,
}

/// Branch-and-bound over the search order. Only strictly better solutions
/// replace the incumbent, so among optimal configurations the one met first
/// in enumeration order is returned.
pub fn optimize(
    system: &ConstraintSystem,
    partial: &PartialConfiguration,
    objective: &Objective,
) -> Result<Optimum, SolverError> {
    let raw: Vec<Rational> = system
        .vars()
        .iter()
        .map(|v| objective.coefficients.get(&v.feature).cloned().unwrap_or_else(Rational::zero))
        .collect();
    let scale = Rational::from_integer(common_denominator(raw.iter()));
    let coeffs = raw
        .iter()
        .map(|c| (c * &scale).to_integer().to_i128())
        .collect::<Option<Vec<i128>>>()
        .ok_or_else(|| SolverError::Overflow(objective.attribute.clone()))?;

    let mut cursor = SolutionCursor::new(system, partial)?;
    cursor.bound =
        Some(search::Bound { coeffs, minimize: objective.direction == Direction::Minimize, incumbent: None });
    let mut best = None;
    while cursor.advance() {
        let values = cursor.values();
        let bound = cursor.bound.as_ref().expect("bound installed");
        let value: i128 = bound.coeffs.iter().zip(values).filter(|(_, v)| **v == Some(true)).map(|(c, _)| *c).sum();
        cursor.bound.as_mut().expect("bound installed").incumbent = Some(value);
        best = Some(cursor.configuration(system));
    }
    match best {
        Some(configuration) => {
            let value = objective.value(&configuration);
            Ok(Optimum { configuration, value })
        }
        None => Err(unsat(system, &cursor)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparator {
    pub fn holds(self, value: &Rational, bound: &Rational) -> bool {
        match self {
            Comparator::Lt => value < bound,
            Comparator::Le => value <= bound,
            Comparator::Gt => value > bound,
            Comparator::Ge => value >= bound,
            Comparator::Eq => value == bound,
        }
    }
}

impl std::str::FromStr for Comparator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "<" => Comparator::Lt,
            "<=" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" => Comparator::Ge,
            "=" | "==" => Comparator::Eq,
            other => return Err(format!("unknown comparator `{other}`")),
        })
    }
}

/// Features whose attribute value (zero when absent) satisfies the
/// comparison, in declaration order.
pub fn filter_features(
    model: &FeatureModel,
    attribute: &str,
    comparator: Comparator,
    bound: &Rational,
) -> Vec<FeatureId> {
    (0..model.len())
        .filter(|&i| comparator.holds(&model.attribute(i, attribute), bound))
        .map(|i| model.features()[i].id.clone())
        .collect()
}

impl ConstraintSystem {
    /// Adds `Σ attribute(f)·R_f (<= | >=) bound`. The system gets a new
    /// identity, so cursors opened before the call become stale.
    pub fn add_attribute_bound(
        &mut self,
        attribute: &str,
        direction: BoundDirection,
        bound: &Rational,
    ) -> Result<(), SolverError> {
        let coefficients =
            self.attribute(attribute).ok_or_else(|| SolverError::UnknownAttribute(attribute.to_owned()))?.to_vec();
        let constraint = attribute_bound_constraint(self, &coefficients, direction, bound)
            .ok_or_else(|| SolverError::Overflow(attribute.to_owned()))?;
        self.push(
            constraint,
            Provenance::AttributeBound { attribute: attribute.to_owned(), direction, bound: bound.clone() },
        );
        Ok(())
    }
}

/// Copy of `system` extended with an attribute bound.
pub fn add_attribute_bound(
    system: &ConstraintSystem,
    attribute: &str,
    direction: BoundDirection,
    bound: &Rational,
) -> Result<ConstraintSystem, SolverError> {
    let mut extended = system.clone();
    extended.add_attribute_bound(attribute, direction, bound)?;
    Ok(extended)
}

/// Objective total of a configuration for every attribute of the model.
pub fn attribute_totals(model: &FeatureModel, config: &Configuration) -> BTreeMap<String, Rational> {
    model
        .attribute_names()
        .into_iter()
        .map(|name| {
            let total = config
                .selected
                .iter()
                .filter_map(|f| model.index_of(f.as_str()))
                .map(|i| model.attribute(i, name))
                .sum();
            (name.to_owned(), total)
        })
        .collect()
}
