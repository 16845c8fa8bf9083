//! Interactive derivation: a stack of decisions over one model with live
//! probing consequences, undo, what-if queries, must-requirement
//! application, optimal completion and product export.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::compiler::{compile, ConstraintSystem};
use crate::diagnostic::Diagnostic;
use crate::io::SourceDocument;
use crate::matcher::{Classification, MatchReport, Priority, StakeholderRequirement};
use crate::model::{Configuration, FeatureId, FeatureModel, PartialConfiguration, State};
use crate::rational::{format_decimal, Rational};
use crate::solver::{attribute_totals, consequences, optimize, Consequences, Depth, Objective, SolverError};
use crate::validator::validate_model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    User,
    MustRequirement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub feature: FeatureId,
    pub state: State,
    pub origin: Origin,
    /// Requirement id for must-requirement decisions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requirement: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Open,
    Conflicted,
    Complete,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Open => "open",
            Status::Conflicted => "conflicted",
            Status::Complete => "complete",
        })
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("model has errors")]
    Rejected(Vec<Diagnostic>),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature {feature} is not open: already {how} {state}")]
    NotOpen { feature: FeatureId, how: &'static str, state: State },
    #[error("no decision to undo")]
    EmptyStack,
    #[error("session is conflicted; undo the last decision first")]
    Conflicted,
    #[error("session is not complete")]
    Incomplete,
    #[error("requirement `{0}` is not in the match report")]
    UnknownRequirement(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Per-feature origin of a product's selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    User,
    Forced,
    Search,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::User => "user",
            Provenance::Forced => "forced",
            Provenance::Search => "search",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivedProduct {
    pub model: String,
    pub configuration: Configuration,
    /// Selected features in declaration order with their provenance.
    pub features: Vec<(FeatureId, Provenance)>,
    #[serde(serialize_with = "totals_as_decimals")]
    pub objective_values: BTreeMap<String, Rational>,
    pub capitalization_candidates: Vec<StakeholderRequirement>,
}

fn totals_as_decimals<S: serde::Serializer>(totals: &BTreeMap<String, Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(totals.iter().map(|(k, v)| (k, format_decimal(v))))
}

impl DerivedProduct {
    /// Product requirements document.
    pub fn export(&self) -> SourceDocument {
        let mut out = format!("product {}\n", self.model);
        for (f, provenance) in &self.features {
            out.push_str(&format!("feature {f} {provenance}\n"));
        }
        for (attr, total) in &self.objective_values {
            out.push_str(&format!("total {attr} {}\n", format_decimal(total)));
        }
        for req in &self.capitalization_candidates {
            out.push_str(&format!("capitalize: {} {}\n", req.id, req.terms));
        }
        SourceDocument::new(self.model.clone(), out)
    }
}

/// What `apply_musts` did with each must requirement.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MustOutcome {
    /// Requirements whose matched feature was pushed as a decision.
    pub applied: Vec<String>,
    /// Requirements whose matched feature was already selected.
    pub satisfied: Vec<String>,
    /// Requirements left for explicit resolution, with their candidates.
    pub ambiguous: Vec<(String, Vec<FeatureId>)>,
    /// Unmatched requirements, recorded as capitalization candidates.
    pub capitalization_candidates: Vec<String>,
    /// Must requirements whose decisions appear in the conflict trail, in
    /// stack order.
    pub conflicting: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Session {
    model: Arc<FeatureModel>,
    system: Arc<ConstraintSystem>,
    decisions: Vec<Decision>,
    consequences: Consequences,
    status: Status,
    capitalization: Vec<StakeholderRequirement>,
}

impl Session {
    /// Starts a session; models with error diagnostics are rejected.
    pub fn new(model: Arc<FeatureModel>) -> Result<Self, SessionError> {
        let validation = validate_model(&model);
        if validation.has_errors() {
            return Err(SessionError::Rejected(validation.diagnostics));
        }
        let system = Arc::new(compile(&model));
        Session::with_system(model, system)
    }

    /// Starts a session over an already validated model and its system.
    pub fn with_system(model: Arc<FeatureModel>, system: Arc<ConstraintSystem>) -> Result<Self, SessionError> {
        let consequences = consequences(&system, &PartialConfiguration::empty(), Depth::Probing)?;
        let mut session = Session {
            model,
            system,
            decisions: Vec::new(),
            consequences,
            status: Status::Open,
            capitalization: Vec::new(),
        };
        session.update_status();
        Ok(session)
    }

    pub fn model(&self) -> &Arc<FeatureModel> {
        &self.model
    }

    pub fn system(&self) -> &Arc<ConstraintSystem> {
        &self.system
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn consequences(&self) -> &Consequences {
        &self.consequences
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn capitalization_candidates(&self) -> &[StakeholderRequirement] {
        &self.capitalization
    }

    pub fn partial(&self) -> PartialConfiguration {
        partial_of(&self.decisions)
    }

    fn update_status(&mut self) {
        self.status = if self.consequences.is_conflict() {
            Status::Conflicted
        } else if self.consequences.open.is_empty() {
            Status::Complete
        } else {
            Status::Open
        };
    }

    fn refresh(&mut self) -> Result<(), SessionError> {
        self.consequences = consequences(&self.system, &self.partial(), Depth::Probing)?;
        self.update_status();
        Ok(())
    }

    /// Open features are decidable, and so is going against a forced
    /// value (which conflicts). Re-deciding or confirming a forced value is
    /// refused.
    fn require_decidable(&self, feature: &str, wanted: State) -> Result<FeatureId, SessionError> {
        let id =
            self.model.feature(feature).ok_or_else(|| SessionError::UnknownFeature(feature.to_owned()))?.id.clone();
        match self.consequences.determination(feature) {
            Some(("forced", state)) if state != wanted => Ok(id),
            Some((how, state)) => Err(SessionError::NotOpen { feature: id, how, state }),
            None => Ok(id),
        }
    }

    /// Records a user decision and recomputes the consequences. A conflicting decision stays on the stack.
    pub fn decide(&mut self, feature: &str, state: State) -> Result<&Consequences, SessionError> {
        if self.status == Status::Conflicted {
            return Err(SessionError::Conflicted);
        }
        let feature = self.require_decidable(feature, state)?;
        self.decisions.push(Decision { feature, state, origin: Origin::User, requirement: None });
        self.refresh()?;
        Ok(&self.consequences)
    }

    /// Pops the latest decision, conflicting or not.
    pub fn undo(&mut self) -> Result<Decision, SessionError> {
        let last = self.decisions.pop().ok_or(SessionError::EmptyStack)?;
        self.refresh()?;
        Ok(last)
    }

    /// Consequences of a hypothetical decision; the session is unchanged.
    pub fn what_if(&self, feature: &str, state: State) -> Result<Consequences, SessionError> {
        if self.status == Status::Conflicted {
            return Err(SessionError::Conflicted);
        }
        let feature = self.require_decidable(feature, state)?;
        let partial = self.partial().with(feature, state).map_err(SolverError::from)?;
        Ok(consequences(&self.system, &partial, Depth::Probing)?)
    }

    /// Pushes the matched feature of every must requirement as an in
    /// decision, then recomputes once. Ambiguous musts are left out and
    /// unmatched ones become capitalization candidates.
    pub fn apply_musts(
        &mut self,
        requirements: &[StakeholderRequirement],
        report: &MatchReport,
    ) -> Result<MustOutcome, SessionError> {
        if self.status == Status::Conflicted {
            return Err(SessionError::Conflicted);
        }
        let mut outcome = MustOutcome::default();
        let mut pushes: Vec<Decision> = Vec::new();
        for req in requirements.iter().filter(|r| r.priority == Some(Priority::Must)) {
            let verdict = report.outcome(&req.id).ok_or_else(|| SessionError::UnknownRequirement(req.id.clone()))?;
            match verdict {
                Classification::Matched { feature } => {
                    let known = self
                        .model
                        .feature(feature.as_str())
                        .ok_or_else(|| SessionError::UnknownFeature(feature.to_string()))?;
                    let feature = known.id.clone();
                    let already = pushes.iter().any(|d| d.feature == feature);
                    match self.consequences.determination(feature.as_str()) {
                        Some((_, State::In)) => outcome.satisfied.push(req.id.clone()),
                        _ if already => outcome.satisfied.push(req.id.clone()),
                        Some(("decided", State::Out)) => {
                            return Err(SessionError::NotOpen { feature, how: "decided", state: State::Out })
                        }
                        _ => {
                            outcome.applied.push(req.id.clone());
                            pushes.push(Decision {
                                feature,
                                state: State::In,
                                origin: Origin::MustRequirement,
                                requirement: Some(req.id.clone()),
                            });
                        }
                    }
                }
                Classification::Ambiguous { features } => outcome.ambiguous.push((req.id.clone(), features.clone())),
                Classification::Unmatched => {
                    outcome.capitalization_candidates.push(req.id.clone());
                    if !self.capitalization.iter().any(|c| c.id == req.id) {
                        self.capitalization.push(req.clone());
                    }
                }
            }
        }
        if !pushes.is_empty() {
            self.decisions.extend(pushes);
            self.refresh()?;
            if let Some(conflict) = self.consequences.conflict() {
                for d in &self.decisions {
                    if let Some(req) = &d.requirement {
                        if conflict.decisions().any(|step| step.feature == d.feature) {
                            outcome.conflicting.push(req.clone());
                        }
                    }
                }
            }
        }
        Ok(outcome)
    }

    /// Optimal configuration extending the current decisions.
    pub fn complete_optimal(&self, objective: &Objective) -> Result<DerivedProduct, SessionError> {
        if self.status == Status::Conflicted {
            return Err(SessionError::Conflicted);
        }
        let best = optimize(&self.system, &self.partial(), objective)?;
        Ok(self.product(best.configuration))
    }

    /// The product of a complete session.
    pub fn derived_product(&self) -> Result<DerivedProduct, SessionError> {
        match self.status {
            Status::Complete => Ok(self.product(Configuration::new(self.consequences.all_in()))),
            Status::Conflicted => Err(SessionError::Conflicted),
            Status::Open => Err(SessionError::Incomplete),
        }
    }

    pub fn export_product(&self) -> Result<SourceDocument, SessionError> {
        Ok(self.derived_product()?.export())
    }

    fn product(&self, configuration: Configuration) -> DerivedProduct {
        let features = self
            .model
            .ids()
            .filter(|f| configuration.contains(f.as_str()))
            .map(|f| {
                let provenance = if self.consequences.decided_in.contains(f) {
                    Provenance::User
                } else if self.consequences.forced_in.contains(f) {
                    Provenance::Forced
                } else {
                    Provenance::Search
                };
                (f.clone(), provenance)
            })
            .collect();
        DerivedProduct {
            model: self.model.name().to_owned(),
            objective_values: attribute_totals(&self.model, &configuration),
            configuration,
            features,
            capitalization_candidates: self.capitalization.clone(),
        }
    }
}

fn partial_of(decisions: &[Decision]) -> PartialConfiguration {
    let mut partial = PartialConfiguration::empty();
    for d in decisions {
        partial.decide(d.feature.clone(), d.state).expect("a feature is decided at most once");
    }
    partial
}

/// Whether each `want` requirement's matched feature is in `configuration`.
/// Requirements that are not matched to a single feature are reported as
/// unsatisfied.
pub fn want_satisfaction(
    requirements: &[StakeholderRequirement],
    report: &MatchReport,
    configuration: &Configuration,
) -> Vec<(String, bool)> {
    requirements
        .iter()
        .filter(|r| r.priority == Some(Priority::Want))
        .map(|r| {
            let ok = matches!(report.outcome(&r.id), Some(Classification::Matched { feature }) if configuration.contains(feature.as_str()));
            (r.id.clone(), ok)
        })
        .collect()
}
