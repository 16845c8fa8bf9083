//! Model validity checks: structure, contradiction patterns, satisfiability
//! and solver-backed anomalies (dead and false-optional features).

use serde::Serialize;

use crate::compiler::compile;
use crate::diagnostic::{canonicalize, Code, Diagnostic};
use crate::model::{Configuration, CrossKind, FeatureModel, Incoming, ModelDraft, ModelError};
use crate::solver::{consequences, first_solution, Depth, SolverError};

/// Structural diagnostics of a raw draft; empty when it builds.
pub fn check_structure(draft: &ModelDraft) -> Vec<Diagnostic> {
    draft.structural_diagnostics()
}

fn is_variable(model: &FeatureModel, f: usize) -> bool {
    matches!(model.incoming(f), Incoming::Optional { .. } | Incoming::Member { .. })
}

/// Pattern scan over cross-tree constraints.
pub fn check_contradictions(model: &FeatureModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let idx = |f: &crate::model::FeatureId| model.index_of(f.as_str()).expect("validated model");
    for c in model.constraints() {
        let (a, b) = (idx(&c.a), idx(&c.b));
        let subject = vec![c.a.to_string(), c.b.to_string()];
        match c.kind {
            CrossKind::Requires => {
                let mutexed = model.constraints().iter().any(|d| d.kind == CrossKind::Mutex && d.links(&c.a, &c.b));
                if mutexed {
                    out.push(
                        Diagnostic::new(
                            Code::ContraReqMutex,
                            subject.clone(),
                            format!("{} both requires and excludes {}", c.a, c.b),
                        )
                        .ordered(vec![a, b]),
                    );
                }
                if model.is_core(a) && !model.is_core(b) && is_variable(model, b) {
                    out.push(
                        Diagnostic::new(
                            Code::FalseOptional,
                            vec![c.b.to_string()],
                            format!("{} is required by mandatory feature {}", c.b, c.a),
                        )
                        .ordered(vec![b]),
                    );
                }
                if model.is_ancestor(b, a) {
                    out.push(
                        Diagnostic::new(
                            Code::RequiresSelfAncestor,
                            subject,
                            format!("{} requires its own ancestor {}", c.a, c.b),
                        )
                        .ordered(vec![a, b]),
                    );
                }
            }
            CrossKind::Mutex => {
                if model.is_core(a) && model.is_core(b) {
                    out.push(
                        Diagnostic::new(
                            Code::MutexMandatory,
                            subject,
                            format!("{} and {} are both mandatory but mutually exclusive", c.a, c.b),
                        )
                        .ordered(vec![a.min(b), a.max(b)]),
                    );
                }
            }
        }
    }
    canonicalize(&mut out);
    out
}

/// A witness configuration, or UNSAT_MODEL with the search conflict.
pub fn check_satisfiable(model: &FeatureModel) -> Result<Configuration, Diagnostic> {
    let system = compile(model);
    match first_solution(&system, &Default::default()) {
        Ok(witness) => Ok(witness),
        Err(SolverError::Unsat(conflict)) => {
            Err(Diagnostic::new(Code::UnsatModel, vec![], format!("no valid configuration exists ({conflict})")))
        }
        Err(e) => unreachable!("empty partial cannot fail: {e}"),
    }
}

/// Dead features (in no configuration) and false optionals (optional or
/// group features in every configuration). Empty for unsatisfiable models.
pub fn check_anomalies(model: &FeatureModel) -> Vec<Diagnostic> {
    let system = compile(model);
    let result = consequences(&system, &Default::default(), Depth::Probing).expect("empty partial is well formed");
    if result.is_conflict() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, f) in model.features().iter().enumerate() {
        if result.forced_out.contains(&f.id) {
            out.push(
                Diagnostic::new(
                    Code::DeadFeature,
                    vec![f.id.to_string()],
                    format!("{} is in no valid configuration", f.id),
                )
                .ordered(vec![i]),
            );
        } else if result.forced_in.contains(&f.id) && is_variable(model, i) {
            out.push(
                Diagnostic::new(
                    Code::FalseOptional,
                    vec![f.id.to_string()],
                    format!("{} is in every valid configuration", f.id),
                )
                .ordered(vec![i]),
            );
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
    /// First configuration found, when the model is satisfiable.
    pub witness: Option<Configuration>,
}

impl Validation {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

/// Full battery on a raw draft. Semantic checks run only when the draft
/// is structurally valid.
pub fn validate(draft: &ModelDraft) -> (Validation, Option<FeatureModel>) {
    match draft.build() {
        Ok(model) => (validate_model(&model), Some(model)),
        Err(ModelError::Invalid(diagnostics)) => (Validation { diagnostics, witness: None }, None),
        Err(e) => unreachable!("building a draft only reports diagnostics: {e}"),
    }
}

/// Contradiction, satisfiability and anomaly checks on a built model.
pub fn validate_model(model: &FeatureModel) -> Validation {
    let mut diagnostics = check_contradictions(model);
    let witness = match check_satisfiable(model) {
        Ok(witness) => {
            diagnostics.extend(check_anomalies(model));
            Some(witness)
        }
        Err(d) => {
            diagnostics.push(d);
            None
        }
    };
    canonicalize(&mut diagnostics);
    Validation { diagnostics, witness }
}
