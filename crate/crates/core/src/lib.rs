//! Product-line derivation toolkit.
//!
//! Feature models are compiled into 0-1 linear constraint systems and queried
//! through a propagation-based boolean solver (validity, enumeration,
//! consequences, optimization). Stakeholder requirements are matched against
//! feature term bags with similarity metrics, and a [`session::Session`]
//! drives an interactive derivation dialogue.

pub mod compiler;
pub mod diagnostic;
pub mod generate;
pub mod io;
pub mod matcher;
pub mod model;
pub mod rational;
pub mod session;
pub mod solver;
pub mod terms;
pub mod validator;

pub use compiler::{compile, dump, ConstraintSystem};
pub use diagnostic::{Code, Diagnostic, Severity};
pub use model::{
    enumerate_brute_force, is_valid_configuration, Configuration, FeatureId, FeatureModel, ModelDraft, ModelError,
    PartialConfiguration, State,
};
pub use rational::Rational;
