//! Relational models, adequacy, satisfaction, model enumeration and the
//! semantic decision procedure.

mod adequacy;
mod decide;
mod enumerate;
mod eval;
mod model;

use thiserror::Error;

use crate::syntax::SyntaxError;

pub use adequacy::{check_adequate, AdequacyReport, Violation};
pub use decide::{
    canonical_model, close_sequent, decide, pad_domain, ClosedSequent, DecideOptions, EntailmentOracle, Strategy,
    Verdict,
};
pub use enumerate::{enumerate_models, ModelSpace, MAX_SLOTS};
pub use eval::{satisfies, Assignment, Evaluator};
pub use model::{Eta, KripkeModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model is not adequate: {0}")]
    NotAdequate(String),
    #[error("no world `{0}`")]
    UnknownWorld(String),
    #[error("constant `{constant}` is not interpreted at world `{world}`")]
    UnknownConstant { constant: String, world: String },
    #[error("variable `{var}` is assigned outside the domain of `{world}`")]
    AssignmentOutOfRange { var: String, world: String },
    #[error("model space too large: {0}")]
    ModelSpaceTooLarge(String),
    #[error("resource cap reached after {explored} models")]
    ResourceCap { explored: u64 },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("internal error: {0}")]
    Internal(String),
}
