//! Independent checks of the solver: manufactured solutions, convergence
//! studies and a dense single-step oracle.

mod mms;
mod oracle;
mod study;

pub use mms::{ManufacturedCase, MmsSource};
pub use oracle::{dense_step_oracle, MAX_ORACLE_CELLS};
pub use study::{
    coarsen, mms_study, self_reference_study, study_scheme, transport_shift_study, ConvergenceStudy, ErrorRow,
    ObservedOrder,
};
pub mod suite;
