//! Hop accounting, exhaustive cost measurement, the closed-form best/worst/
//! average costs of each structure, and the comparison harness.

mod closed_form;
mod cost;
mod measure;
mod report;

pub use closed_form::{accepts, agreement_band, closed_form, Case, ModelKind};
pub use cost::{Lookup, TraversalCost};
pub use measure::{measure, CostModel, Measured, TargetPage, TargetSet};
pub use report::{
    emit_report, read_report, verify_table1, CostReport, ReportRow, Table1, VerifyConfig,
};
