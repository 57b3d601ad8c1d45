//! Manufactured cases and the convergence-study driver behind the CLI.

mod cases;
mod study;

pub use cases::{
    find_case, list_cases, verify_case, CaseCheck, ManufacturedCase, PolynomialDegrees,
    DIVERGENCE_TOLERANCE, FINITE_DIFFERENCE_STEP, FINITE_DIFFERENCE_TOLERANCE, MEAN_TOLERANCE,
};
pub use study::{
    run_inf_sup_study, run_study, write_text, InfSupLevel, LevelDiagnostics, StudyConfig,
    StudyOutcome, ThresholdCheck, EXACTNESS_TOLERANCE, IDENTITY_TOLERANCE, RATE_SLACK,
};
