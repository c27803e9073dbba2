use thiserror::Error;

/// Errors produced by the scenario model, the analytic engines and the
/// simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or configuration value violates a model invariant.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// An argument is outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// An iterative quadrature or inversion did not reach its tolerance
    /// within the configured subdivision budget.
    #[error("numerical non-convergence in {op}: {detail}")]
    NonConvergence { op: &'static str, detail: String },

    /// Cooperation sizes beyond the implemented integration dimension.
    #[error("cooperation size n={n} exceeds the supported limit of {max}")]
    UnsupportedN { n: usize, max: usize },

    /// A sampled realization holds fewer points than the cooperation size.
    #[error("realization holds {found} points but n={needed} are required")]
    InsufficientPoints { found: usize, needed: usize },

    /// The residue and incomplete-gamma evaluations of the same quantity
    /// drifted apart, which indicates a numerical defect.
    #[error("residue and incomplete-gamma routes disagree by {diff:.3e} at nm={nm}, x={x}")]
    RouteDisagreement { nm: u32, x: f64, diff: f64 },

    /// Scenario file could not be read or parsed.
    #[error("scenario file error: {0}")]
    ScenarioFile(String),
}
