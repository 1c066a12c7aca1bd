use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("evaluation at a pole: z = {0}")]
    AtPole(String),
    #[error("log-branch term requested at {0}: {1}")]
    Branch(String, &'static str),
    #[error("weight overflow at x = {x} (log w = {log_w})")]
    Overflow { x: f64, log_w: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("structure {structure} infeasible: density {rho:e} < 0 at x = {x}")]
    NegativeDensity { structure: String, x: f64, rho: f64 },
    #[error("structure {structure} infeasible: {reason}")]
    Infeasible { structure: String, reason: String },
    #[error("endpoint root-find did not converge: {0}")]
    NoConvergence(String),
    #[error("evaluation point {0} lies on the branch cut")]
    OnCut(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("ambiguous clustering at x = {x}: orders {first} and {second} both fit the tolerance")]
    Ambiguous { x: f64, first: i32, second: i32 },
    #[error("inconsistent vanishing order {order} for a point of kind {kind} at x = {x}")]
    BadOrder { x: f64, kind: String, order: i32 },
    #[error("exponent balance violated: (m_h + (m_R - m_p)/2 + 1) * delta = {value} != 1")]
    ExponentBalance { value: f64 },
    #[error("point {point} does not scale appropriately: scaled distances {at_n} (n) vs {at_2n} (2n)")]
    NotScaling { point: String, at_n: f64, at_2n: f64 },
    #[error("no critical point near x = {0}")]
    NotFound(f64),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrthoError {
    #[error("resolution {resolution} too small: rule mass {mass} vs doubled-rule mass {doubled} (rel diff {rel:e})")]
    Resolution { resolution: usize, mass: f64, doubled: f64, rel: f64 },
    #[error("degree exceeds discretization resolution (b_{j} = {value:e})")]
    Positivity { j: usize, value: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("scaled point {0} leaves the support set")]
    Outside(f64),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("recurrence holds degree {have} but kernel needs degree {need}")]
    Degree { have: usize, need: usize },
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("cannot place {0} points in the interior of the support set")]
    Initialization(usize),
    #[error("invalid run parameters: {0}")]
    Parameters(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Umbrella error for callers that chain several stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by bad input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Potential(PotentialError::Schema(_))
                | Error::Potential(PotentialError::Invariant(_))
                | Error::Json(_)
                | Error::Kernel(KernelError::UnknownScenario(_))
                | Error::Sampler(SamplerError::Parameters(_))
        )
    }
}
