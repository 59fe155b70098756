use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HugError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// The Jacobian is (numerically) rank deficient at `x`.
    #[error("singular geometry: rank-deficient Jacobian at x = {x:?}")]
    SingularGeometry { x: Vec<f64> },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<HugError>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outside the model domain: {0}")]
    Domain(String),

    #[error(
        "reference solve not resolved: endpoint moved by {change:e} when halving the step \
         ({substeps_per_unit} substeps per unit time); increase the substep count"
    )]
    Accuracy { change: f64, substeps_per_unit: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("empty sample set")]
    EmptySample,

    #[error("state is not librating")]
    NotLibrating,
}

impl HugError {
    pub(crate) fn at_step(self, step: usize) -> Self {
        HugError::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// True if this error (possibly wrapped with a step index) is a singular-geometry failure.
    pub fn is_singular(&self) -> bool {
        match self {
            HugError::SingularGeometry { .. } => true,
            HugError::AtStep { source, .. } => source.is_singular(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, HugError>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(HugError::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
