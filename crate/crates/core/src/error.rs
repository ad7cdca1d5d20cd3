use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input shape mismatch: {0}")]
    InputShape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("direction not in span of the direction set (residual norm {residual:.3e})")]
    UnsupportedDirection { residual: f64 },

    #[error("degree cap {cap} exceeded (result degree {degree})")]
    DegreeCap { cap: usize, degree: usize },

    #[error("{count} orbit nodes escape the sampled window (first: {:?}); pass zero_outside if the field vanishes there", &nodes[..nodes.len().min(8)])]
    Coverage { count: usize, nodes: Vec<usize> },

    #[error("constraint violated: residual norms {0:?}")]
    Constraint(Vec<f64>),

    #[error("config error: {0}")]
    Config(String),

    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn schema(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
