use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    Symmetry(f64),
    #[error("did not converge: {0}")]
    Convergence(String),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("projection failed after {iterations} iterations (residual {residual:.3e})")]
    Projection { iterations: usize, residual: f64 },
    #[error("topology: {0}")]
    Topology(String),
    #[error("node {0} has no neighbours")]
    IsolatedNode(usize),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
