use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph parameters for {family}: {reason}")]
    InvalidGraph { family: &'static str, reason: String },

    #[error("cannot parse graph spec '{0}': expected family:params (path, cycle, star, complete, grid, hypercube, cliquering, file)")]
    GraphSpecSyntax(String),

    #[error("edge list line {line}: {reason}")]
    EdgeList { line: usize, reason: String },

    #[error("failed to read {path}: {reason}")]
    Io { path: String, reason: String },

    #[error("cannot parse rule '{0}': expected standard, constant:<p>, push, pull, pushpull or classic")]
    RuleSyntax(String),

    #[error("forcing probability {0} outside [0, 1]")]
    ProbabilityRange(f64),

    #[error("vertex {vertex} out of range for graph with {n_vertices} vertices")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },

    #[error("{0}")]
    Contract(String),

    #[error("rule '{0}' is not supported here (only standard and constant rules have edge-independent forcing)")]
    UnsupportedRule(String),

    #[error("exact analysis budget exceeded: {0}; use Monte Carlo estimation instead")]
    BudgetExceeded(String),

    #[error("graph is disconnected; expected propagation time is infinite")]
    Disconnected,

    #[error("all {0} trials hit the step cutoff; no terminated trial to average")]
    AllTrialsCutOff(u64),

    #[error("invalid configuration: {0}")]
    Config(String),
}
