use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite branch point y{0}")]
    NonFinite(usize),
    #[error("coincident branch points: y{i} = y{j} = {value}")]
    Coincident { i: usize, j: usize, value: f64 },
    #[error("non-increasing branch points: y{i} = {a} > y{j} = {b}")]
    NonIncreasing { i: usize, j: usize, a: f64, b: f64 },
    #[error("path passes through branch point {0} inside a segment")]
    PathThroughBranch(f64),
    #[error("quadrature did not converge: change {change:e} after {nodes} nodes")]
    Quadrature { change: f64, nodes: usize },
    #[error("ill-conditioned A-period matrix (condition number {0:e})")]
    IllConditioned(f64),
    #[error("degenerate differential: omega_2 vanishes at infinity")]
    DegenerateDifferential,
    #[error("ambiguous sheet for point at branch point {0}")]
    AmbiguousSheet(f64),
    #[error("theta tail bound {bound:e} not reached within radius {radius}")]
    ThetaRadius { radius: f64, bound: f64 },
    #[error("divisor proximity: |theta(z)| = {0:e}")]
    DivisorProximity(f64),
    #[error("no root in bracket (best |theta| = {0:e})")]
    NoRoot(f64),
    #[error("K selection failed: {0}")]
    KSelection(String),
    #[error("{what}: division by {value:e}")]
    NearZero { what: &'static str, value: f64 },
    #[error("unstable Laurent coefficient {name}: relative change {rel:e} between radii")]
    UnstableFit { name: &'static str, rel: f64 },
    #[error("contour crosses singularity (mean-value mismatch {0:e})")]
    ContourSingular(f64),
    #[error("pole proximity: denominator {0:e}")]
    PoleProximity(f64),
    #[error("rank-deficient reconstruction (condition number {0:e})")]
    RankDeficient(f64),
    #[error("reconstruction failed: held-out residual {0:e}")]
    ReconstructionFailed(f64),
    #[error("operator order {order} exceeds cap {cap}")]
    OrderOverflow { order: usize, cap: usize },
    #[error("division by an operator whose leading coefficient vanishes")]
    LeadingVanishes,
    #[error("invalid derivative index ({0}, {1}): total order must be at most 3")]
    DerivOrder(usize, usize),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
