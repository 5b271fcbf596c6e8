use thiserror::Error;

/// Broad failure class; the CLI maps each onto an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    NumericGuard,
    Asymptotics,
    Invariant,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid packet: {0}")]
    InvalidPacket(String),
    #[error("negative-momentum mass {mass:e} exceeds limit {limit:e}")]
    NegativeMomentum { mass: f64, limit: f64 },
    #[error("position {x} lies outside the grid [{x_min}, {x_max}]")]
    OutsideGrid { x: f64, x_min: f64, x_max: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("probe at {q} already holds right-mass {mass:e} at the start of the run")]
    ProbeNotClear { q: f64, mass: f64 },
    #[error("boundary amplitude {amplitude:e} exceeds guard {limit:e} at t = {t}")]
    BoundaryGuard { t: f64, amplitude: f64, limit: f64 },
    #[error("tridiagonal solve failed at row {row}: pivot {pivot:e}")]
    TridiagonalSolve { row: usize, pivot: f64 },
    #[error("time samples are not uniform (sample {index})")]
    NonUniformTimes { index: usize },
    #[error("window [{from}, {to}] is not covered by samples on [{start}, {end}]")]
    Coverage { from: f64, to: f64, start: f64, end: f64 },
    #[error("not yet asymptotic: residual flux {residual:e} over the settle window exceeds {limit:e}")]
    NotAsymptotic { residual: f64, limit: f64 },
    #[error("density {rho:e} below floor {floor:e} at x = {x}, t = {t}")]
    NodeProximity { x: f64, t: f64, rho: f64, floor: f64 },
    #[error("velocity {v} exceeds cap {cap} at x = {x}, t = {t}")]
    VelocityCap { x: f64, t: f64, v: f64, cap: f64 },
    #[error("trajectory left the recorded domain at t = {t} (x = {x})")]
    Escape { x: f64, t: f64 },
    #[error("degenerate transmission probability {0}")]
    Degenerate(f64),
    #[error("bisection did not converge")]
    Bisection,
    #[error("trajectory integration lost weight {lost} (> {limit}), {count} casualties")]
    TooManyCasualties { lost: f64, limit: f64, count: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidGrid(_)
            | InvalidPotential(_)
            | InvalidPacket(_)
            | NegativeMomentum { .. }
            | OutsideGrid { .. }
            | InvalidArgument(_)
            | ProbeNotClear { .. }
            | Coverage { .. }
            | Degenerate(_) => ErrorKind::Config,
            BoundaryGuard { .. }
            | TridiagonalSolve { .. }
            | NodeProximity { .. }
            | VelocityCap { .. }
            | Escape { .. }
            | Bisection
            | TooManyCasualties { .. } => ErrorKind::NumericGuard,
            NotAsymptotic { .. } => ErrorKind::Asymptotics,
            NonUniformTimes { .. } | Invariant(_) => ErrorKind::Invariant,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
