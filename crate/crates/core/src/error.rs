use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("on-diagonal evaluation at x = ({0}, {1})")]
    OnDiagonal(f64, f64),
    #[error("divergent sum: s = {0} must exceed 1/2")]
    DivergentSum(f64),
    #[error("quadrature missed tolerance {target:e}: achieved residual {achieved:e}")]
    Quadrature { target: f64, achieved: f64 },
    #[error("basis too large: {dim} states exceeds the limit {limit}")]
    BasisTooLarge { dim: f64, limit: usize },
    #[error("mode ({0}, {1}) lies outside the mode set")]
    ModeOutside(i32, i32),
    #[error("operators or states live on different bases")]
    BasisMismatch,
    #[error("eigensolver did not converge in sector n = {n}, m = ({m1}, {m2})")]
    Eigensolver { n: usize, m1: i32, m2: i32 },
    #[error("cap {cap} has relative defect {relative:e} above {threshold:e}; use a larger cap")]
    CapTooSmall { cap: usize, relative: f64, threshold: f64 },
    #[error("no certified cap up to {max_cap} reaches relative defect {threshold:e}")]
    CapSearchFailed { max_cap: usize, threshold: f64 },
    #[error("coherent vector drops mass {dropped:e} > {tol:e} beyond the cap; use a larger cap or smaller |u|²/λ")]
    DroppedMass { dropped: f64, tol: f64 },
    #[error("unsupported order {0}")]
    UnsupportedOrder(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
