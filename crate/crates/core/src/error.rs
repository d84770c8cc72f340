//! Error type shared by all toolkit modules.

use thiserror::Error;

/// Errors reported by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of the requested Lambert W branch.
    #[error("Lambert W{branch} domain error: x = {x} is outside {domain}")]
    LambertDomain {
        branch: &'static str,
        x: f64,
        domain: &'static str,
    },

    /// Hermite order above the basis limit.
    #[error("Hermite order {order} exceeds basis limit {max_order}")]
    OrderOutOfRange { order: usize, max_order: usize },

    /// Invalid scalar or structural parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Symbol magnitude at the grid boundary is too large for the grid.
    #[error(
        "grid too small: boundary symbol magnitude {boundary:.3e} exceeds {limit:.3e} \
         (1e-10 of the peak {peak:.3e})"
    )]
    GridTooSmall { boundary: f64, limit: f64, peak: f64 },

    /// Singular value decomposition did not converge.
    #[error("SVD failed to converge")]
    SvdFailure,

    /// Iterative solve did not converge within its budget.
    #[error("solver did not converge: {0}")]
    NonConvergent(String),

    /// Covariance of the normalized symbol density is not positive definite.
    #[error("degenerate covariance: det = {det:.3e} is not positive")]
    DegenerateCovariance { det: f64 },

    /// Requested code rate is not below the subchannel capacity.
    #[error("rate {rate_nats} nats >= capacity {capacity_nats} nats on subchannel {subchannel}")]
    RateExceedsCapacity {
        subchannel: usize,
        rate_nats: f64,
        capacity_nats: f64,
    },

    /// Codebook size above the exhaustive-decoder limit.
    #[error(
        "codebook for subchannel {subchannel} needs {log2_size} bits > limit {limit} bits; \
         lower the rate or the pulse count"
    )]
    CodebookTooLarge {
        subchannel: usize,
        log2_size: u32,
        limit: u32,
    },

    /// I/O failure while reading configuration or writing output.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON configuration or report.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
