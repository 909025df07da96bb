use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration unstable at step {step} (dt = {dt}, n_z = {n_z}): |field| = {magnitude:e}")]
    Unstable {
        step: usize,
        dt: f64,
        n_z: usize,
        magnitude: f64,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("grid refinement did not converge: last change {last_change:e} > tol {tol:e}")]
    NotConverged { last_change: f64, tol: f64 },

    #[error("nothing retrieved: {0}")]
    NothingRetrieved(String),

    #[error("insufficient statistics: {0}")]
    Statistics(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
