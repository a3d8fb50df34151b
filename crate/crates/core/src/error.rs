use thiserror::Error;

pub type Result<T> = std::result::Result<T, NdsError>;

#[derive(Debug, Error)]
pub enum NdsError {
    #[error("point {0} lies outside [0,1]")]
    Domain(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("code {code} needs depth {needed} but the atlas has depth {depth}")]
    Depth {
        code: String,
        needed: usize,
        depth: usize,
    },
    #[error("requested {requested} steps exceeds the exact horizon {horizon}")]
    Horizon { requested: u64, horizon: u64 },
    #[error("parse error: {0}")]
    Parse(String),
}
