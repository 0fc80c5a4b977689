use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid price model: {0}")]
    PriceModel(String),

    #[error("negative price {0}")]
    NegativePrice(f64),

    #[error("{field} out of {range}: {value}")]
    OutOfRange {
        field: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("invalid capacity configuration: {0}")]
    Capacity(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid policy: {0}")]
    Policy(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    field: &'static str,
    value: f64,
    range: &'static str,
    ok: bool,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { field, range, value })
    }
}
