use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RmaeVariant {
    /// Square root of the mean absolute error.
    #[default]
    SqrtMae,
    /// Plain mean absolute error.
    Mae,
}

impl std::str::FromStr for RmaeVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt-mae" => Ok(RmaeVariant::SqrtMae),
            "mae" => Ok(RmaeVariant::Mae),
            other => Err(Error::config("rmae_variant", format!("unknown variant `{other}`"))),
        }
    }
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Data("empty prediction vector".into()));
    }
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// Error in the units of `y`: `sqrt(MAE)` by default.
pub fn rmae(y: &[f64], yhat: &[f64], variant: RmaeVariant) -> Result<f64> {
    let m = mae(y, yhat)?;
    Ok(match variant {
        RmaeVariant::SqrtMae => m.sqrt(),
        RmaeVariant::Mae => m,
    })
}
