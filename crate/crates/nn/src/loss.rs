use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::tape::{bce_value, mse_value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Bce,
    Mse,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Bce => "bce",
            LossKind::Mse => "mse",
        })
    }
}

impl FromStr for LossKind {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bce" => Ok(LossKind::Bce),
            "mse" => Ok(LossKind::Mse),
            other => Err(NnError::Config(format!("unknown loss {other:?}, expected bce or mse"))),
        }
    }
}

/// Mean loss of predictions `y_hat` against 0/1 targets.
pub fn loss(y_hat: &[f64], y: &[f64], kind: LossKind) -> Result<f64, NnError> {
    if y_hat.len() != y.len() {
        return Err(NnError::LengthMismatch { predictions: y_hat.len(), targets: y.len() });
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    Ok(match kind {
        LossKind::Bce => bce_value(y_hat, y),
        LossKind::Mse => mse_value(y_hat, y),
    })
}

/// SAT verdict for a prediction: 1 iff strictly above one half.
pub fn classify(y_hat: f64) -> u8 {
    u8::from(y_hat > 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_strict() {
        assert_eq!(classify(0.7), 1);
        assert_eq!(classify(0.5), 0);
        assert_eq!(classify(0.2), 0);
    }

    #[test]
    fn half_against_one() {
        let bce = loss(&[0.5], &[1.0], LossKind::Bce).unwrap();
        assert!((bce - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(loss(&[0.5], &[1.0], LossKind::Mse).unwrap(), 0.25);
    }

    #[test]
    fn perfect_limit() {
        for kind in [LossKind::Bce, LossKind::Mse] {
            let near = loss(&[1.0 - 1e-10, 1e-10], &[1.0, 0.0], kind).unwrap();
            assert!(near < 1e-9, "{kind}: {near}");
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(loss(&[0.5, 0.5], &[1.0], LossKind::Bce), Err(NnError::LengthMismatch { .. })));
    }

    #[test]
    fn parse() {
        assert_eq!("BCE".parse::<LossKind>().unwrap(), LossKind::Bce);
        assert_eq!("mse".parse::<LossKind>().unwrap(), LossKind::Mse);
        assert!("l1".parse::<LossKind>().is_err());
    }
}
