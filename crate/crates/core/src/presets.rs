//! Named coefficient fields and forcings on the unit cell, shared by the
//! acceptance suite and the command line.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entire::ForcingField;
use crate::error::Error;
use crate::spectra::{cosine_well, CoefficientField, FourierSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// `∂²`.
    Laplacian,
    /// `∂² − (1 + cos 2πx)/2`.
    CosineWell,
    /// `∂² + (0.3 + 0.8 sin 2πx)∂ − (1 + cos 2πx)/2`, not self-adjoint.
    Drift,
    /// `∂² + 0.5 sin(2πx)∂ − 1 − 0.5 cos 2πx`.
    Truncation,
    /// `∂² − 1`.
    Damped,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Laplacian,
        Preset::CosineWell,
        Preset::Drift,
        Preset::Truncation,
        Preset::Damped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Laplacian => "laplacian",
            Preset::CosineWell => "cosine-well",
            Preset::Drift => "drift",
            Preset::Truncation => "truncation",
            Preset::Damped => "damped",
        }
    }

    pub fn coefficients(self) -> CoefficientField {
        let lap = CoefficientField::laplacian(1);
        match self {
            Preset::Laplacian => lap,
            Preset::CosineWell => lap.with_c(cosine_well(0.5)),
            Preset::Drift => lap
                .with_drift(vec![FourierSeries::mode_1d(0.3, 1, 0.0, 0.8)])
                .with_c(cosine_well(0.5)),
            Preset::Truncation => lap
                .with_drift(vec![FourierSeries::mode_1d(0.0, 1, 0.0, 0.5)])
                .with_c(FourierSeries::mode_1d(-1.0, 1, -0.5, 0.0)),
            Preset::Damped => lap.with_c(FourierSeries::constant(-1.0)),
        }
    }

    /// The forcing the preset's experiments use by default.
    pub fn forcing(self) -> ForcingField {
        match self {
            Preset::Laplacian => ForcingField::constant(1.0),
            Preset::CosineWell | Preset::Drift => ForcingField::zero(),
            Preset::Truncation => truncation_forcing(),
            Preset::Damped => quasi_periodic_forcing(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown preset {s:?}")))
    }
}

/// `0.5 + cos(2πx)·sin(2πt)`.
pub fn truncation_forcing() -> ForcingField {
    ForcingField {
        offset: 0.5,
        ..ForcingField::stationary(FourierSeries::mode_1d(0.0, 1, 1.0, 0.0))
    }
    .with_sinusoid(1.0, 2.0 * std::f64::consts::PI, 0.0)
}

/// `cos(2πx)·(sin t + sin √2 t)`.
pub fn quasi_periodic_forcing() -> ForcingField {
    ForcingField::stationary(FourierSeries::mode_1d(0.0, 1, 1.0, 0.0))
        .with_sinusoid(1.0, 1.0, 0.0)
        .with_sinusoid(1.0, SQRT_2, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("nope".parse::<Preset>().is_err());
    }
}
