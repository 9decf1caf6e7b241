//! Unit systems carrying the action scale and particle mass.

use crate::error::{DowError, Result};

/// Reduced Planck constant in J s (CODATA 2018, exact).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Electron rest mass in kg (CODATA 2018).
pub const ELECTRON_MASS_SI: f64 = 9.109_383_701_5e-31;
/// Elementary charge in C, i.e. joules per electronvolt (exact).
pub const JOULES_PER_EV: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitLabel {
    /// hbar = m = 1, dimensionless lengths and energies.
    Natural,
    /// SI units with the electron mass: metres, seconds, joules.
    SiElectron,
}

impl UnitLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitLabel::Natural => "natural",
            UnitLabel::SiElectron => "SI-electron",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
    pub label: UnitLabel,
}

impl UnitSystem {
    pub fn natural() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            label: UnitLabel::Natural,
        }
    }

    pub fn si_electron() -> Self {
        Self {
            hbar: HBAR_SI,
            mass: ELECTRON_MASS_SI,
            label: UnitLabel::SiElectron,
        }
    }

    /// A natural-style system with custom scales.
    pub fn custom(hbar: f64, mass: f64) -> Result<Self> {
        let units = Self {
            hbar,
            mass,
            label: UnitLabel::Natural,
        };
        units.validate()?;
        Ok(units)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(DowError::Config(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(DowError::Config(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }

    /// Converts an energy in this system's unit to electronvolts, when the
    /// system has a physical energy unit.
    pub fn to_ev(&self, energy: f64) -> Option<f64> {
        match self.label {
            UnitLabel::SiElectron => Some(energy / JOULES_PER_EV),
            UnitLabel::Natural => None,
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        match label.to_ascii_lowercase().as_str() {
            "natural" => Ok(Self::natural()),
            "si-electron" | "si_electron" | "si" => Ok(Self::si_electron()),
            other => Err(DowError::Config(format!("unknown unit system '{other}'"))),
        }
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::natural()
    }
}
