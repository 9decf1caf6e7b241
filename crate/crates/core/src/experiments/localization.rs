//! Minimum energy transfer that localises a field to a given width.

use crate::collapse::collapse_threshold;
use crate::error::{DowError, Result};
use crate::units::UnitSystem;

/// Default widths in nanometres.
pub const TABLE_WIDTHS_NM: [f64; 4] = [1.0, 0.1, 0.01, 0.001];

/// `(width, energy in eV)` rows for widths given in the unit system's length
/// unit. Needs a unit system with a physical energy scale.
pub fn localization_table(units: &UnitSystem, widths: &[f64]) -> Result<Vec<(f64, f64)>> {
    widths
        .iter()
        .map(|&w| {
            let e = collapse_threshold(w, units)?;
            let ev = units.to_ev(e).ok_or_else(|| {
                DowError::Config(format!(
                    "unit system '{}' has no electronvolt conversion",
                    units.label.as_str()
                ))
            })?;
            Ok((w, ev))
        })
        .collect()
}
