//! Sub-threshold deformation: the width law `dx(E) = dx0 (1 - (E/E_c)^gamma)`,
//! its accumulation over event sequences, and its realisation on a field.

use std::fmt;
use std::sync::Arc;

use crate::collapse::collapse_threshold;
use crate::error::{DowError, Result};
use crate::grid::GridSpec;
use crate::trajectory::InteractionEvent;
use crate::units::UnitSystem;
use crate::wavefield::{Spread, Wavefield};

/// Relative accuracy to which `apply_deformation` hits its target width.
pub const ENVELOPE_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulation {
    Additive,
    Multiplicative,
}

/// Width decrement per event for additive accumulation.
#[derive(Clone)]
pub enum AdditiveMap {
    /// `delta = dx0 (E / E_c(dx0))^gamma`, which agrees with the single-event
    /// law for the first event.
    Power,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for AdditiveMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdditiveMap::Power => f.write_str("Power"),
            AdditiveMap::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl AdditiveMap {
    /// Wraps a response map after checking `f(0) = 0` and monotonicity on a
    /// logarithmic probe grid spanning 1e-30..1e30.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if f(0.0) != 0.0 {
            return Err(DowError::Config("additive map must satisfy f(0) = 0".into()));
        }
        let mut prev = 0.0;
        for k in -60..=60 {
            let v = f(10f64.powf(k as f64 * 0.5));
            if !(v >= prev) {
                return Err(DowError::Config("additive map must be monotone nondecreasing".into()));
            }
            prev = v;
        }
        Ok(AdditiveMap::Custom(Arc::new(f)))
    }
}

#[derive(Debug, Clone)]
pub struct DeformationParams {
    pub gamma: f64,
    pub mode: Accumulation,
    pub additive_map: AdditiveMap,
}

impl Default for DeformationParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            mode: Accumulation::Multiplicative,
            additive_map: AdditiveMap::Power,
        }
    }
}

impl DeformationParams {
    pub fn multiplicative(gamma: f64) -> Result<Self> {
        let p = Self {
            gamma,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn additive(gamma: f64, additive_map: AdditiveMap) -> Result<Self> {
        let p = Self {
            gamma,
            mode: Accumulation::Additive,
            additive_map,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(DowError::Config(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// `dx0 (1 - (e / E_c(dx0))^gamma)` for `0 <= e < E_c(dx0)`.
pub fn deform_width(delta_x0: f64, e: f64, params: &DeformationParams, units: &UnitSystem) -> Result<f64> {
    params.validate()?;
    if !(e >= 0.0) {
        return Err(DowError::Config(format!("energy must be nonnegative, got {e}")));
    }
    let threshold = collapse_threshold(delta_x0, units)?;
    if e >= threshold {
        return Err(DowError::EnergyAtOrAboveThreshold { energy: e, threshold });
    }
    Ok(delta_x0 * (1.0 - (e / threshold).powf(params.gamma)))
}

/// Result of folding a sequence of energy transfers into a width.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutcome {
    /// Width after the last applied (sub-threshold) event.
    pub width: f64,
    /// Index of the first event that met or exceeded the live threshold.
    pub collapse_index: Option<usize>,
    /// Width before any event followed by the width after each applied event.
    pub trace: Vec<f64>,
}

pub fn deform_sequence(
    delta_x0: f64,
    energies: &[f64],
    params: &DeformationParams,
    units: &UnitSystem,
) -> Result<SequenceOutcome> {
    params.validate()?;
    if let Some(e) = energies.iter().find(|e| !(**e >= 0.0)) {
        return Err(DowError::Config(format!("energies must be nonnegative, got {e}")));
    }
    let initial_threshold = collapse_threshold(delta_x0, units)?;
    let mut width = delta_x0;
    let mut trace = vec![width];
    for (i, &e) in energies.iter().enumerate() {
        let threshold = collapse_threshold(width, units)?;
        if e >= threshold {
            return Ok(SequenceOutcome {
                width,
                collapse_index: Some(i),
                trace,
            });
        }
        let next = match params.mode {
            Accumulation::Multiplicative => width * (1.0 - (e / threshold).powf(params.gamma)),
            Accumulation::Additive => {
                let delta = match &params.additive_map {
                    AdditiveMap::Power => delta_x0 * (e / initial_threshold).powf(params.gamma),
                    AdditiveMap::Custom(f) => f(e),
                };
                width - delta
            }
        };
        if next <= 0.0 {
            // The additive form can exhaust the width before the energy test
            // fires; a fully compressed field is a collapsed one.
            return Ok(SequenceOutcome {
                width,
                collapse_index: Some(i),
                trace,
            });
        }
        width = next;
        trace.push(width);
    }
    Ok(SequenceOutcome {
        width,
        collapse_index: None,
        trace,
    })
}

/// Narrows `psi` to the width predicted by [`deform_width`] by multiplying it
/// with a real Gaussian envelope centred on the interaction site. The envelope
/// width is found by bisection; the phase of `psi` is untouched.
pub fn apply_deformation(
    psi: &Wavefield,
    event: &InteractionEvent,
    params: &DeformationParams,
    units: &UnitSystem,
) -> Result<Wavefield> {
    if event.energy == 0.0 {
        return Ok(psi.clone());
    }
    let current = psi.position_spread().effective_width();
    let target = deform_width(current, event.energy, params, units)?;
    if target > current * (1.0 + 1e-12) {
        return Err(DowError::TargetUnreachable { target, current });
    }

    let grid = *psi.grid();
    let density: Vec<f64> = psi.amps().iter().map(|z| z.norm_sqr()).collect();
    let width_for = |w: f64| enveloped_width(&grid, &density, event, w);

    let mut lo = (grid.dx() / 8.0).ln();
    let mut hi = (1e3 * grid.length()).ln();
    if width_for(lo.exp()) > target {
        return Err(DowError::TargetUnreachable { target, current });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let w = width_for(mid.exp());
        if (w - target).abs() <= 1e-6 * target {
            lo = mid;
            hi = mid;
            break;
        }
        if w > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let w = (0.5 * (lo + hi)).exp();
    let achieved = width_for(w);
    if (achieved - target).abs() > ENVELOPE_TOLERANCE * target {
        return Err(DowError::TargetUnreachable { target, current });
    }

    let factors = envelope_factors(&grid, event, w);
    let mut out = psi.clone();
    for (idx, z) in out.amps_mut().iter_mut().enumerate() {
        *z *= envelope_at(&grid, &factors, idx);
    }
    out.normalize_in_place()?;
    Ok(out)
}

/// Per-axis envelope factors `exp(-(x - c)^2 / (4 w^2))`; axes the event does
/// not act on get `None`.
fn envelope_factors(grid: &GridSpec, event: &InteractionEvent, w: f64) -> Vec<Option<Vec<f64>>> {
    (0..grid.dim())
        .map(|axis| {
            if event.axis.is_some_and(|a| a != axis) {
                return None;
            }
            let c = event.center.axis(axis);
            Some(
                (0..grid.n())
                    .map(|i| {
                        let d = grid.coord(i) - c;
                        (-d * d / (4.0 * w * w)).exp()
                    })
                    .collect(),
            )
        })
        .collect()
}

fn envelope_at(grid: &GridSpec, factors: &[Option<Vec<f64>>], idx: usize) -> f64 {
    let cell = grid.unflatten(idx);
    factors
        .iter()
        .enumerate()
        .filter_map(|(a, f)| f.as_ref().map(|f| f[cell[a]]))
        .product()
}

fn enveloped_width(grid: &GridSpec, density: &[f64], event: &InteractionEvent, w: f64) -> f64 {
    let factors = envelope_factors(grid, event, w);
    let weighted: Vec<f64> = density
        .iter()
        .enumerate()
        .map(|(idx, d)| {
            let e = envelope_at(grid, &factors, idx);
            d * e * e
        })
        .collect();
    if !(weighted.iter().sum::<f64>() > 0.0) {
        return 0.0;
    }
    let coords = grid.coords();
    let mut axes = [0.0; 2];
    for (axis, slot) in axes.iter_mut().enumerate().take(grid.dim()) {
        let m = crate::wavefield::marginal_of(grid, &weighted, axis);
        let total: f64 = m.iter().sum();
        let mean = m.iter().zip(&coords).map(|(p, x)| p * x).sum::<f64>() / total;
        let var = m.iter().zip(&coords).map(|(p, x)| p * (x - mean).powi(2)).sum::<f64>() / total;
        *slot = var.max(0.0).sqrt();
    }
    let spread = Spread::new(grid.dim(), axes);
    if spread.axes().contains(&0.0) {
        return 0.0;
    }
    spread.effective_width()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Position;
    use crate::wavefield::gaussian_packet;
    use proptest::prelude::*;

    fn natural() -> UnitSystem {
        UnitSystem::natural()
    }

    fn gamma(g: f64) -> DeformationParams {
        DeformationParams::multiplicative(g).unwrap()
    }

    #[test]
    fn width_law_examples() {
        let u = natural();
        let ec = collapse_threshold(1.0, &u).unwrap();
        assert_eq!(deform_width(1.0, 0.0, &gamma(1.0), &u).unwrap(), 1.0);
        assert!((deform_width(1.0, ec / 2.0, &gamma(1.0), &u).unwrap() - 0.5).abs() < 1e-15);
        assert!((deform_width(1.0, ec / 2.0, &gamma(2.0), &u).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(
            deform_width(1.0, ec, &gamma(1.0), &u),
            Err(DowError::EnergyAtOrAboveThreshold { .. })
        ));
    }

    #[test]
    fn gamma_below_one_is_rejected() {
        assert!(DeformationParams::multiplicative(0.5).is_err());
    }

    #[test]
    fn empty_sequence_keeps_width() {
        let out = deform_sequence(1.0, &[], &gamma(1.0), &natural()).unwrap();
        assert_eq!(out.width, 1.0);
        assert_eq!(out.collapse_index, None);
    }

    #[test]
    fn single_event_at_threshold_collapses() {
        let out = deform_sequence(1.0, &[0.125], &gamma(1.0), &natural()).unwrap();
        assert_eq!(out.collapse_index, Some(0));
    }

    #[test]
    fn additive_power_map_matches_single_event_law() {
        let u = natural();
        let p = DeformationParams::additive(1.5, AdditiveMap::Power).unwrap();
        let single = deform_width(2.0, 0.01, &p, &u).unwrap();
        let seq = deform_sequence(2.0, &[0.01], &p, &u).unwrap();
        assert!((seq.width - single).abs() < 1e-15);
    }

    #[test]
    fn additive_custom_map_and_exhaustion() {
        let u = natural();
        let p = DeformationParams::additive(1.0, AdditiveMap::custom(|e| 10.0 * e).unwrap()).unwrap();
        let out = deform_sequence(1.0, &[0.01, 0.02], &p, &u).unwrap();
        assert!((out.width - 0.7).abs() < 1e-12);
        // 0.05 -> delta 0.5, then 0.06 -> delta 0.6 exhausts the width.
        let out = deform_sequence(1.0, &[0.05, 0.06], &p, &u).unwrap();
        assert_eq!(out.collapse_index, Some(1));
        assert!(AdditiveMap::custom(|e| e + 1.0).is_err());
        assert!(AdditiveMap::custom(|e| -e).is_err());
    }

    #[test]
    fn zero_energy_event_leaves_field() {
        let g = GridSpec::line(256, -10.0, 10.0).unwrap();
        let psi = gaussian_packet(g, Position::at(0.0), 1.0, [0.0; 2]).unwrap();
        let ev = InteractionEvent::new(0.0, Position::at(0.0), 1.0, 0.0);
        assert_eq!(apply_deformation(&psi, &ev, &gamma(1.0), &natural()).unwrap(), psi);
    }

    #[test]
    fn half_threshold_halves_gaussian() {
        let u = natural();
        let g = GridSpec::line(256, -10.0, 10.0).unwrap();
        let psi = gaussian_packet(g, Position::at(0.0), 1.0, [1.0, 0.0]).unwrap();
        let ev = InteractionEvent::new(0.0, Position::at(0.0), 1.0, 0.0625);
        let out = apply_deformation(&psi, &ev, &gamma(1.0), &u).unwrap();
        let s = out.position_spread().x();
        assert!((s - 0.5).abs() < 0.005, "{s}");
        assert!((out.norm_sq() - 1.0).abs() < 1e-12);
        let product = s * out.momentum_spread(&u).x();
        assert!(product >= 0.5 * (1.0 - 1e-6));
        // Phase untouched: amp ratios are real and positive.
        for (a, b) in psi.amps().iter().zip(out.amps()).skip(100).take(50) {
            let r = b / a;
            assert!(r.im.abs() < 1e-9 * r.re.abs() && r.re > 0.0);
        }
    }

    #[test]
    fn measured_spread_feeds_the_next_threshold() {
        // Field-level fold tracks the scalar multiplicative fold to 1% per step.
        let u = natural();
        let params = gamma(1.0);
        let g = GridSpec::line(512, -16.0, 16.0).unwrap();
        let mut psi = gaussian_packet(g, Position::at(0.0), 2.0, [0.0; 2]).unwrap();
        let energies = [0.01, 0.02, 0.03];
        let scalar = deform_sequence(psi.position_spread().x(), &energies, &params, &u).unwrap();
        assert_eq!(scalar.collapse_index, None);
        for (i, &e) in energies.iter().enumerate() {
            let ev = InteractionEvent::new(0.0, Position::at(0.0), 1.0, e);
            psi = apply_deformation(&psi, &ev, &params, &u).unwrap();
            let measured = psi.position_spread().x();
            assert!((measured / scalar.trace[i + 1] - 1.0).abs() < 0.01);
        }
    }

    proptest! {
        #[test]
        fn width_law_is_the_closed_form(dx0 in 0.1..10.0f64, frac in 0.0..0.999f64, g in 1.0..4.0f64) {
            let u = natural();
            let ec = collapse_threshold(dx0, &u).unwrap();
            let e = frac * ec;
            let got = deform_width(dx0, e, &gamma(g), &u).unwrap();
            prop_assert_eq!(got, dx0 * (1.0 - (e / ec).powf(g)));
        }

        #[test]
        fn width_law_is_strictly_decreasing(dx0 in 0.1..10.0f64, a in 0.0..0.99f64, b in 0.0..0.99f64, g in 1.0..4.0f64) {
            prop_assume!(a < b);
            let u = natural();
            let ec = collapse_threshold(dx0, &u).unwrap();
            let wa = deform_width(dx0, a * ec, &gamma(g), &u).unwrap();
            let wb = deform_width(dx0, b * ec, &gamma(g), &u).unwrap();
            prop_assert!(wb < wa);
        }

        #[test]
        fn linear_law_is_identity_on_energy_fraction(frac in 0.0..0.999f64) {
            let u = natural();
            let ec = collapse_threshold(1.0, &u).unwrap();
            let w = deform_width(1.0, frac * ec, &gamma(1.0), &u).unwrap();
            prop_assert!(((1.0 - w) - frac).abs() < 1e-12);
        }

        #[test]
        fn sequence_trace_is_nonincreasing(energies in proptest::collection::vec(0.0..0.2f64, 0..12), g in 1.0..3.0f64, additive in any::<bool>()) {
            let u = natural();
            let params = if additive {
                DeformationParams::additive(g, AdditiveMap::Power).unwrap()
            } else {
                gamma(g)
            };
            let out = deform_sequence(1.0, &energies, &params, &u).unwrap();
            for pair in out.trace.windows(2) {
                prop_assert!(pair[1] <= pair[0]);
            }
            prop_assert!(out.width > 0.0);
        }
    }
}
