//! The sampled wavefield: construction, normalisation, and spreads in position
//! and momentum space.

use num_complex::Complex64;

use crate::error::{DowError, Result};
use crate::grid::{GridSpec, Position};
use crate::spectral::{wavenumbers, Spectral};
use crate::units::UnitSystem;

/// Relative tolerance that `normalize` guarantees on the norm.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Complex amplitudes on a grid at a physical time.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefield {
    grid: GridSpec,
    amps: Vec<Complex64>,
    t: f64,
}

/// Standard deviation of a distribution along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    dim: usize,
    axes: [f64; 2],
}

impl Spread {
    pub fn new(dim: usize, axes: [f64; 2]) -> Self {
        Self { dim, axes }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axis(&self, i: usize) -> f64 {
        self.axes[i]
    }

    /// The spread along axis 0; the whole answer for 1D fields.
    pub fn x(&self) -> f64 {
        self.axes[0]
    }

    pub fn axes(&self) -> &[f64] {
        &self.axes[..self.dim]
    }

    /// Width whose 1D collapse threshold equals the sum of the per-axis
    /// thresholds: `(sum_i s_i^-2)^(-1/2)`. Equals `x()` in 1D.
    pub fn effective_width(&self) -> f64 {
        let inv: f64 = self.axes().iter().map(|s| s.powi(-2)).sum();
        inv.powf(-0.5)
    }

    /// Root-sum-square over axes, used to summarise momentum spreads.
    pub fn quadrature(&self) -> f64 {
        self.axes().iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

impl Wavefield {
    pub fn new(grid: GridSpec, amps: Vec<Complex64>, t: f64) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(DowError::DimensionMismatch {
                expected: grid.len(),
                got: amps.len(),
            });
        }
        Ok(Self { grid, amps, t })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            amps: vec![Complex64::new(0.0, 0.0); grid.len()],
            t: 0.0,
        }
    }

    /// Samples `f` at every cell; the result is not normalised.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Position) -> Complex64) -> Self {
        let amps = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Self { grid, amps, t: 0.0 }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// `sum |psi_i|^2 dV`.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dv()
    }

    pub fn normalized(&self) -> Result<Self> {
        let mut out = self.clone();
        out.normalize_in_place()?;
        Ok(out)
    }

    pub fn normalize_in_place(&mut self) -> Result<()> {
        let norm = self.norm_sq();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(DowError::ZeroField);
        }
        let scale = norm.sqrt().recip();
        for z in &mut self.amps {
            *z *= scale;
        }
        Ok(())
    }

    /// Cell probabilities `|psi_i|^2 dV`.
    pub fn probabilities(&self) -> Vec<f64> {
        let dv = self.grid.dv();
        self.amps.iter().map(|z| z.norm_sqr() * dv).collect()
    }

    /// Marginal probability per cell along `axis`.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        marginal_of(&self.grid, &self.probabilities(), axis)
    }

    /// Mean position along each axis under `|psi|^2`.
    pub fn centroid(&self) -> Position {
        let probs = self.probabilities();
        let total: f64 = probs.iter().sum();
        let mut pos = [0.0; 2];
        for (axis, slot) in pos.iter_mut().enumerate().take(self.grid.dim()) {
            let m = marginal_of(&self.grid, &probs, axis);
            *slot = m.iter().enumerate().map(|(i, p)| p * self.grid.coord(i)).sum::<f64>() / total;
        }
        Position(pos)
    }

    /// Standard deviation of the `|psi|^2` position distribution per axis.
    pub fn position_spread(&self) -> Spread {
        let probs = self.probabilities();
        let coords = self.grid.coords();
        let mut axes = [0.0; 2];
        for (axis, slot) in axes.iter_mut().enumerate().take(self.grid.dim()) {
            let m = marginal_of(&self.grid, &probs, axis);
            *slot = weighted_std(&m, &coords);
        }
        Spread::new(self.grid.dim(), axes)
    }

    /// Standard deviation of `|psi~(p)|^2` with `p = hbar k` per axis.
    pub fn momentum_spread(&self, units: &UnitSystem) -> Spread {
        let spectrum = self.to_momentum_space();
        let weights: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr()).collect();
        let momenta: Vec<f64> = wavenumbers(&self.grid).into_iter().map(|k| units.hbar * k).collect();
        let mut axes = [0.0; 2];
        for (axis, slot) in axes.iter_mut().enumerate().take(self.grid.dim()) {
            let m = marginal_of(&self.grid, &weights, axis);
            *slot = weighted_std(&m, &momenta);
        }
        Spread::new(self.grid.dim(), axes)
    }

    /// Mean momentum per axis.
    pub fn momentum_mean(&self, units: &UnitSystem) -> [f64; 2] {
        let spectrum = self.to_momentum_space();
        let weights: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr()).collect();
        let ks = wavenumbers(&self.grid);
        let mut out = [0.0; 2];
        for (axis, slot) in out.iter_mut().enumerate().take(self.grid.dim()) {
            let m = marginal_of(&self.grid, &weights, axis);
            let total: f64 = m.iter().sum();
            *slot = units.hbar * m.iter().zip(&ks).map(|(w, k)| w * k).sum::<f64>() / total;
        }
        out
    }

    /// Unnormalised discrete Fourier transform of the amplitudes.
    pub fn to_momentum_space(&self) -> Vec<Complex64> {
        let mut data = self.amps.clone();
        Spectral::new(&self.grid).forward(&mut data);
        data
    }

    /// Inverse of [`Wavefield::to_momentum_space`].
    pub fn from_momentum_space(grid: GridSpec, spectrum: &[Complex64], t: f64) -> Result<Self> {
        let mut data = spectrum.to_vec();
        if data.len() != grid.len() {
            return Err(DowError::DimensionMismatch {
                expected: grid.len(),
                got: data.len(),
            });
        }
        Spectral::new(&grid).inverse(&mut data);
        Wavefield::new(grid, data, t)
    }

    /// Largest pointwise amplitude difference relative to the largest amplitude.
    pub fn max_relative_difference(&self, other: &Wavefield) -> f64 {
        let scale = self
            .amps
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max)
            / scale
    }
}

/// Sums per-cell values onto one axis.
pub(crate) fn marginal_of(grid: &GridSpec, values: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.n();
    if grid.dim() == 1 {
        return values.to_vec();
    }
    let mut out = vec![0.0; n];
    for (idx, v) in values.iter().enumerate() {
        let cell = grid.unflatten(idx);
        out[cell[axis]] += v;
    }
    out
}

fn weighted_std(weights: &[f64], points: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean = weights.iter().zip(points).map(|(w, x)| w * x).sum::<f64>() / total;
    let var = weights
        .iter()
        .zip(points)
        .map(|(w, x)| w * (x - mean).powi(2))
        .sum::<f64>()
        / total;
    var.max(0.0).sqrt()
}

/// Normalised Gaussian packet `exp(-|r - r0|^2 / (4 sigma^2)) exp(i k0 . r)`.
///
/// Requires `sigma >= 2 dx` and a 4 sigma margin between `center` and every
/// boundary.
pub fn gaussian_packet(grid: GridSpec, center: Position, sigma: f64, k0: [f64; 2]) -> Result<Wavefield> {
    let dx = grid.dx();
    if !(sigma >= 2.0 * dx) {
        return Err(DowError::UnresolvableWidth { sigma, dx });
    }
    for axis in 0..grid.dim() {
        let c = center.axis(axis);
        if c - 4.0 * sigma < grid.x_min() || c + 4.0 * sigma > grid.x_max() {
            return Err(DowError::OutOfDomain);
        }
    }
    let dim = grid.dim();
    let mut psi = Wavefield::from_fn(grid, |r| {
        let r2 = r.distance_sq(&center, dim);
        let phase: f64 = (0..dim).map(|i| k0[i] * r.axis(i)).sum();
        Complex64::from_polar((-r2 / (4.0 * sigma * sigma)).exp(), phase)
    });
    psi.normalize_in_place()?;
    Ok(psi)
}

pub fn normalize(psi: &Wavefield) -> Result<Wavefield> {
    psi.normalized()
}

pub fn position_spread(psi: &Wavefield) -> Spread {
    psi.position_spread()
}

pub fn momentum_spread(psi: &Wavefield, units: &UnitSystem) -> Spread {
    psi.momentum_spread(units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line() -> GridSpec {
        GridSpec::line(256, -10.0, 10.0).unwrap()
    }

    #[test]
    fn gaussian_spread_is_sigma() {
        let psi = gaussian_packet(line(), Position::at(0.0), 1.0, [0.0; 2]).unwrap();
        assert!((psi.norm_sq() - 1.0).abs() < NORM_TOLERANCE);
        let s = psi.position_spread().x();
        assert!((s - 1.0).abs() < 0.01, "{s}");
    }

    #[test]
    fn phase_factor_shifts_momentum() {
        let units = UnitSystem::natural();
        let psi = gaussian_packet(line(), Position::at(0.0), 1.0, [5.0, 0.0]).unwrap();
        let p = psi.momentum_mean(&units)[0];
        assert!((p - 5.0).abs() < 0.05, "{p}");
    }

    #[test]
    fn narrow_packet_is_rejected() {
        let g = line();
        let err = gaussian_packet(g, Position::at(0.0), 0.5 * g.dx(), [0.0; 2]).unwrap_err();
        assert!(matches!(err, DowError::UnresolvableWidth { .. }));
        let err = gaussian_packet(g, Position::at(7.0), 1.0, [0.0; 2]).unwrap_err();
        assert_eq!(err, DowError::OutOfDomain);
    }

    #[test]
    fn normalize_scales_and_rejects_zero() {
        let g = line();
        let psi = gaussian_packet(g, Position::at(0.0), 1.0, [0.0; 2]).unwrap();
        let doubled = Wavefield::new(g, psi.amps().iter().map(|z| z * 2.0).collect(), 0.0).unwrap();
        assert!((doubled.norm_sq() - 4.0).abs() < 1e-12);
        let back = doubled.normalized().unwrap();
        assert!(back.max_relative_difference(&psi) < 1e-12);
        assert_eq!(Wavefield::zeros(g).normalized().unwrap_err(), DowError::ZeroField);
    }

    #[test]
    fn delta_field_spread_below_dx() {
        let g = line();
        let mut psi = Wavefield::zeros(g);
        psi.amps_mut()[100] = Complex64::new(1.0, 0.0);
        let psi = psi.normalized().unwrap();
        assert!(psi.position_spread().x() <= g.dx());
    }

    #[test]
    fn uniform_field_spread_matches_closed_form() {
        // Uniform on [-L/2, L/2): variance L^2/12.
        let g = line();
        let psi = Wavefield::from_fn(g, |_| Complex64::new(1.0, 0.0))
            .normalized()
            .unwrap();
        let expected = g.length() / 12f64.sqrt();
        let s = psi.position_spread().x();
        assert!((s / expected - 1.0).abs() < 0.02, "{s} vs {expected}");
    }

    #[test]
    fn minimum_uncertainty_momentum_spread() {
        let units = UnitSystem::natural();
        let psi = gaussian_packet(line(), Position::at(0.0), 1.0, [0.0; 2]).unwrap();
        let dp = psi.momentum_spread(&units).x();
        assert!((dp - 0.5).abs() < 0.01, "{dp}");
    }

    #[test]
    fn plane_wave_has_lattice_minimum_momentum_spread() {
        let units = UnitSystem::natural();
        let g = line();
        let k = 2.0 * std::f64::consts::PI * 7.0 / g.length();
        let psi = Wavefield::from_fn(g, |r| Complex64::from_polar(1.0, k * r.x()))
            .normalized()
            .unwrap();
        let dp = psi.momentum_spread(&units).x();
        assert!(dp < 1e-6, "{dp}");
        assert!((psi.momentum_mean(&units)[0] - k).abs() < 1e-9);
    }

    #[test]
    fn two_dimensional_spreads_per_axis() {
        let g = GridSpec::square(64, -16.0, 16.0).unwrap();
        let psi = gaussian_packet(g, Position::at_xy(1.0, -2.0), 2.0, [1.0, 0.0]).unwrap();
        let s = psi.position_spread();
        assert!((s.axis(0) - 2.0).abs() < 0.02);
        assert!((s.axis(1) - 2.0).abs() < 0.02);
        assert!((s.effective_width() - 2.0 / 2f64.sqrt()).abs() < 0.02);
        let c = psi.centroid();
        assert!((c.x() - 1.0).abs() < 1e-9 && (c.y() + 2.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(x0 in -2.0..2.0f64, sigma in 0.3..1.5f64, k in -3.0..3.0f64, scale in 0.1..10.0f64) {
            let g = line();
            let psi = gaussian_packet(g, Position::at(x0), sigma, [k, 0.0]).unwrap();
            let scaled = Wavefield::new(g, psi.amps().iter().map(|z| z * scale).collect(), 0.0).unwrap();
            let once = scaled.normalized().unwrap();
            let twice = once.normalized().unwrap();
            prop_assert!((once.norm_sq() - 1.0).abs() < NORM_TOLERANCE);
            prop_assert!(twice.max_relative_difference(&once) < 1e-12);
        }

        #[test]
        fn spectral_round_trip(x0 in -2.0..2.0f64, sigma in 0.3..1.5f64, k in -3.0..3.0f64) {
            let g = line();
            let psi = gaussian_packet(g, Position::at(x0), sigma, [k, 0.0]).unwrap();
            let back = Wavefield::from_momentum_space(g, &psi.to_momentum_space(), psi.t()).unwrap();
            prop_assert!(back.max_relative_difference(&psi) < 1e-12);
        }

        #[test]
        fn gaussian_packets_respect_uncertainty(x0 in -2.0..2.0f64, sigma in 0.2..1.5f64, k in -3.0..3.0f64) {
            let units = UnitSystem::natural();
            let psi = gaussian_packet(line(), Position::at(x0), sigma, [k, 0.0]).unwrap();
            let product = psi.position_spread().x() * psi.momentum_spread(&units).x();
            prop_assert!(product >= 0.5 * (1.0 - 1e-6), "{}", product);
        }
    }
}
