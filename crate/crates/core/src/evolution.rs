//! Unitary propagation under the time-dependent Schrödinger equation using
//! symmetric (Strang) split-operator stepping.

use num_complex::Complex64;

use crate::error::{DowError, Result};
use crate::grid::{GridSpec, Position};
use crate::spectral::{wavenumbers, Spectral};
use crate::units::UnitSystem;
use crate::wavefield::Wavefield;

/// Largest potential phase `max|V| dt / hbar` accepted per step, in radians.
pub const PHASE_WRAP_GUARD: f64 = 0.5;

/// Default height of a hard barrier, in natural energy units.
pub const DEFAULT_BARRIER_HEIGHT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slit {
    pub center: f64,
    pub width: f64,
}

/// A slab of large constant potential normal to axis 0, optionally pierced by
/// slits along axis 1 (2D only).
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub position: f64,
    pub thickness: f64,
    pub height: f64,
    pub slits: Vec<Slit>,
}

impl Barrier {
    pub fn solid(position: f64, thickness: f64, height: f64) -> Self {
        Self {
            position,
            thickness,
            height,
            slits: Vec::new(),
        }
    }

    pub fn near_face(&self) -> f64 {
        self.position - 0.5 * self.thickness
    }

    pub fn far_face(&self) -> f64 {
        self.position + 0.5 * self.thickness
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.thickness > 0.0 && self.height.is_finite()) {
            return Err(DowError::Config(
                "barrier needs positive thickness and finite height".into(),
            ));
        }
        if dim == 1 && !self.slits.is_empty() {
            return Err(DowError::Config("slits require a 2D grid".into()));
        }
        let mut slits = self.slits.clone();
        slits.sort_by(|a, b| a.center.total_cmp(&b.center));
        for s in &slits {
            if !(s.width > 0.0) {
                return Err(DowError::Config(format!(
                    "slit width must be positive, got {}",
                    s.width
                )));
            }
        }
        for pair in slits.windows(2) {
            if pair[0].center + 0.5 * pair[0].width > pair[1].center - 0.5 * pair[1].width {
                return Err(DowError::Config("slits overlap".into()));
            }
        }
        Ok(())
    }

    fn value_at(&self, pos: Position, dim: usize) -> f64 {
        let x = pos.x();
        if x < self.near_face() || x >= self.far_face() {
            return 0.0;
        }
        if dim == 2 {
            let y = pos.y();
            if self.slits.iter().any(|s| (y - s.center).abs() < 0.5 * s.width) {
                return 0.0;
            }
        }
        self.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Free,
    HardBarrierWithSlits(Barrier),
    /// `V = stiffness/2 * |r - center|^2`.
    Harmonic {
        stiffness: f64,
        center: Position,
    },
    /// Values per cell in the grid's flat layout.
    Sampled(Vec<f64>),
}

impl Potential {
    pub fn harmonic(stiffness: f64) -> Self {
        Potential::Harmonic {
            stiffness,
            center: Position::default(),
        }
    }

    /// Potential values on every grid cell.
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let dim = grid.dim();
        match self {
            Potential::Free => Ok(vec![0.0; grid.len()]),
            Potential::HardBarrierWithSlits(barrier) => {
                barrier.validate(dim)?;
                Ok((0..grid.len())
                    .map(|idx| barrier.value_at(grid.position(idx), dim))
                    .collect())
            }
            Potential::Harmonic { stiffness, center } => {
                if !stiffness.is_finite() {
                    return Err(DowError::Config("harmonic stiffness must be finite".into()));
                }
                Ok((0..grid.len())
                    .map(|idx| 0.5 * stiffness * grid.position(idx).distance_sq(center, dim))
                    .collect())
            }
            Potential::Sampled(values) => {
                if values.len() != grid.len() {
                    return Err(DowError::DimensionMismatch {
                        expected: grid.len(),
                        got: values.len(),
                    });
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(DowError::Config("sampled potential has non-finite values".into()));
                }
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub units: UnitSystem,
}

impl EvolutionConfig {
    pub fn new(dt: f64, n_steps: usize, units: UnitSystem) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DowError::Config(format!("dt must be positive, got {dt}")));
        }
        units.validate()?;
        Ok(Self { dt, n_steps, units })
    }
}

/// Precomputed phase factors and FFT plans for repeated steps of fixed `dt`.
pub struct Propagator {
    grid: GridSpec,
    dt: f64,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    spectral: Spectral,
}

impl Propagator {
    pub fn new(grid: &GridSpec, potential: &Potential, dt: f64, units: &UnitSystem) -> Result<Self> {
        units.validate()?;
        if !dt.is_finite() {
            return Err(DowError::Config("dt must be finite".into()));
        }
        let values = potential.sample(grid)?;
        let v_max = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let phase = v_max * dt.abs() / units.hbar;
        if phase >= PHASE_WRAP_GUARD {
            return Err(DowError::StepTooLarge { phase });
        }
        let half_potential = values
            .iter()
            .map(|v| Complex64::from_polar(1.0, -0.5 * v * dt / units.hbar))
            .collect();

        let ks = wavenumbers(grid);
        let kinetic_coeff = -units.hbar * dt / (2.0 * units.mass);
        let kinetic = (0..grid.len())
            .map(|idx| {
                let cell = grid.unflatten(idx);
                let k2: f64 = (0..grid.dim()).map(|a| ks[cell[a]].powi(2)).sum();
                Complex64::from_polar(1.0, kinetic_coeff * k2)
            })
            .collect();

        Ok(Self {
            grid: *grid,
            dt,
            half_potential,
            kinetic,
            spectral: Spectral::new(grid),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `psi` by one step in place. The caller owns the time stamp
    /// bookkeeping through `psi.set_t`; this adds `dt`.
    pub fn step_in_place(&mut self, psi: &mut Wavefield) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(DowError::Config("wavefield grid does not match the propagator".into()));
        }
        if self.dt == 0.0 {
            return Ok(());
        }
        let t = psi.t();
        let amps = psi.amps_mut();
        mul_assign(amps, &self.half_potential);
        self.spectral.forward(amps);
        mul_assign(amps, &self.kinetic);
        self.spectral.inverse(amps);
        mul_assign(amps, &self.half_potential);
        psi.set_t(t + self.dt);
        Ok(())
    }

    /// Runs `n` steps, stamping the time as `t_start + k dt` so long runs do
    /// not accumulate rounding in the clock.
    pub fn run(&mut self, psi: &mut Wavefield, n: usize) -> Result<()> {
        let t0 = psi.t();
        for k in 0..n {
            self.step_in_place(psi)?;
            psi.set_t(t0 + (k + 1) as f64 * self.dt);
        }
        Ok(())
    }
}

fn mul_assign(a: &mut [Complex64], b: &[Complex64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
}

/// One split-operator step: half potential kick, full kinetic drift in
/// momentum space, half potential kick.
pub fn step(psi: &Wavefield, potential: &Potential, dt: f64, units: &UnitSystem) -> Result<Wavefield> {
    let mut prop = Propagator::new(psi.grid(), potential, dt, units)?;
    let mut out = psi.clone();
    prop.step_in_place(&mut out)?;
    Ok(out)
}

/// `cfg.n_steps` applications of [`step`].
pub fn evolve(psi: &Wavefield, potential: &Potential, cfg: &EvolutionConfig) -> Result<Wavefield> {
    let mut prop = Propagator::new(psi.grid(), potential, cfg.dt, &cfg.units)?;
    let mut out = psi.clone();
    prop.run(&mut out, cfg.n_steps)?;
    Ok(out)
}

/// Width of a free Gaussian packet after time `t`:
/// `sigma0 sqrt(1 + (hbar t / (2 m sigma0^2))^2)`.
pub fn free_spread(sigma0: f64, t: f64, units: &UnitSystem) -> f64 {
    let tau = units.hbar * t / (2.0 * units.mass * sigma0 * sigma0);
    sigma0 * (1.0 + tau * tau).sqrt()
}
