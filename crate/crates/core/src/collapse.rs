//! Born-rule location sampling, the collapse operator, and the two collapse
//! criteria (energy threshold and indicator integral).

use num_complex::Complex64;
use rand::Rng;

use crate::error::{DowError, Result};
use crate::grid::{GridSpec, Position, Region};
use crate::trajectory::InteractionEvent;
use crate::units::UnitSystem;
use crate::wavefield::Wavefield;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorShape {
    /// All amplitude moves onto the sampled cell.
    DeltaLike,
    /// Multiplication by `exp(-|r - x0|^2 / (4 sigma_c^2))`.
    Gaussian,
}

/// Collapse operator template; the centre is supplied when it is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseOperator {
    pub shape: OperatorShape,
    pub sigma_c: f64,
}

impl CollapseOperator {
    pub fn gaussian(sigma_c: f64) -> Self {
        Self {
            shape: OperatorShape::Gaussian,
            sigma_c,
        }
    }

    pub fn delta_like() -> Self {
        Self {
            shape: OperatorShape::DeltaLike,
            sigma_c: 0.0,
        }
    }

    /// Gaussian of width `2 dx`.
    pub fn default_for(grid: &GridSpec) -> Self {
        Self::gaussian(2.0 * grid.dx())
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if self.shape == OperatorShape::Gaussian && !(self.sigma_c >= grid.dx() * (1.0 - 1e-12)) {
            return Err(DowError::Config(format!(
                "gaussian collapse operator width {} is below the grid spacing {}",
                self.sigma_c,
                grid.dx()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Collapse iff the transferred energy reaches `hbar^2 / (8 m dx^2)` of
    /// the live spread.
    SimpleThreshold,
    /// Collapse iff the squared-gradient integral over the region where the
    /// event's energy density exceeds `epsilon_c` is larger than
    /// `deformation_constant`.
    IndicatorIntegral { epsilon_c: f64, deformation_constant: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapsePolicy {
    pub criterion: Criterion,
    pub units: UnitSystem,
    pub operator: CollapseOperator,
}

impl CollapsePolicy {
    pub fn simple(units: UnitSystem, operator: CollapseOperator) -> Self {
        Self {
            criterion: Criterion::SimpleThreshold,
            units,
            operator,
        }
    }

    pub fn indicator(
        units: UnitSystem,
        operator: CollapseOperator,
        epsilon_c: f64,
        deformation_constant: f64,
    ) -> Result<Self> {
        let policy = Self {
            criterion: Criterion::IndicatorIntegral {
                epsilon_c,
                deformation_constant,
            },
            units,
            operator,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        self.units.validate()?;
        if let Criterion::IndicatorIntegral {
            epsilon_c,
            deformation_constant,
        } = self.criterion
        {
            if !(epsilon_c > 0.0 && deformation_constant > 0.0) {
                return Err(DowError::Config(
                    "indicator criterion needs epsilon_c > 0 and D > 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Cells where a collapse triggered by `event` may localise the field.
    pub fn collapse_region(&self, grid: &GridSpec, event: &InteractionEvent) -> Vec<usize> {
        match self.criterion {
            Criterion::SimpleThreshold => event.window().cells(grid),
            Criterion::IndicatorIntegral { epsilon_c, .. } => (0..grid.len())
                .filter(|&idx| event.energy_density(grid.position(idx), grid.dim()) > epsilon_c)
                .collect(),
        }
    }
}

/// Draws grid cells with probability proportional to `|psi_i|^2` over a fixed
/// set of candidate cells. One uniform variate per draw (inverse CDF).
#[derive(Debug, Clone)]
pub struct BornSampler {
    grid: GridSpec,
    cells: Vec<usize>,
    cdf: Vec<f64>,
}

impl BornSampler {
    pub fn new(psi: &Wavefield) -> Result<Self> {
        Self::over_cells(psi, (0..psi.grid().len()).collect())
    }

    pub fn in_region(psi: &Wavefield, region: &Region) -> Result<Self> {
        Self::over_cells(psi, region.cells(psi.grid()))
    }

    pub fn over_cells(psi: &Wavefield, cells: Vec<usize>) -> Result<Self> {
        let amps = psi.amps();
        let mut acc = 0.0;
        let cdf: Vec<f64> = cells
            .iter()
            .map(|&idx| {
                acc += amps[idx].norm_sqr();
                acc
            })
            .collect();
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(DowError::ZeroField);
        }
        Ok(Self {
            grid: *psi.grid(),
            cells,
            cdf,
        })
    }

    /// Probability mass covered by the candidate cells (for a normalised field).
    pub fn mass(&self, dv: f64) -> f64 {
        self.cdf.last().copied().unwrap_or(0.0) * dv
    }

    pub fn sample_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("sampler has cells");
        let u = rng.random::<f64>() * total;
        let k = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        self.cells[k]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        self.grid.position(self.sample_cell(rng))
    }
}

/// A grid-cell centre drawn with probability `|psi_i|^2 dV`.
pub fn born_sample<R: Rng + ?Sized>(psi: &Wavefield, rng: &mut R) -> Result<Position> {
    Ok(BornSampler::new(psi)?.sample(rng))
}

/// `C psi / ||C psi||` with the operator centred on the cell nearest `x0`.
pub fn apply_collapse(psi: &Wavefield, x0: Position, op: &CollapseOperator) -> Result<Wavefield> {
    let grid = *psi.grid();
    op.validate(&grid)?;
    let center = grid.nearest_cell(x0);
    let mut out = psi.clone();
    match op.shape {
        OperatorShape::DeltaLike => {
            let keep = psi.amps()[center];
            let phase = if keep.norm() > 0.0 {
                keep / keep.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let amps = out.amps_mut();
            amps.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            amps[center] = phase;
        }
        OperatorShape::Gaussian => {
            let c = grid.position(center);
            // Separable: the isotropic Gaussian is a product of per-axis factors.
            let factors: Vec<Vec<f64>> = (0..grid.dim())
                .map(|axis| {
                    (0..grid.n())
                        .map(|i| {
                            let d = grid.coord(i) - c.axis(axis);
                            (-d * d / (4.0 * op.sigma_c * op.sigma_c)).exp()
                        })
                        .collect()
                })
                .collect();
            for (idx, z) in out.amps_mut().iter_mut().enumerate() {
                let cell = grid.unflatten(idx);
                let w: f64 = factors.iter().enumerate().map(|(a, f)| f[cell[a]]).product();
                *z *= w;
            }
        }
    }
    out.normalize_in_place()?;
    Ok(out)
}

/// Minimum energy transfer localising a field of spread `delta_x`:
/// `hbar^2 / (8 m delta_x^2)`.
pub fn collapse_threshold(delta_x: f64, units: &UnitSystem) -> Result<f64> {
    if !(delta_x > 0.0) {
        return Err(DowError::NonpositiveWidth(delta_x));
    }
    Ok(units.hbar * units.hbar / (8.0 * units.mass * delta_x * delta_x))
}

/// Threshold for the field's measured spread (the effective width in 2D).
pub fn live_threshold(psi: &Wavefield, units: &UnitSystem) -> Result<f64> {
    collapse_threshold(psi.position_spread().effective_width(), units)
}

/// Squared-gradient integral of `psi` over cells where the event's energy
/// density exceeds `epsilon_c`. Gradients are periodic central differences.
pub fn indicator_integral(psi: &Wavefield, event: &InteractionEvent, epsilon_c: f64) -> f64 {
    let grid = psi.grid();
    let dim = grid.dim();
    let n = grid.n();
    let dx = grid.dx();
    let amps = psi.amps();
    let mut total = 0.0;
    for idx in 0..grid.len() {
        let pos = grid.position(idx);
        if event.energy_density(pos, dim) <= epsilon_c {
            continue;
        }
        let cell = grid.unflatten(idx);
        let mut grad_sq = 0.0;
        for axis in 0..dim {
            let mut fwd = cell;
            let mut bwd = cell;
            fwd[axis] = (cell[axis] + 1) % n;
            bwd[axis] = (cell[axis] + n - 1) % n;
            let d = (amps[grid.flatten(fwd)] - amps[grid.flatten(bwd)]) / (2.0 * dx);
            grad_sq += d.norm_sqr();
        }
        total += grad_sq;
    }
    total * grid.dv()
}

/// Whether `event` collapses `psi` under `policy`.
pub fn check_collapse(psi: &Wavefield, event: &InteractionEvent, policy: &CollapsePolicy) -> bool {
    match policy.criterion {
        Criterion::SimpleThreshold => match live_threshold(psi, &policy.units) {
            Ok(threshold) => event.energy >= threshold,
            Err(_) => false,
        },
        Criterion::IndicatorIntegral {
            epsilon_c,
            deformation_constant,
        } => indicator_integral(psi, event, epsilon_c) > deformation_constant,
    }
}
