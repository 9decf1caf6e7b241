//! Joint collapse of a correlated two-coordinate field.
//!
//! The 2D grid is configuration space: axis 0 is `x_A`, axis 1 is `x_B`.
//! An event that only touches `x_A` still samples and collapses the pair.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{pearson, total_variation};
use crate::collapse::{apply_collapse, CollapseOperator, CollapsePolicy};
use crate::deformation::DeformationParams;
use crate::error::{DowError, Result};
use crate::evolution::{EvolutionConfig, Potential};
use crate::grid::{GridSpec, Position};
use crate::trajectory::{plan_group, run_trajectory, GroupPlan, InteractionEvent, TrajectoryResult};
use crate::units::UnitSystem;
use crate::wavefield::Wavefield;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct EntangledConfig {
    pub grid: GridSpec,
    pub units: UnitSystem,
    /// Width of the relative coordinate `x_A - x_B`.
    pub s: f64,
    /// Width of the centre-of-mass coordinate `x_A + x_B`.
    pub big_s: f64,
    /// Where the event sits on axis A, and its extent.
    pub event_center: f64,
    pub event_extent: f64,
    pub event_energy: f64,
    pub operator: CollapseOperator,
    pub n_shots: usize,
    pub seed0: u64,
    /// Cells per bin when comparing the `x_A` marginal.
    pub marginal_bin_cells: usize,
}

impl Default for EntangledConfig {
    fn default() -> Self {
        let grid = GridSpec::square(256, -8.0, 8.0).expect("static grid");
        Self {
            operator: CollapseOperator::default_for(&grid),
            grid,
            units: UnitSystem::natural(),
            s: 0.1,
            big_s: 4.0,
            event_center: 0.0,
            event_extent: 8.0 / 3.0,
            event_energy: 1.0,
            n_shots: 10_000,
            seed0: 0,
            marginal_bin_cells: 4,
        }
    }
}

impl EntangledConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.dim() != 2 {
            return Err(DowError::Config("entangled pair needs a 2D configuration grid".into()));
        }
        if !(self.s > 0.0 && self.big_s > 0.0) {
            return Err(DowError::Config("pair widths must be positive".into()));
        }
        if self.n_shots == 0 {
            return Err(DowError::Config("n_shots must be at least 1".into()));
        }
        if self.marginal_bin_cells == 0 || !self.grid.n().is_multiple_of(self.marginal_bin_cells) {
            return Err(DowError::Config("marginal_bin_cells must divide the grid size".into()));
        }
        self.units.validate()?;
        self.operator.validate(&self.grid)?;
        self.event().validate(&self.grid)
    }

    pub fn event(&self) -> InteractionEvent {
        InteractionEvent::new(
            0.0,
            Position::at_xy(self.event_center, 0.0),
            self.event_extent,
            self.event_energy,
        )
        .on_axis(0)
    }

    pub fn policy(&self) -> CollapsePolicy {
        CollapsePolicy::simple(self.units, self.operator)
    }
}

#[derive(Debug, Clone)]
pub struct EntangledReport {
    /// Sampled `(x_A, x_B)` per shot, in shot order.
    pub samples: Vec<(f64, f64)>,
    pub correlation: f64,
    /// Correlation of `|psi|^2` on the grid.
    pub field_correlation: f64,
    pub analytic_correlation: f64,
    /// Residual spread of `x_B` after regressing on `x_A`.
    pub conditional_spread: f64,
    pub analytic_conditional_spread: f64,
    /// TV between the sampled `x_A` histogram and the exact marginal.
    pub marginal_tv: f64,
    /// Mean per-axis spread of the field right after collapse.
    pub post_collapse_spread: [f64; 2],
}

/// `exp(-(a-b)^2/4s^2) exp(-(a+b)^2/4S^2)`, normalised.
pub fn correlated_pair(grid: GridSpec, s: f64, big_s: f64) -> Result<Wavefield> {
    if grid.dim() != 2 {
        return Err(DowError::Config("entangled pair needs a 2D configuration grid".into()));
    }
    let psi = Wavefield::from_fn(grid, |p| {
        let (a, b) = (p.x(), p.y());
        let v = -(a - b).powi(2) / (4.0 * s * s) - (a + b).powi(2) / (4.0 * big_s * big_s);
        Complex64::new(v.exp(), 0.0)
    });
    psi.normalized()
}

/// Correlation of `x_A` and `x_B` under `|psi|^2` for the pair state.
pub fn analytic_correlation(s: f64, big_s: f64) -> f64 {
    (big_s * big_s - s * s) / (big_s * big_s + s * s)
}

/// Standard deviation of `x_B` given `x_A` for the pair state.
pub fn analytic_conditional_spread(s: f64, big_s: f64) -> f64 {
    s * big_s / (s * s + big_s * big_s).sqrt()
}

fn field_correlation(psi: &Wavefield) -> f64 {
    let grid = psi.grid();
    let p = psi.probabilities();
    let c = psi.centroid();
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (i, w) in p.iter().enumerate() {
        let pos = grid.position(i);
        let (a, b) = (pos.x() - c.x(), pos.y() - c.y());
        sab += w * a * b;
        saa += w * a * a;
        sbb += w * b * b;
    }
    sab / (saa * sbb).sqrt()
}

fn marginal_tv(psi: &Wavefield, xs: impl Iterator<Item = f64>, bin_cells: usize) -> f64 {
    let grid = psi.grid();
    let exact: Vec<f64> = psi.marginal(0).chunks(bin_cells).map(|c| c.iter().sum()).collect();
    let mut counts = vec![0.0; exact.len()];
    for x in xs {
        counts[grid.nearest_index(x) / bin_cells] += 1.0;
    }
    total_variation(&counts, &exact)
}

/// Samples the joint collapse `n_shots` times. Each shot uses its own seed,
/// `seed0 + shot`.
pub fn entangled_pair(cfg: &EntangledConfig) -> Result<EntangledReport> {
    cfg.validate()?;
    let psi = correlated_pair(cfg.grid, cfg.s, cfg.big_s)?;
    let policy = cfg.policy();
    let events = [cfg.event()];
    let sampler = match plan_group(&psi, &events, &policy)? {
        GroupPlan::Collapse { sampler, .. } => sampler,
        _ => {
            return Err(DowError::Config(
                "event energy is below the collapse threshold of the pair".into(),
            ))
        }
    };

    let shots: Vec<(Position, [f64; 2])> = (0..cfg.n_shots as u64)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed0.wrapping_add(shot));
            let x0 = sampler.sample(&mut rng);
            let after = apply_collapse(&psi, x0, &policy.operator)?;
            let sp = after.position_spread();
            Ok((x0, [sp.axis(0), sp.axis(1)]))
        })
        .collect::<Result<_>>()?;

    let xa: Vec<f64> = shots.iter().map(|(p, _)| p.x()).collect();
    let xb: Vec<f64> = shots.iter().map(|(p, _)| p.y()).collect();
    let correlation = pearson(&xa, &xb);
    let n = xb.len() as f64;
    let mean_b = xb.iter().sum::<f64>() / n;
    let var_b = xb.iter().map(|b| (b - mean_b).powi(2)).sum::<f64>() / n;
    let conditional_spread = (var_b * (1.0 - correlation * correlation)).max(0.0).sqrt();
    let mut post = [0.0; 2];
    for (_, sp) in &shots {
        post[0] += sp[0] / n;
        post[1] += sp[1] / n;
    }

    Ok(EntangledReport {
        marginal_tv: marginal_tv(&psi, xa.iter().copied(), cfg.marginal_bin_cells),
        samples: xa.into_iter().zip(xb).collect(),
        correlation,
        field_correlation: field_correlation(&psi),
        analytic_correlation: analytic_correlation(cfg.s, cfg.big_s),
        conditional_spread,
        analytic_conditional_spread: analytic_conditional_spread(cfg.s, cfg.big_s),
        post_collapse_spread: post,
    })
}

/// One shot through the full event engine, for inspecting the event log.
pub fn entangled_single_shot(cfg: &EntangledConfig, seed: u64) -> Result<TrajectoryResult> {
    cfg.validate()?;
    let psi = correlated_pair(cfg.grid, cfg.s, cfg.big_s)?;
    let evo = EvolutionConfig::new(1e-3, 0, cfg.units)?;
    run_trajectory(
        &psi,
        &Potential::Free,
        &[cfg.event()],
        &cfg.policy(),
        &DeformationParams::default(),
        &evo,
        seed,
    )
}
