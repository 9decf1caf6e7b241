//! The event engine: unitary evolution between interaction events, with each
//! event resolved as a collapse, a deformation, or nothing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::collapse::{apply_collapse, check_collapse, live_threshold, BornSampler, CollapsePolicy};
use crate::deformation::{apply_deformation, DeformationParams};
use crate::error::{DowError, Result};
use crate::evolution::{EvolutionConfig, Potential, Propagator};
use crate::grid::{GridSpec, Position, Region};
use crate::units::UnitSystem;
use crate::wavefield::Wavefield;

/// Interaction windows and energy profiles extend this many `extent`s.
pub const WINDOW_EXTENTS: f64 = 3.0;

/// A localised energy transfer.
///
/// Its energy density is a Gaussian bump of standard deviation `extent`
/// around `center` that integrates to `energy`. With `axis` set, the bump
/// depends on that coordinate only, which models an interaction with one
/// coordinate of a configuration-space field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionEvent {
    pub t: f64,
    pub center: Position,
    pub extent: f64,
    pub energy: f64,
    pub axis: Option<usize>,
}

impl InteractionEvent {
    pub fn new(t: f64, center: Position, extent: f64, energy: f64) -> Self {
        Self {
            t,
            center,
            extent,
            energy,
            axis: None,
        }
    }

    pub fn on_axis(mut self, axis: usize) -> Self {
        self.axis = Some(axis);
        self
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.energy >= 0.0 && self.energy.is_finite()) {
            return Err(DowError::Config(format!(
                "event energy must be >= 0, got {}",
                self.energy
            )));
        }
        if !(self.extent >= grid.dx() * (1.0 - 1e-12)) {
            return Err(DowError::Config(format!(
                "event extent {} is below the grid spacing {}",
                self.extent,
                grid.dx()
            )));
        }
        if let Some(a) = self.axis {
            if a >= grid.dim() {
                return Err(DowError::Config(format!("event axis {a} on a {}D grid", grid.dim())));
            }
        }
        Ok(())
    }

    /// Cells within `WINDOW_EXTENTS * extent` of the centre.
    pub fn window(&self) -> Region {
        let half = WINDOW_EXTENTS * self.extent;
        match self.axis {
            Some(axis) => Region::Slab {
                axis,
                lo: self.center.axis(axis) - half,
                hi: self.center.axis(axis) + half,
            },
            None => Region::Disc {
                center: self.center,
                radius: half,
            },
        }
    }

    /// Energy density of the bump at `pos`.
    pub fn energy_density(&self, pos: Position, dim: usize) -> f64 {
        let s2 = self.extent * self.extent;
        let (r2, active_dims) = match self.axis {
            Some(a) => ((pos.axis(a) - self.center.axis(a)).powi(2), 1),
            None => (pos.distance_sq(&self.center, dim), dim),
        };
        let norm = (2.0 * std::f64::consts::PI * s2).powf(-0.5 * active_dims as f64);
        self.energy * norm * (-r2 / (2.0 * s2)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Deformed,
    Collapsed(Position),
    NoEffect,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Deformed => "deformed",
            Outcome::Collapsed(_) => "collapsed",
            Outcome::NoEffect => "no_effect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub event: InteractionEvent,
    /// The step boundary the event was applied at.
    pub t: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthSample {
    pub t: f64,
    /// Effective position width, `(sum_i dx_i^-2)^(-1/2)`.
    pub delta_x: f64,
    /// Quadrature sum of the per-axis momentum spreads.
    pub delta_p: f64,
    pub norm: f64,
}

impl WidthSample {
    pub fn of(psi: &Wavefield, units: &UnitSystem) -> Self {
        Self {
            t: psi.t(),
            delta_x: psi.position_spread().effective_width(),
            delta_p: psi.momentum_spread(units).quadrature(),
            norm: psi.norm_sq(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub width_history: Vec<WidthSample>,
    pub events_log: Vec<EventRecord>,
    pub final_field: Wavefield,
    pub seed: u64,
}

impl TrajectoryResult {
    pub fn collapses(&self) -> impl Iterator<Item = &EventRecord> {
        self.events_log
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::Collapsed(_)))
    }
}

/// How a set of simultaneous events will act on the current field.
#[derive(Debug, Clone)]
pub enum GroupPlan {
    /// At least one event crosses its collapse criterion. The sampler covers
    /// the union of the collapsing events' regions.
    Collapse {
        sampler: BornSampler,
        collapsing: Vec<usize>,
    },
    /// Every event is sub-threshold; apply deformations in order.
    Deform,
    /// A collapse was triggered but the field has no amplitude in any of the
    /// collapsing regions.
    Vacant,
}

/// Decides the fate of events that fall on the same step boundary. All
/// criteria are evaluated against the same field.
pub fn plan_group(psi: &Wavefield, events: &[InteractionEvent], policy: &CollapsePolicy) -> Result<GroupPlan> {
    let collapsing: Vec<usize> = events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.energy > 0.0 && check_collapse(psi, e, policy))
        .map(|(i, _)| i)
        .collect();
    if collapsing.is_empty() {
        return Ok(GroupPlan::Deform);
    }
    let mut cells: Vec<usize> = collapsing
        .iter()
        .flat_map(|&i| policy.collapse_region(psi.grid(), &events[i]))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    match BornSampler::over_cells(psi, cells) {
        Ok(sampler) => Ok(GroupPlan::Collapse { sampler, collapsing }),
        Err(DowError::ZeroField) => Ok(GroupPlan::Vacant),
        Err(e) => Err(e),
    }
}

/// Outcomes for a collapse at `x0`: the first collapsing event whose window
/// holds `x0` records it, every other event in the group is superseded.
pub fn collapse_outcomes(
    events: &[InteractionEvent],
    collapsing: &[usize],
    x0: Position,
    policy: &CollapsePolicy,
    grid: &GridSpec,
) -> Vec<Outcome> {
    let cell = grid.nearest_cell(x0);
    let owner = collapsing
        .iter()
        .copied()
        .find(|&i| policy.collapse_region(grid, &events[i]).binary_search(&cell).is_ok())
        .unwrap_or(collapsing[0]);
    (0..events.len())
        .map(|i| {
            if i == owner {
                Outcome::Collapsed(x0)
            } else {
                Outcome::NoEffect
            }
        })
        .collect()
}

/// Applies sub-threshold events in order, each against the live spread left
/// by the previous one.
///
/// Under the indicator criterion an event can carry more energy than the
/// width law admits without crossing `D`; the law is undefined there and the
/// event is recorded as having no effect.
pub fn deform_in_order(
    psi: &Wavefield,
    events: &[InteractionEvent],
    deform: &DeformationParams,
    policy: &CollapsePolicy,
) -> Result<(Wavefield, Vec<Outcome>)> {
    let mut field = psi.clone();
    let mut outcomes = Vec::with_capacity(events.len());
    for e in events {
        if e.energy == 0.0 || e.energy >= live_threshold(&field, &policy.units)? {
            outcomes.push(Outcome::NoEffect);
            continue;
        }
        field = apply_deformation(&field, e, deform, &policy.units)?;
        outcomes.push(Outcome::Deformed);
    }
    Ok((field, outcomes))
}

/// Resolves a group of simultaneous events, drawing one uniform variate from
/// `rng` if a collapse occurs.
pub fn process_group<R: rand::Rng + ?Sized>(
    psi: &Wavefield,
    events: &[InteractionEvent],
    policy: &CollapsePolicy,
    deform: &DeformationParams,
    rng: &mut R,
) -> Result<(Wavefield, Vec<Outcome>)> {
    match plan_group(psi, events, policy)? {
        GroupPlan::Collapse { sampler, collapsing } => {
            let x0 = sampler.sample(rng);
            let out = apply_collapse(psi, x0, &policy.operator)?;
            let outcomes = collapse_outcomes(events, &collapsing, x0, policy, psi.grid());
            Ok((out, outcomes))
        }
        GroupPlan::Deform => deform_in_order(psi, events, deform, policy),
        GroupPlan::Vacant => Ok((psi.clone(), vec![Outcome::NoEffect; events.len()])),
    }
}

/// Step index of each event, checking order and span.
fn schedule(events: &[InteractionEvent], t0: f64, cfg: &EvolutionConfig) -> Result<Vec<usize>> {
    if events.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(DowError::UnsortedEvents);
    }
    let end = t0 + cfg.n_steps as f64 * cfg.dt;
    events
        .iter()
        .map(|e| {
            if !(e.t >= t0 - 0.5 * cfg.dt && e.t <= end + 0.5 * cfg.dt) {
                return Err(DowError::EventOutOfSpan { t: e.t, start: t0, end });
            }
            let k = ((e.t - t0) / cfg.dt).round().max(0.0) as usize;
            Ok(k.min(cfg.n_steps))
        })
        .collect()
}

/// Evolves `psi0` for `cfg.n_steps`, applying events at the nearest step
/// boundary. Deterministic for a given seed.
pub fn run_trajectory(
    psi0: &Wavefield,
    potential: &Potential,
    events: &[InteractionEvent],
    policy: &CollapsePolicy,
    deform: &DeformationParams,
    cfg: &EvolutionConfig,
    seed: u64,
) -> Result<TrajectoryResult> {
    policy.validate()?;
    policy.operator.validate(psi0.grid())?;
    deform.validate()?;
    for e in events {
        e.validate(psi0.grid())?;
    }
    let t0 = psi0.t();
    let steps = schedule(events, t0, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prop = Propagator::new(psi0.grid(), potential, cfg.dt, &cfg.units)?;

    let mut psi = psi0.clone();
    let mut width_history = Vec::with_capacity(cfg.n_steps + 1);
    let mut events_log = Vec::with_capacity(events.len());
    width_history.push(WidthSample::of(&psi, &cfg.units));

    let mut next = 0;
    for k in 0..=cfg.n_steps {
        let start = next;
        while next < events.len() && steps[next] == k {
            next += 1;
        }
        if next > start {
            let group = &events[start..next];
            let (field, outcomes) = process_group(&psi, group, policy, deform, &mut rng)?;
            psi = field;
            events_log.extend(group.iter().zip(outcomes).map(|(e, outcome)| EventRecord {
                event: *e,
                t: psi.t(),
                outcome,
            }));
        }
        if k < cfg.n_steps {
            prop.step_in_place(&mut psi)?;
            psi.set_t(t0 + (k + 1) as f64 * cfg.dt);
            width_history.push(WidthSample::of(&psi, &cfg.units));
        }
    }

    Ok(TrajectoryResult {
        width_history,
        events_log,
        final_field: psi,
        seed,
    })
}

/// Runs one trajectory per seed and maps each result through `f`. Results
/// come back in seed order whatever the thread count.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble_map<T, F>(
    psi0: &Wavefield,
    potential: &Potential,
    events: &[InteractionEvent],
    policy: &CollapsePolicy,
    deform: &DeformationParams,
    cfg: &EvolutionConfig,
    seeds: &[u64],
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(TrajectoryResult) -> T + Sync,
{
    seeds
        .par_iter()
        .map(|&seed| run_trajectory(psi0, potential, events, policy, deform, cfg, seed).map(&f))
        .collect()
}

pub fn run_ensemble(
    psi0: &Wavefield,
    potential: &Potential,
    events: &[InteractionEvent],
    policy: &CollapsePolicy,
    deform: &DeformationParams,
    cfg: &EvolutionConfig,
    seeds: &[u64],
) -> Result<Vec<TrajectoryResult>> {
    run_ensemble_map(psi0, potential, events, policy, deform, cfg, seeds, |r| r)
}
