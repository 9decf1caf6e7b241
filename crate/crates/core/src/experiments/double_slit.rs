//! Two-slit interference with optional which-path detectors.
//!
//! Each shot starts from the same packet. Detector events (if any) fire at
//! both slits on the step where the free packet centre reaches the barrier
//! plane; the screen event fires once half of the transmitted mass has passed
//! `screen_x` and Born-samples a cell in the screen slab.
//!
//! Shots only differ in their random draws, so the field after a collapse is
//! computed once per distinct collapse cell and shared.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::total_variation;
use crate::collapse::{apply_collapse, live_threshold, BornSampler, CollapseOperator, CollapsePolicy};
use crate::deformation::DeformationParams;
use crate::error::{DowError, Result};
use crate::evolution::{Barrier, Potential, Propagator, Slit};
use crate::grid::{GridSpec, Position, Region};
use crate::trajectory::{collapse_outcomes, deform_in_order, plan_group, GroupPlan, InteractionEvent, Outcome};
use crate::units::UnitSystem;
use crate::wavefield::{gaussian_packet, Wavefield};

/// Fraction of the transmitted mass that must lie beyond the screen plane
/// before the screen event fires.
pub const ARRIVAL_FRACTION: f64 = 0.5;

/// Minimum counts for a visibility estimate.
pub const MIN_VISIBILITY_COUNTS: u64 = 100;

/// Extrema below this fraction of the smoothed peak are outside the fringe
/// region and ignored.
pub const FRINGE_FLOOR: f64 = 0.05;

/// Neighbouring extrema closer than this fraction of the peak are shoulders
/// or noise, not fringes.
pub const FRINGE_PROMINENCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhichPath {
    pub energy: f64,
    pub extent: f64,
}

#[derive(Debug, Clone)]
pub struct DoubleSlitConfig {
    pub grid: GridSpec,
    pub units: UnitSystem,
    pub packet_center: Position,
    pub packet_sigma: f64,
    pub packet_k: [f64; 2],
    pub barrier: Barrier,
    pub screen_x: f64,
    /// Thickness of the detecting slab behind `screen_x`.
    pub screen_depth: f64,
    pub which_path: Option<WhichPath>,
    pub operator: CollapseOperator,
    pub deformation: DeformationParams,
    pub dt: f64,
    /// Shots whose packet has not arrived by `t_max` do not register.
    pub t_max: f64,
    pub n_shots: usize,
    pub seed0: u64,
}

impl Default for DoubleSlitConfig {
    fn default() -> Self {
        let grid = GridSpec::square(128, -20.0, 20.0).expect("static grid");
        Self {
            operator: CollapseOperator::default_for(&grid),
            grid,
            units: UnitSystem::natural(),
            packet_center: Position::at_xy(-12.0, 0.0),
            packet_sigma: 1.5,
            packet_k: [4.0, 0.0],
            // Four cells thick: on this grid the evanescent decay inside the
            // wall is capped at pi/dx, so a thinner wall leaks coherently.
            barrier: Barrier {
                position: -4.0,
                thickness: 1.25,
                height: 100.0,
                slits: vec![
                    Slit {
                        center: -2.0,
                        width: 1.0,
                    },
                    Slit {
                        center: 2.0,
                        width: 1.0,
                    },
                ],
            },
            screen_x: 6.0,
            screen_depth: 1.0,
            which_path: None,
            deformation: DeformationParams::default(),
            dt: 0.004,
            t_max: 10.0,
            n_shots: 10_000,
            seed0: 0,
        }
    }
}

impl DoubleSlitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.dim() != 2 {
            return Err(DowError::Config("double slit needs a 2D grid".into()));
        }
        self.units.validate()?;
        Potential::HardBarrierWithSlits(self.barrier.clone()).sample(&self.grid)?;
        if self.barrier.slits.is_empty() {
            return Err(DowError::Config("barrier has no slits".into()));
        }
        if !(self.screen_x > self.barrier.far_face()) {
            return Err(DowError::Config("screen must lie beyond the barrier".into()));
        }
        if !(self.screen_depth >= self.grid.dx() && self.screen_x + self.screen_depth <= self.grid.x_max()) {
            return Err(DowError::Config(
                "screen slab must be at least one cell deep and inside the grid".into(),
            ));
        }
        if self.n_shots == 0 {
            return Err(DowError::Config("n_shots must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.t_max > 0.0) {
            return Err(DowError::Config("dt and t_max must be positive".into()));
        }
        if !(self.packet_k[0] > 0.0) {
            return Err(DowError::Config(
                "packet must move towards the barrier (k_x > 0)".into(),
            ));
        }
        // Any initial amplitude already behind the wall would interfere with
        // the slit waves.
        if !(self.packet_center.x() + 4.0 * self.packet_sigma <= self.barrier.near_face()) {
            return Err(DowError::Config(
                "packet must start at least 4 sigma in front of the barrier".into(),
            ));
        }
        if let Some(wp) = self.which_path {
            if !(wp.energy >= 0.0) {
                return Err(DowError::Config("detector energy must be non-negative".into()));
            }
            for e in self.detector_events(0.0, wp) {
                e.validate(&self.grid)?;
            }
        }
        self.operator.validate(&self.grid)?;
        self.deformation.validate()
    }

    fn potential(&self) -> Potential {
        Potential::HardBarrierWithSlits(self.barrier.clone())
    }

    fn policy(&self) -> CollapsePolicy {
        CollapsePolicy::simple(self.units, self.operator)
    }

    /// Step on which the free packet centre reaches the barrier plane.
    pub fn crossing_step(&self) -> usize {
        let v = self.units.hbar * self.packet_k[0] / self.units.mass;
        ((self.barrier.position - self.packet_center.x()) / v / self.dt).round() as usize
    }

    fn max_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    fn detector_events(&self, t: f64, wp: WhichPath) -> Vec<InteractionEvent> {
        self.barrier
            .slits
            .iter()
            .map(|s| {
                InteractionEvent::new(
                    t,
                    Position::at_xy(self.barrier.position, s.center),
                    wp.extent,
                    wp.energy,
                )
            })
            .collect()
    }

    fn screen_region(&self) -> Region {
        Region::Slab {
            axis: 0,
            lo: self.screen_x,
            hi: self.screen_x + self.screen_depth,
        }
    }
}

/// Counts of screen hits per transverse cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenHistogram {
    /// `counts.len() + 1` edges along the screen axis.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Shots fired, whether or not they registered.
    pub n_shots: u64,
}

impl ScreenHistogram {
    /// One bin per grid cell along axis 1.
    pub fn for_grid(grid: &GridSpec, n_shots: u64) -> Self {
        let dx = grid.dx();
        let edges = (0..=grid.n()).map(|j| grid.x_min() + (j as f64 - 0.5) * dx).collect();
        Self {
            edges,
            counts: vec![0; grid.n()],
            n_shots,
        }
    }

    pub fn detected(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    /// Outcome of each slit detector, in slit order. Empty without detectors.
    pub which_path: Vec<Outcome>,
    /// Transverse coordinate of the screen hit.
    pub screen_y: Option<f64>,
}

impl ShotRecord {
    pub fn collapsed_at(&self) -> Option<Position> {
        self.which_path.iter().find_map(|o| match o {
            Outcome::Collapsed(p) => Some(*p),
            _ => None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DoubleSlitReport {
    pub histogram: ScreenHistogram,
    pub visibility: f64,
    /// Normalised screen pattern of the undisturbed field.
    pub oracle: Vec<f64>,
    pub tv_to_oracle: f64,
    /// Exact mean of the normalised histogram over shots: the screen patterns
    /// of every branch weighted by the Born probability of reaching it.
    pub expected_pattern: Vec<f64>,
    pub crossing_t: f64,
    /// Screen event time of the undisturbed field.
    pub detection_t: f64,
    /// Collapse threshold of the field on the crossing step.
    pub threshold_at_crossing: f64,
    pub shots: Vec<ShotRecord>,
    /// Undisturbed field at the screen event.
    pub screen_field: Wavefield,
}

/// Where a branch ends up when the screen event fires.
struct Arrival {
    field: Wavefield,
    sampler: Option<BornSampler>,
}

struct Scene {
    transmitted: Vec<usize>,
    beyond_screen: Vec<usize>,
    screen: Region,
    max_steps: usize,
    dt: f64,
}

impl Scene {
    fn new(cfg: &DoubleSlitConfig) -> Self {
        let g = &cfg.grid;
        let slab = |lo: f64| Region::Slab {
            axis: 0,
            lo,
            hi: g.x_max() + g.dx(),
        };
        Self {
            transmitted: slab(cfg.barrier.far_face()).cells(g),
            beyond_screen: slab(cfg.screen_x).cells(g),
            screen: cfg.screen_region(),
            max_steps: cfg.max_steps(),
            dt: cfg.dt,
        }
    }

    fn mass(psi: &Wavefield, cells: &[usize]) -> f64 {
        let a = psi.amps();
        cells.iter().map(|&i| a[i].norm_sqr()).sum()
    }

    fn arrived(&self, psi: &Wavefield) -> bool {
        let through = Self::mass(psi, &self.transmitted);
        through > 0.0 && Self::mass(psi, &self.beyond_screen) >= ARRIVAL_FRACTION * through
    }

    /// Steps `psi` (currently on step `k`) until the screen event fires.
    fn run_to_screen(&self, prop: &mut Propagator, mut psi: Wavefield, mut k: usize) -> Result<Arrival> {
        while !self.arrived(&psi) {
            if k >= self.max_steps {
                return Ok(Arrival {
                    field: psi,
                    sampler: None,
                });
            }
            prop.step_in_place(&mut psi)?;
            k += 1;
            psi.set_t(k as f64 * self.dt);
        }
        let sampler = match BornSampler::in_region(&psi, &self.screen) {
            Ok(s) => Some(s),
            Err(DowError::ZeroField) => None,
            Err(e) => return Err(e),
        };
        Ok(Arrival { field: psi, sampler })
    }
}

fn screen_pattern(psi: &Wavefield, screen: &Region) -> Vec<f64> {
    let grid = psi.grid();
    let amps = psi.amps();
    let mut out = vec![0.0; grid.n()];
    for idx in screen.cells(grid) {
        out[grid.unflatten(idx)[1]] += amps[idx].norm_sqr();
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|p| *p /= total);
    }
    out
}

/// The initial packet evolved to the crossing step.
pub fn field_at_crossing(cfg: &DoubleSlitConfig) -> Result<Wavefield> {
    cfg.validate()?;
    let mut prop = Propagator::new(&cfg.grid, &cfg.potential(), cfg.dt, &cfg.units)?;
    let mut psi = gaussian_packet(cfg.grid, cfg.packet_center, cfg.packet_sigma, cfg.packet_k)?.with_t(0.0);
    prop.run(&mut psi, cfg.crossing_step())?;
    Ok(psi)
}

/// Runs the ensemble. Shot `i` draws from its own generator seeded with
/// `seed0 + i`: one variate for a detector collapse (if any), then one for
/// the screen.
pub fn double_slit(cfg: &DoubleSlitConfig) -> Result<DoubleSlitReport> {
    let crossing = field_at_crossing(cfg)?;
    let k_c = cfg.crossing_step();
    let scene = Scene::new(cfg);
    let policy = cfg.policy();
    let potential = cfg.potential();
    let new_prop = || Propagator::new(&cfg.grid, &potential, cfg.dt, &cfg.units);

    let unitary = scene.run_to_screen(&mut new_prop()?, crossing.clone(), k_c)?;
    let screen_field = unitary.field.clone();
    let oracle = screen_pattern(&unitary.field, &scene.screen);
    let threshold_at_crossing = live_threshold(&crossing, &cfg.units)?;

    let events = match cfg.which_path {
        Some(wp) => cfg.detector_events(crossing.t(), wp),
        None => Vec::new(),
    };
    let plan = if events.is_empty() {
        GroupPlan::Deform
    } else {
        plan_group(&crossing, &events, &policy)?
    };

    let mut histogram = ScreenHistogram::for_grid(&cfg.grid, cfg.n_shots as u64);
    let rngs = (0..cfg.n_shots as u64).map(|i| ChaCha8Rng::seed_from_u64(cfg.seed0.wrapping_add(i)));
    let grid = cfg.grid;
    let screen_hit = |arrival: &Arrival, rng: &mut ChaCha8Rng| arrival.sampler.as_ref().map(|s| s.sample(rng).y());

    let mut expected_pattern = vec![0.0; grid.n()];
    let mut add_branch = |arrival: &Arrival, weight: f64| {
        if arrival.sampler.is_some() {
            for (e, p) in expected_pattern
                .iter_mut()
                .zip(screen_pattern(&arrival.field, &scene.screen))
            {
                *e += weight * p;
            }
        }
    };

    let shots: Vec<ShotRecord> = match plan {
        GroupPlan::Collapse { sampler, collapsing } => {
            let mut draws: Vec<(usize, ChaCha8Rng)> =
                rngs.map(|mut rng| (sampler.sample_cell(&mut rng), rng)).collect();
            let mut cells: Vec<usize> = draws.iter().map(|(c, _)| *c).collect();
            cells.sort_unstable();
            cells.dedup();
            let branches: BTreeMap<usize, Arrival> = cells
                .par_iter()
                .map(|&cell| {
                    let collapsed = apply_collapse(&crossing, grid.position(cell), &policy.operator)?;
                    Ok((cell, scene.run_to_screen(&mut new_prop()?, collapsed, k_c)?))
                })
                .collect::<Result<_>>()?;
            // Sampled cells carry almost all of the window mass at any
            // useful shot count.
            let amps = crossing.amps();
            for (cell, arrival) in &branches {
                add_branch(arrival, amps[*cell].norm_sqr());
            }
            draws
                .iter_mut()
                .map(|(cell, rng)| {
                    let x0 = grid.position(*cell);
                    ShotRecord {
                        which_path: collapse_outcomes(&events, &collapsing, x0, &policy, &grid),
                        screen_y: screen_hit(&branches[cell], rng),
                    }
                })
                .collect()
        }
        GroupPlan::Deform | GroupPlan::Vacant => {
            let (arrival, outcomes) = if events.is_empty() {
                (unitary, Vec::new())
            } else if matches!(plan, GroupPlan::Vacant) {
                (unitary, vec![Outcome::NoEffect; events.len()])
            } else {
                let (field, outcomes) = deform_in_order(&crossing, &events, &cfg.deformation, &policy)?;
                if outcomes.iter().all(|o| *o == Outcome::NoEffect) {
                    (unitary, outcomes)
                } else {
                    (scene.run_to_screen(&mut new_prop()?, field, k_c)?, outcomes)
                }
            };
            add_branch(&arrival, 1.0);
            rngs.map(|mut rng| ShotRecord {
                which_path: outcomes.clone(),
                screen_y: screen_hit(&arrival, &mut rng),
            })
            .collect()
        }
    };

    let total: f64 = expected_pattern.iter().sum();
    if total > 0.0 {
        expected_pattern.iter_mut().for_each(|p| *p /= total);
    }
    for y in shots.iter().filter_map(|s| s.screen_y) {
        histogram.counts[grid.nearest_index(y)] += 1;
    }
    let counts: Vec<f64> = histogram.counts.iter().map(|&c| c as f64).collect();
    let tv_to_oracle = if histogram.detected() > 0 {
        total_variation(&counts, &oracle)
    } else {
        1.0
    };

    Ok(DoubleSlitReport {
        visibility: visibility(&histogram)?,
        histogram,
        oracle,
        tv_to_oracle,
        expected_pattern,
        crossing_t: k_c as f64 * cfg.dt,
        detection_t: screen_field.t(),
        threshold_at_crossing,
        shots,
        screen_field,
    })
}

/// Fringe visibility of a screen histogram.
pub fn visibility(hist: &ScreenHistogram) -> Result<f64> {
    let n = hist.detected();
    if n < MIN_VISIBILITY_COUNTS {
        return Err(DowError::TooFewCounts(n));
    }
    let values: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    Ok(fringe_visibility(&values))
}

/// `(I_max - I_min) / (I_max + I_min)` over the central fringes.
///
/// The profile is smoothed with a 3-bin moving average and cut to the span
/// where it reaches `FRINGE_FLOOR` of its peak; extrema pairs that differ by
/// less than `FRINGE_PROMINENCE` of the peak are discarded. Starting from the local
/// maximum nearest the centroid, up to two further maxima on each side
/// are taken along with the minima between them; `I_max` and `I_min` are the
/// means of those extrema. A profile without interior minima has visibility 0.
pub fn fringe_visibility(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();

    // Strict interior extrema; a plateau counts once, at its midpoint.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        match runs.last_mut() {
            Some(r) if smooth[r.0] == smooth[i] => r.1 = i,
            _ => runs.push((i, i)),
        }
    }
    let peak = smooth.iter().copied().fold(0.0, f64::max);
    let inside = |i: usize| smooth[i] >= FRINGE_FLOOR * peak;
    let (Some(first), Some(last)) = ((0..n).find(|&i| inside(i)), (0..n).rev().find(|&i| inside(i))) else {
        return 0.0;
    };
    let mut extrema: Vec<(usize, bool)> = runs
        .windows(3)
        .filter_map(|w| {
            let (prev, cur, next) = (smooth[w[0].0], smooth[w[1].0], smooth[w[2].0]);
            let mid = (w[1].0 + w[1].1) / 2;
            if cur > prev && cur > next {
                Some((mid, true))
            } else if cur < prev && cur < next {
                Some((mid, false))
            } else {
                None
            }
        })
        .filter(|(i, _)| (first..=last).contains(i))
        .collect();
    // Dropping an adjacent max/min pair keeps the sequence alternating.
    while let Some((k, step)) = extrema
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, (smooth[w[0].0] - smooth[w[1].0]).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
    {
        if step >= FRINGE_PROMINENCE * peak {
            break;
        }
        extrema.drain(k..k + 2);
    }

    let total: f64 = smooth.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let centroid = smooth.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>() / total;
    let Some(center) = extrema
        .iter()
        .enumerate()
        .filter(|(_, (_, is_max))| *is_max)
        .min_by(|a, b| {
            let da = (a.1 .0 as f64 - centroid).abs();
            let db = (b.1 .0 as f64 - centroid).abs();
            da.total_cmp(&db)
        })
        .map(|(k, _)| k)
    else {
        return 0.0;
    };

    // Extrema alternate, so two maxima per side span four entries.
    let lo = center.saturating_sub(4);
    let hi = (center + 4).min(extrema.len() - 1);
    let window = &extrema[lo..=hi];
    let mean = |want_max: bool| {
        let vals: Vec<f64> = window
            .iter()
            .filter(|(_, m)| *m == want_max)
            .map(|(i, _)| smooth[*i])
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    match (mean(true), mean(false)) {
        (Some(i_max), Some(i_min)) if i_max + i_min > 0.0 => ((i_max - i_min) / (i_max + i_min)).clamp(0.0, 1.0),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Detector energy as a fraction of the crossing threshold.
    pub fraction: f64,
    pub energy: f64,
    pub visibility: f64,
    /// Visibility of the exact expected pattern, free of sampling noise.
    pub expected_visibility: f64,
    pub collapsed_shots: usize,
}

/// Visibility at detector energies `fraction * threshold_at_crossing`, with
/// the same seeds at every level.
pub fn visibility_sweep(cfg: &DoubleSlitConfig, extent: f64, fractions: &[f64]) -> Result<Vec<SweepPoint>> {
    let threshold = live_threshold(&field_at_crossing(cfg)?, &cfg.units)?;
    fractions
        .iter()
        .map(|&fraction| {
            let energy = fraction * threshold;
            let level = DoubleSlitConfig {
                which_path: Some(WhichPath { energy, extent }),
                ..cfg.clone()
            };
            let r = double_slit(&level)?;
            Ok(SweepPoint {
                fraction,
                energy,
                visibility: r.visibility,
                expected_visibility: fringe_visibility(&r.expected_pattern),
                collapsed_shots: r.shots.iter().filter(|s| s.collapsed_at().is_some()).count(),
            })
        })
        .collect()
}
