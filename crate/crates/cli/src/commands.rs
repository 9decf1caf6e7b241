//! One function per subcommand. Each turns its config section into core
//! calls and collects the results; nothing here touches the disk.

use std::f64::consts::PI;

use dowsim_core::collapse::live_threshold;
use dowsim_core::experiments::{
    born_convergence, double_slit, entangled_pair, field_at_crossing, fringe_visibility, localization_table,
    visibility_sweep,
};
use dowsim_core::{
    free_spread, gaussian_packet, posteriors, run_trajectory, scores_from_ranks, EvolutionConfig, Outcome, Position,
    Potential, Propagator, RankingTable, UnitLabel, UnitSystem, Wavefield, WidthSample,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{BornField, Kind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{heatmap_pgm, Cell, Outputs, Table};

pub fn run(kind: Kind, cfg: &RunConfig, seed: u64) -> CliResult<Outputs> {
    let mut out = match kind {
        Kind::Evolve => evolve(cfg)?,
        Kind::Trajectory => trajectory(cfg, seed)?,
        Kind::DoubleSlit => double_slit_cmd(cfg, seed)?,
        Kind::BornCheck => born_check(cfg, seed)?,
        Kind::LocalizationTable => localization(cfg)?,
        Kind::Compare => compare(cfg)?,
        Kind::Entangle => entangle(cfg, seed)?,
    };
    out.set("command", kind.command());
    out.set("seed", seed);
    Ok(out)
}

fn width_table(samples: impl IntoIterator<Item = WidthSample>) -> Table {
    let mut t = Table::new("width_history", &["t", "delta_x", "delta_p", "norm"]);
    for s in samples {
        t.push(vec![s.t.into(), s.delta_x.into(), s.delta_p.into(), s.norm.into()]);
    }
    t
}

fn max_norm_drift(t: &Table) -> f64 {
    t.rows
        .iter()
        .filter_map(|r| match r[3] {
            Cell::F(n) => Some((n - 1.0).abs()),
            _ => None,
        })
        .fold(0.0, f64::max)
}

fn evolve(cfg: &RunConfig) -> CliResult<Outputs> {
    let s = cfg.evolve.clone().unwrap_or_default();
    let units = cfg.units()?;
    let grid = s.grid.build()?;
    let mut psi = s.packet.build(grid)?;
    let potential = s.potential.build()?;
    let mut prop = Propagator::new(&grid, &potential, s.dt, &units)?;

    let mut out = Outputs::default();
    let mut history = Vec::with_capacity(s.steps + 1);
    for k in 0..=s.steps {
        if k > 0 {
            prop.step_in_place(&mut psi)?;
            psi.set_t(k as f64 * s.dt);
        }
        history.push(WidthSample::of(&psi, &units));
        if s.heatmap_every > 0 && k % s.heatmap_every == 0 {
            out.heatmaps.push((format!("heatmap_{k:06}.pgm"), heatmap_pgm(&psi)));
        }
    }
    let last = *history.last().expect("at least the initial sample");
    let table = width_table(history);
    out.set("steps", s.steps);
    out.set("t_final", last.t);
    out.set("delta_x_final", last.delta_x);
    out.set("delta_p_final", last.delta_p);
    out.set("max_norm_drift", max_norm_drift(&table));
    if potential == Potential::Free && grid.dim() == 1 {
        let want = free_spread(s.packet.sigma, last.t, &units);
        out.set("delta_x_free_oracle", want);
        out.set("oracle_relative_error", last.delta_x / want - 1.0);
    }
    out.tables.push(table);
    Ok(out)
}

fn trajectory(cfg: &RunConfig, seed: u64) -> CliResult<Outputs> {
    let s = cfg.trajectory.clone().unwrap_or_default();
    let units = cfg.units()?;
    let grid = s.grid.build()?;
    let psi = s.packet.build(grid)?;
    let potential = s.potential.build()?;
    let events = s.events.iter().map(|e| e.build()).collect::<CliResult<Vec<_>>>()?;
    let policy = s.policy(units, &grid)?;
    let deform = s.deformation.build()?;
    let evo = EvolutionConfig::new(s.dt, s.steps, units)?;
    let r = run_trajectory(&psi, &potential, &events, &policy, &deform, &evo, seed)?;

    let mut out = Outputs::default();
    let mut log = Table::new("events", &["t", "energy", "outcome", "x", "y"]);
    for rec in &r.events_log {
        let (x, y) = match rec.outcome {
            Outcome::Collapsed(p) => (Some(p.x()), (grid.dim() == 2).then(|| p.y())),
            _ => (None, None),
        };
        log.push(vec![
            rec.t.into(),
            rec.event.energy.into(),
            rec.outcome.label().into(),
            x.into(),
            y.into(),
        ]);
    }
    let last = *r.width_history.last().expect("at least the initial sample");
    out.set("events", r.events_log.len());
    out.set("collapses", r.collapses().count());
    out.set(
        "outcomes",
        r.events_log.iter().map(|e| e.outcome.label()).collect::<Vec<_>>(),
    );
    out.set("delta_x_final", last.delta_x);
    if s.heatmap {
        out.heatmaps
            .push(("heatmap_final.pgm".into(), heatmap_pgm(&r.final_field)));
    }
    out.tables.push(log);
    out.tables.push(width_table(r.width_history));
    Ok(out)
}

fn double_slit_cmd(cfg: &RunConfig, seed: u64) -> CliResult<Outputs> {
    let s = cfg.double_slit.clone().unwrap_or_default();
    let units = cfg.units()?;
    let mut ds = s.build(units, seed)?;
    ds.which_path = s.which_path(|| Ok(live_threshold(&field_at_crossing(&ds)?, &units)?))?;
    ds.validate()?;
    let r = double_slit(&ds)?;

    let mut out = Outputs::default();
    let h = &r.histogram;
    let mut screen = Table::new("screen_histogram", &["y_lo", "y_hi", "count", "oracle", "expected"]);
    for (i, &c) in h.counts.iter().enumerate() {
        screen.push(vec![
            h.edges[i].into(),
            h.edges[i + 1].into(),
            c.into(),
            r.oracle[i].into(),
            r.expected_pattern[i].into(),
        ]);
    }
    let mut shots = Table::new("shots", &["shot", "collapsed_x", "collapsed_y", "screen_y"]);
    for (i, rec) in r.shots.iter().enumerate() {
        let at = rec.collapsed_at();
        shots.push(vec![
            i.into(),
            at.map(|p| p.x()).into(),
            at.map(|p| p.y()).into(),
            rec.screen_y.into(),
        ]);
    }
    out.set("shots", ds.n_shots);
    out.set("detected", h.detected());
    out.set("visibility", r.visibility);
    out.set("expected_visibility", fringe_visibility(&r.expected_pattern));
    out.set("oracle_visibility", fringe_visibility(&r.oracle));
    out.set("tv_to_oracle", r.tv_to_oracle);
    out.set("crossing_t", r.crossing_t);
    out.set("detection_t", r.detection_t);
    out.set("threshold_at_crossing", r.threshold_at_crossing);
    out.set("detector_energy", ds.which_path.map(|w| w.energy));
    out.set(
        "collapsed_shots",
        r.shots.iter().filter(|s| s.collapsed_at().is_some()).count(),
    );
    if s.heatmap {
        out.heatmaps
            .push(("heatmap_screen.pgm".into(), heatmap_pgm(&r.screen_field)));
    }
    out.tables.push(screen);
    out.tables.push(shots);

    if let Some(sw) = &s.sweep {
        let mut t = Table::new(
            "visibility_sweep",
            &[
                "fraction",
                "energy",
                "visibility",
                "expected_visibility",
                "collapsed_shots",
            ],
        );
        for p in visibility_sweep(&ds, sw.extent, &sw.fractions)? {
            t.push(vec![
                p.fraction.into(),
                p.energy.into(),
                p.visibility.into(),
                p.expected_visibility.into(),
                p.collapsed_shots.into(),
            ]);
        }
        out.tables.push(t);
    }
    Ok(out)
}

fn two_peak(grid: dowsim_core::GridSpec, left: f64, right: f64, sigma: f64, w: f64) -> CliResult<Wavefield> {
    if !(w > 0.0 && w < 1.0) {
        return Err(CliError::config(format!("left_weight must lie in (0, 1), got {w}")));
    }
    if !(sigma > 0.0) {
        return Err(CliError::config(format!("sigma must be positive, got {sigma}")));
    }
    let amp = (2.0 * PI * sigma * sigma).powf(-0.25);
    let g = |x: f64, c: f64| amp * (-(x - c).powi(2) / (4.0 * sigma * sigma)).exp();
    let psi = Wavefield::from_fn(grid, |p| {
        Complex64::new(w.sqrt() * g(p.x(), left) + (1.0 - w).sqrt() * g(p.x(), right), 0.0)
    });
    Ok(psi.normalized()?)
}

fn born_check(cfg: &RunConfig, seed: u64) -> CliResult<Outputs> {
    let s = cfg.born_check.clone().unwrap_or_default();
    let grid = s.grid.build()?;
    if grid.dim() != 1 {
        return Err(CliError::config("born-check runs on a 1D grid"));
    }
    let psi = match s.field {
        BornField::Gaussian { center, sigma } => gaussian_packet(grid, Position::at(center), sigma, [0.0; 2])?,
        BornField::TwoPeak {
            left,
            right,
            sigma,
            left_weight,
        } => two_peak(grid, left, right, sigma, left_weight)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = born_convergence(&psi, s.draws, &mut rng)?;

    let mut out = Outputs::default();
    let mut t = Table::new("born_histogram", &["cell", "x", "count", "frequency", "expected"]);
    for (i, (&c, &p)) in r.counts.iter().zip(&r.expected).enumerate() {
        t.push(vec![
            i.into(),
            grid.coord(i).into(),
            c.into(),
            (c as f64 / r.n as f64).into(),
            p.into(),
        ]);
    }
    out.set("draws", r.n);
    out.set("tv_distance", r.tv_distance);
    out.set("chi2", r.chi2);
    out.set("dof", r.dof);
    out.set("chi2_pvalue", r.chi2_pvalue);
    if let BornField::TwoPeak {
        left,
        right,
        left_weight,
        ..
    } = s.field
    {
        let mid = 0.5 * (left + right);
        let left_cells: Vec<usize> = (0..grid.len())
            .filter(|&i| (grid.coord(i) - mid) * (left - mid) > 0.0)
            .collect();
        out.set("left_weight", left_weight);
        out.set("left_fraction", r.frequency_of(left_cells));
    }
    out.tables.push(t);
    Ok(out)
}

fn localization(cfg: &RunConfig) -> CliResult<Outputs> {
    let s = cfg.localization_table.clone().unwrap_or_default();
    // Table widths are physical, so this command always uses the electron.
    if let Some(label) = &cfg.units {
        if UnitSystem::parse(label)?.label != UnitLabel::SiElectron {
            return Err(CliError::config("localization-table needs units = \"si-electron\""));
        }
    }
    if s.widths_nm.is_empty() {
        return Err(CliError::config("widths_nm is empty"));
    }
    let si = UnitSystem::si_electron();
    let widths: Vec<f64> = s.widths_nm.iter().map(|nm| nm * 1e-9).collect();
    let rows = localization_table(&si, &widths)?;

    let mut out = Outputs::default();
    let mut t = Table::new("localization_table", &["delta_x_nm", "energy_ev"]);
    for (nm, (_, ev)) in s.widths_nm.iter().zip(&rows) {
        t.push(vec![(*nm).into(), (*ev).into()]);
    }
    out.set(
        "rows",
        s.widths_nm
            .iter()
            .zip(&rows)
            .map(|(nm, (_, ev))| json!({ "delta_x_nm": nm, "energy_ev": ev }))
            .collect::<Vec<_>>(),
    );
    out.tables.push(t);
    Ok(out)
}

fn compare(cfg: &RunConfig) -> CliResult<Outputs> {
    let s = cfg.compare.clone().unwrap_or_default();
    let table = match &s.ranks {
        None => RankingTable::default_table(),
        Some(p) => {
            let path = cfg.resolve(p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            RankingTable::parse(&text)?
        }
    };
    let scores = scores_from_ranks(&table)?;
    let post = posteriors(&scores.iter().map(|&s| f64::from(s)).collect::<Vec<_>>())?;

    let mut out = Outputs::default();
    let mut t = Table::new("scores", &["model", "score", "posterior"]);
    for ((m, &sc), &p) in table.models.iter().zip(&scores).zip(&post) {
        t.push(vec![m.as_str().into(), u64::from(sc).into(), p.into()]);
    }
    out.set("criteria", table.criteria.clone());
    out.set("total", scores.iter().sum::<u32>());
    out.set(
        "models",
        table
            .models
            .iter()
            .zip(&scores)
            .zip(&post)
            .map(|((m, sc), p)| json!({ "model": m, "score": sc, "posterior": p }))
            .collect::<Vec<_>>(),
    );
    out.tables.push(t);
    Ok(out)
}

fn entangle(cfg: &RunConfig, seed: u64) -> CliResult<Outputs> {
    let s = cfg.entangle.clone().unwrap_or_default();
    let ec = s.build(cfg.units()?, seed)?;
    let r = entangled_pair(&ec)?;

    let mut out = Outputs::default();
    let mut t = Table::new("pairs", &["shot", "x_a", "x_b"]);
    for (i, (a, b)) in r.samples.iter().enumerate() {
        t.push(vec![i.into(), (*a).into(), (*b).into()]);
    }
    out.set("shots", ec.n_shots);
    out.set("s", ec.s);
    out.set("big_s", ec.big_s);
    out.set("correlation", r.correlation);
    out.set("field_correlation", r.field_correlation);
    out.set("analytic_correlation", r.analytic_correlation);
    out.set("conditional_spread", r.conditional_spread);
    out.set("analytic_conditional_spread", r.analytic_conditional_spread);
    out.set("marginal_tv", r.marginal_tv);
    out.set("post_collapse_spread", r.post_collapse_spread.to_vec());
    out.tables.push(t);
    Ok(out)
}
