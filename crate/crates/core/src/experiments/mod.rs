//! Canned experiments built on the event engine.

pub mod born;
pub mod double_slit;
pub mod entangled;
pub mod localization;

pub use born::{born_convergence, BornConvergence};
pub use double_slit::{
    double_slit, field_at_crossing, fringe_visibility, visibility, visibility_sweep, DoubleSlitConfig,
    DoubleSlitReport, ScreenHistogram, ShotRecord, SweepPoint, WhichPath,
};
pub use entangled::{
    analytic_conditional_spread, analytic_correlation, correlated_pair, entangled_pair, entangled_single_shot,
    EntangledConfig, EntangledReport,
};
pub use localization::{localization_table, TABLE_WIDTHS_NM};

/// Total-variation distance between two distributions on the same bins.
/// Inputs are normalised before comparison.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    0.5 * p.iter().zip(q).map(|(a, b)| (a / sp - b / sq).abs()).sum::<f64>()
}

/// Pearson correlation of paired samples.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
