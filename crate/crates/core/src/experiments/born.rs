//! Convergence of repeated Born sampling to `|psi|^2`.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::collapse::BornSampler;
use crate::error::{DowError, Result};
use crate::wavefield::Wavefield;

/// Smallest expected count per chi-square bin; sparser cells are pooled.
pub const MIN_EXPECTED_PER_BIN: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BornConvergence {
    pub n: usize,
    /// Draws per grid cell.
    pub counts: Vec<u64>,
    /// Exact `|psi_i|^2 dV` per cell.
    pub expected: Vec<f64>,
    pub tv_distance: f64,
    pub chi2: f64,
    pub dof: usize,
    pub chi2_pvalue: f64,
}

impl BornConvergence {
    /// Empirical frequency of the cells in `cells`.
    pub fn frequency_of(&self, cells: impl IntoIterator<Item = usize>) -> f64 {
        cells.into_iter().map(|i| self.counts[i]).sum::<u64>() as f64 / self.n as f64
    }
}

/// Draws `n` samples and compares the per-cell histogram with `|psi|^2 dV`.
pub fn born_convergence<R: Rng + ?Sized>(psi: &Wavefield, n: usize, rng: &mut R) -> Result<BornConvergence> {
    if n < 1000 {
        return Err(DowError::Config(format!("need at least 1000 draws, got {n}")));
    }
    let sampler = BornSampler::new(psi)?;
    let mut counts = vec![0u64; psi.grid().len()];
    for _ in 0..n {
        counts[sampler.sample_cell(rng)] += 1;
    }
    let mut expected = psi.probabilities();
    let total: f64 = expected.iter().sum();
    expected.iter_mut().for_each(|p| *p /= total);

    let tv_distance = 0.5
        * counts
            .iter()
            .zip(&expected)
            .map(|(&c, p)| (c as f64 / n as f64 - p).abs())
            .sum::<f64>();

    let (chi2, dof) = pooled_chi_square(&counts, &expected, n);
    let chi2_pvalue = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| DowError::Config(e.to_string()))?
            .sf(chi2)
    };

    Ok(BornConvergence {
        n,
        counts,
        expected,
        tv_distance,
        chi2,
        dof,
        chi2_pvalue,
    })
}

/// Pearson chi-square after pooling consecutive cells until each bin expects
/// at least `MIN_EXPECTED_PER_BIN` draws.
fn pooled_chi_square(counts: &[u64], probs: &[f64], n: usize) -> (f64, usize) {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs += c as f64;
        exp += p * n as f64;
        if exp >= MIN_EXPECTED_PER_BIN {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => bins.push((obs, exp)),
        }
    }
    let chi2 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (chi2, bins.len().saturating_sub(1))
}
