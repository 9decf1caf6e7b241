//! Rank-based scoring of interpretations.
//!
//! Each criterion ranks the models 1..n (ties allowed). A rank `r` earns
//! `n + 1 - r` points; a model's posterior is its share of the total.

use crate::error::{DowError, Result};

/// Default ranking dataset: six interpretations over four criteria.
pub const DEFAULT_RANKS_CSV: &str = include_str!("../data/ranks.csv");

/// Qualitative criteria summary, shipped for display only.
pub const CRITERIA_SUMMARY_CSV: &str = include_str!("../data/criteria.csv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingTable {
    pub models: Vec<String>,
    pub criteria: Vec<String>,
    /// `ranks[model][criterion]`.
    pub ranks: Vec<Vec<u32>>,
}

impl RankingTable {
    pub fn new(models: Vec<String>, criteria: Vec<String>, ranks: Vec<Vec<u32>>) -> Result<Self> {
        let table = Self {
            models,
            criteria,
            ranks,
        };
        table.validate()?;
        Ok(table)
    }

    /// The bundled six-model table.
    pub fn default_table() -> Self {
        Self::parse(DEFAULT_RANKS_CSV).expect("bundled ranking table is valid")
    }

    /// Parses CSV text: a header `model,<criterion>...` then one row per model.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| DowError::Parse(e.to_string()))?;
        if header.len() < 2 {
            return Err(DowError::Parse(
                "header needs a model column and at least one criterion".into(),
            ));
        }
        let criteria: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();

        let mut models = Vec::new();
        let mut ranks = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| DowError::Parse(e.to_string()))?;
            if rec.len() != criteria.len() + 1 {
                return Err(DowError::Parse(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    criteria.len() + 1
                )));
            }
            models.push(rec[0].to_owned());
            let row = rec
                .iter()
                .skip(1)
                .map(|f| {
                    let digits = f.trim_end_matches(|c: char| c.is_ascii_alphabetic()).trim();
                    digits
                        .parse::<u32>()
                        .map_err(|_| DowError::Parse(format!("bad rank '{f}' for model '{}'", &rec[0])))
                })
                .collect::<Result<Vec<_>>>()?;
            ranks.push(row);
        }
        Self::new(models, criteria, ranks)
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.criteria.is_empty() {
            return Err(DowError::EmptyInput);
        }
        let n = self.n_models();
        if self.ranks.len() != n {
            return Err(DowError::DimensionMismatch {
                expected: n,
                got: self.ranks.len(),
            });
        }
        for (model, row) in self.models.iter().zip(&self.ranks) {
            if row.len() != self.criteria.len() {
                return Err(DowError::DimensionMismatch {
                    expected: self.criteria.len(),
                    got: row.len(),
                });
            }
            if let Some(&rank) = row.iter().find(|&&r| r == 0 || r as usize > n) {
                return Err(DowError::InvalidRank {
                    model: model.clone(),
                    rank,
                    n_models: n,
                });
            }
        }
        Ok(())
    }
}

/// Total reverse score per model, in table order.
pub fn scores_from_ranks(table: &RankingTable) -> Result<Vec<u32>> {
    table.validate()?;
    let n = table.n_models() as u32;
    Ok(table
        .ranks
        .iter()
        .map(|row| row.iter().map(|r| n + 1 - r).sum())
        .collect())
}

/// Normalised share of each score.
pub fn posteriors(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(DowError::EmptyInput);
    }
    if let Some(&bad) = scores.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(DowError::Config(format!("scores must be positive, got {bad}")));
    }
    let total: f64 = scores.iter().sum();
    Ok(scores.iter().map(|s| s / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_table_scores() {
        let t = RankingTable::default_table();
        assert_eq!(t.n_models(), 6);
        assert_eq!(t.criteria.len(), 4);
        let scores = scores_from_ranks(&t).unwrap();
        assert_eq!(scores, vec![12, 13, 11, 18, 8, 24]);
        assert_eq!(scores.iter().sum::<u32>(), 86);
    }

    #[test]
    fn default_table_posteriors() {
        let scores: Vec<f64> = scores_from_ranks(&RankingTable::default_table())
            .unwrap()
            .into_iter()
            .map(f64::from)
            .collect();
        let p = posteriors(&scores).unwrap();
        // 13/86 is 15.116%, which rounds to 15.12.
        let printed = [13.95, 15.12, 12.79, 20.93, 9.30, 27.91];
        for (got, want) in p.iter().zip(printed) {
            assert!((got * 100.0 - want).abs() <= 0.01, "{} vs {want}", got * 100.0);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_model() {
        let t = RankingTable::new(vec!["only".into()], vec!["c".into()], vec![vec![1]]).unwrap();
        assert_eq!(scores_from_ranks(&t).unwrap(), vec![1]);
        assert_eq!(posteriors(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn equal_scores_are_uniform() {
        let p = posteriors(&[5.0; 6]).unwrap();
        for v in p {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_out_of_range_rank() {
        let err = RankingTable::new(vec!["a".into(), "b".into()], vec!["c".into()], vec![vec![1], vec![3]]);
        assert!(matches!(err, Err(DowError::InvalidRank { rank: 3, .. })));
        let err = RankingTable::new(vec!["a".into()], vec!["c".into()], vec![vec![0]]);
        assert!(matches!(err, Err(DowError::InvalidRank { rank: 0, .. })));
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(posteriors(&[]), Err(DowError::EmptyInput));
        assert!(posteriors(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn parse_accepts_ordinal_suffixes() {
        let t = RankingTable::parse("model,a,b\nx,1st,2nd\ny,2 nd,1 st\n").unwrap();
        assert_eq!(t.ranks, vec![vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        assert!(RankingTable::parse("model,a,b\nx,1\n").is_err());
        assert!(RankingTable::parse("model,a\nx,one\n").is_err());
    }

    fn table_strategy() -> impl Strategy<Value = RankingTable> {
        (1usize..8, 1usize..5).prop_flat_map(|(n, c)| {
            proptest::collection::vec(proptest::collection::vec(1..=n as u32, c), n).prop_map(move |ranks| {
                RankingTable {
                    models: (0..n).map(|i| format!("m{i}")).collect(),
                    criteria: (0..c).map(|i| format!("c{i}")).collect(),
                    ranks,
                }
            })
        })
    }

    proptest! {
        #[test]
        fn posteriors_sum_to_one_and_scale(scores in proptest::collection::vec(0.1f64..1e3, 1..10), k in 1e-3f64..1e3) {
            let p = posteriors(&scores).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let scaled: Vec<f64> = scores.iter().map(|s| s * k).collect();
            let q = posteriors(&scaled).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn improving_a_rank_raises_the_score(t in table_strategy(), pick in any::<proptest::sample::Index>()) {
            let cells: Vec<(usize, usize)> = (0..t.n_models())
                .flat_map(|m| (0..t.criteria.len()).map(move |c| (m, c)))
                .filter(|&(m, c)| t.ranks[m][c] > 1)
                .collect();
            prop_assume!(!cells.is_empty());
            let (m, c) = cells[pick.index(cells.len())];
            let before = scores_from_ranks(&t).unwrap()[m];
            let mut better = t.clone();
            better.ranks[m][c] -= 1;
            prop_assert!(scores_from_ranks(&better).unwrap()[m] > before);
        }
    }
}
