//! Parameter sweeps: one scored cell per (method, value).

use std::fmt::Write as _;

use rayon::prelude::*;
use staple_forge_core::corpus::{GoldSet, NormalizationPolicy, Prompt};
use staple_forge_core::metrics::{percent, score_corpus, CorpusScore};
use staple_forge_core::methods::{MethodParams, MethodRegistry, Models};

use crate::error::{CliError, Result};

pub const HEADER: &str = "method\tparam\tprecision\tweighted_recall\tweighted_f1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub n_values: Vec<usize>,
    pub n_prime_values: Vec<usize>,
    pub m_values: Vec<usize>,
    /// `n` used by the paraphrase and ensemble rows.
    pub fixed_n: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            n_values: vec![5, 10, 15, 20],
            n_prime_values: vec![1, 3, 5],
            m_values: vec![2, 4, 6, 8],
            fixed_n: 10,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let all = self.n_values.iter().chain(&self.n_prime_values).chain(&self.m_values);
        if self.fixed_n == 0 || all.into_iter().any(|&v| v == 0) {
            return Err(CliError::input("sweep values must all be at least 1"));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.n_values.is_empty() && self.n_prime_values.is_empty() && self.m_values.is_empty()
    }

    /// Cells in table order: nbest rows, then paraphrase, then ensemble.
    pub fn cells(&self, base: &MethodParams) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.n_values {
            cells.push(Cell {
                method: "nbest",
                param: format!("n={n}"),
                params: MethodParams { n, ..*base },
            });
        }
        for &n_prime in &self.n_prime_values {
            cells.push(Cell {
                method: "paraphrase",
                param: format!("n_prime={n_prime}"),
                params: MethodParams {
                    n: self.fixed_n,
                    n_prime,
                    ..*base
                },
            });
        }
        for &m in &self.m_values {
            cells.push(Cell {
                method: "ensemble",
                param: format!("m={m}"),
                params: MethodParams {
                    n: self.fixed_n,
                    m,
                    ..*base
                },
            });
        }
        cells
    }

    pub fn describe(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "n_values={} n_prime_values={} m_values={} fixed_n={}",
            list(&self.n_values),
            list(&self.n_prime_values),
            list(&self.m_values),
            self.fixed_n
        )
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub method: &'static str,
    pub param: String,
    pub params: MethodParams,
}

pub struct Row {
    pub method: &'static str,
    pub param: String,
    pub score: std::result::Result<CorpusScore, String>,
}

pub fn run(
    registry: &MethodRegistry,
    models: Models<'_>,
    cells: &[Cell],
    gold: &[GoldSet],
    prompts: &[Prompt],
    policy: &NormalizationPolicy,
) -> Vec<Row> {
    cells
        .par_iter()
        .map(|cell| {
            let score = registry
                .get(cell.method)
                .and_then(|m| m.generate(models, prompts, &cell.params, policy))
                .map_err(|e| e.to_string())
                .and_then(|g| score_corpus(gold, &g.sets, policy).map_err(|e| e.to_string()));
            if let Err(e) = &score {
                log::warn!("cell {} {}: {e}", cell.method, cell.param);
            }
            Row {
                method: cell.method,
                param: cell.param.clone(),
                score,
            }
        })
        .collect()
}

pub fn render(rows: &[Row]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        let _ = match &r.score {
            Ok(s) => writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.method,
                r.param,
                percent(s.mean_precision),
                percent(s.mean_weighted_recall),
                percent(s.macro_f1)
            ),
            Err(_) => writeln!(out, "{}\t{}\tNA\tNA\tNA", r.method, r.param),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let s = SweepSpec::default();
        assert_eq!(s.n_values, [5, 10, 15, 20]);
        assert_eq!(s.n_prime_values, [1, 3, 5]);
        assert_eq!(s.m_values, [2, 4, 6, 8]);
        assert_eq!(s.fixed_n, 10);
        assert_eq!(s.cells(&MethodParams::default()).len(), 11);
    }

    #[test]
    fn cell_params() {
        let cells = SweepSpec::default().cells(&MethodParams::default());
        assert_eq!(cells[0].param, "n=5");
        assert_eq!(cells[0].params.n, 5);
        assert_eq!(cells[5].param, "n_prime=3");
        assert_eq!((cells[5].params.n, cells[5].params.n_prime), (10, 3));
        assert_eq!(cells[10].param, "m=8");
        assert_eq!((cells[10].params.n, cells[10].params.m), (10, 8));
    }

    #[test]
    fn zero_value_rejected() {
        let s = SweepSpec {
            m_values: vec![0],
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn failed_cell_renders_na() {
        let rows = vec![Row {
            method: "ensemble",
            param: "m=8".into(),
            score: Err("too few".into()),
        }];
        assert_eq!(render(&rows), format!("{HEADER}\nensemble\tm=8\tNA\tNA\tNA\n"));
    }
}
