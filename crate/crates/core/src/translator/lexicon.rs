use std::collections::BTreeMap;

/// Word-translation probabilities `t(target | source)`, one row per source word.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LexiconTable {
    rows: BTreeMap<String, BTreeMap<String, f64>>,
}

impl LexiconTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: BTreeMap<String, BTreeMap<String, f64>>) -> Self {
        Self { rows }
    }

    pub fn insert(&mut self, source: impl Into<String>, target: impl Into<String>, prob: f64) {
        self.rows.entry(source.into()).or_default().insert(target.into(), prob);
    }

    /// `t(target | source)`, zero when the pair was never seen.
    pub fn prob(&self, source: &str, target: &str) -> f64 {
        self.rows
            .get(source)
            .and_then(|r| r.get(target))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row(&self, source: &str) -> Option<&BTreeMap<String, f64>> {
        self.rows.get(source)
    }

    pub fn contains_source(&self, source: &str) -> bool {
        self.rows.get(source).is_some_and(|r| !r.is_empty())
    }

    pub fn rows(&self) -> impl Iterator<Item = (&String, &BTreeMap<String, f64>)> {
        self.rows.iter()
    }

    pub fn num_sources(&self) -> usize {
        self.rows.len()
    }

    /// Up to `k` most probable targets for `source`, ties broken by target text.
    pub fn top_k(&self, source: &str, k: usize) -> Vec<(&str, f64)> {
        let Some(row) = self.rows.get(source) else {
            return Vec::new();
        };
        let mut cands: Vec<(&str, f64)> = row
            .iter()
            .filter(|(_, p)| **p > 0.0)
            .map(|(t, p)| (t.as_str(), *p))
            .collect();
        cands.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        cands.truncate(k);
        cands
    }

    /// Largest deviation of any row sum from 1.
    pub fn max_row_error(&self) -> f64 {
        self.rows
            .values()
            .map(|r| (r.values().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
