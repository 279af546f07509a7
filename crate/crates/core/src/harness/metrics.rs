//! Top-k recall, precision and micro-F1 from pooled hit counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::InteractionGraph;
use crate::error::Result;

/// Produces a score for every voting for one user.
pub trait Scorer: Sync {
    fn scores(&self, user: usize) -> Result<Vec<f64>>;
}

impl Scorer for crate::factor::FactorModel {
    fn scores(&self, user: usize) -> Result<Vec<f64>> {
        self.predict_scores(user)
    }
}

impl<F> Scorer for F
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    fn scores(&self, user: usize) -> Result<Vec<f64>> {
        Ok(self(user))
    }
}

pub const DEFAULT_KS: [usize; 8] = [1, 2, 5, 10, 20, 50, 100, 500];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub k: usize,
    pub hits: usize,
    /// Σ over evaluated users of the (possibly truncated) list length.
    pub recommended: usize,
    pub recall: f64,
    pub precision: f64,
    pub micro_f1: f64,
    /// Mean of per-user recall, reported alongside the pooled value.
    pub recall_user_mean: f64,
    /// Users whose candidate list was shorter than k.
    pub truncated_users: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub rows: Vec<MetricRow>,
    pub test_pairs: usize,
    /// Users with at least one test pair.
    pub evaluated_users: usize,
    pub total_users: usize,
    /// Free-form `key=value` entries (hyperparameters, dataset fingerprint).
    pub metadata: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn row(&self, k: usize) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# model={}", self.model);
        let _ = writeln!(out, "# test_pairs={}", self.test_pairs);
        let _ = writeln!(out, "# evaluated_users={}", self.evaluated_users);
        let _ = writeln!(out, "# total_users={}", self.total_users);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("k\trecall\tprecision\tmicro_f1\trecall_user_mean\thits\ttruncated_users\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
                r.k, r.recall, r.precision, r.micro_f1, r.recall_user_mean, r.hits, r.truncated_users
            );
        }
        out
    }
}

/// `2PR / (P + R)`, or 0 when both vanish.
pub fn micro_f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Indices of `scores` sorted by descending score, lowest id first on ties,
/// skipping `exclude` (sorted).
pub fn rank_candidates(scores: &[f64], exclude: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len())
        .filter(|j| exclude.binary_search(j).is_err())
        .collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// For each user with test pairs, ranks votings outside the user's training
/// participations and counts test hits in the top `k`.
pub fn evaluate_topk(
    model: &str,
    scorer: &dyn Scorer,
    test: &[(usize, usize)],
    train: &InteractionGraph,
    ks: &[usize],
) -> Result<EvalReport> {
    let mut ks: Vec<usize> = ks.iter().copied().filter(|&k| k > 0).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut per_user: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, v) in test {
        per_user.entry(u).or_default().push(v);
    }
    let users: Vec<(usize, Vec<usize>)> = per_user.into_iter().collect();
    let k_max = ks.last().copied().unwrap_or(0);

    // (hits, list length, per-user recall) per k, per user
    let per_user_counts: Vec<Vec<(usize, usize, f64)>> = users
        .par_iter()
        .map(|(u, held_out)| {
            let scores = scorer.scores(*u)?;
            let ranked = rank_candidates(&scores, train.votings_of(*u));
            let top = &ranked[..ranked.len().min(k_max)];
            Ok(ks
                .iter()
                .map(|&k| {
                    let list = &top[..top.len().min(k)];
                    let hits = list.iter().filter(|j| held_out.contains(j)).count();
                    (hits, list.len(), hits as f64 / held_out.len() as f64)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let n_users = users.len();
    let rows = ks
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let hits: usize = per_user_counts.iter().map(|c| c[ki].0).sum();
            let recommended: usize = per_user_counts.iter().map(|c| c[ki].1).sum();
            let truncated_users = per_user_counts.iter().filter(|c| c[ki].1 < k).count();
            let recall = if test.is_empty() {
                0.0
            } else {
                hits as f64 / test.len() as f64
            };
            let precision = if recommended == 0 {
                0.0
            } else {
                hits as f64 / recommended as f64
            };
            let recall_user_mean = if n_users == 0 {
                0.0
            } else {
                per_user_counts.iter().map(|c| c[ki].2).sum::<f64>() / n_users as f64
            };
            MetricRow {
                k,
                hits,
                recommended,
                recall,
                precision,
                micro_f1: micro_f1(precision, recall),
                recall_user_mean,
                truncated_users,
            }
        })
        .collect();
    Ok(EvalReport {
        model: model.to_string(),
        rows,
        test_pairs: test.len(),
        evaluated_users: n_users,
        total_users: train.n_users(),
        metadata: BTreeMap::new(),
    })
}
