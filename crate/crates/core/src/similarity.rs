//! Social, group and voting similarity coefficients and their row-normalized
//! sparse matrices.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::InteractionGraph;
use crate::embedding::{cosine, DocumentEmbeddings};
use crate::error::{Error, Result};

pub const SPARSE_MAGIC: &str = "jtsmf-sparse";
pub const SPARSE_VERSION: &str = "1";

/// Smoothing constant `d` in the local authority/hub factor.
pub const DEGREE_SMOOTHING: f64 = 1.0;

/// Compressed sparse rows. Column indices within a row are ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            indptr: vec![0; n_rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from per-row entry lists; each row is sorted by column.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let n_rows = rows.len();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                debug_assert!(c < n_cols);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_is_empty(&self, i: usize) -> bool {
        self.indptr[i] == self.indptr[i + 1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n_cols];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                rows[c].push((i, v));
            }
        }
        Self::from_rows(self.n_rows, rows)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    /// `row col value` triples under a one-line header.
    pub fn to_text(&self, name: &str, threshold: Option<f64>) -> String {
        let mut out = format!(
            "# {SPARSE_MAGIC} {SPARSE_VERSION} name={name} rows={} cols={} normalization=row",
            self.n_rows, self.n_cols
        );
        if let Some(t) = threshold {
            let _ = write!(out, " threshold={t}");
        }
        out.push('\n');
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{i} {c} {v}");
            }
        }
        out
    }

    /// Parses [`SparseMatrix::to_text`] output; returns the name and the
    /// threshold if one was recorded.
    pub fn from_text(text: &str) -> Result<(String, Option<f64>, Self)> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format("empty sparse matrix file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 3 || fields[0] != "#" || fields[1] != SPARSE_MAGIC {
            return Err(Error::format("not a sparse matrix file"));
        }
        if fields.get(2) != Some(&SPARSE_VERSION) {
            return Err(Error::Version {
                found: fields[2].to_string(),
                expected: SPARSE_VERSION.to_string(),
            });
        }
        let mut name = None;
        let mut n_rows = None;
        let mut n_cols = None;
        let mut threshold = None;
        for f in &fields[3..] {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::format(format!("bad header field `{f}`")))?;
            match k {
                "name" => name = Some(v.to_string()),
                "rows" => n_rows = v.parse::<usize>().ok(),
                "cols" => n_cols = v.parse::<usize>().ok(),
                "threshold" => {
                    threshold = Some(
                        v.parse::<f64>()
                            .map_err(|_| Error::format(format!("bad threshold `{v}`")))?,
                    )
                }
                "normalization" => {}
                other => return Err(Error::format(format!("unknown header field `{other}`"))),
            }
        }
        let n_rows = n_rows.ok_or_else(|| Error::format("missing rows"))?;
        let n_cols = n_cols.ok_or_else(|| Error::format("missing cols"))?;
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::format(format!("expected 3 fields in `{line}`")));
            }
            let r: usize = f[0].parse().map_err(|_| Error::format("bad row id"))?;
            let c: usize = f[1].parse().map_err(|_| Error::format("bad col id"))?;
            let v: f64 = f[2]
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::format("bad value"))?;
            if r >= n_rows || c >= n_cols {
                return Err(Error::format(format!("entry ({r}, {c}) outside {n_rows}x{n_cols}")));
            }
            triples.push((r, c, v));
        }
        triples.sort_by_key(|&(r, c, _)| (r, c));
        if triples.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::format("duplicate entry"));
        }
        // rows are allocated up front, so cap the declared count
        if n_rows > triples.len().saturating_mul(64).max(1 << 24) {
            return Err(Error::format("declared row count implausibly large"));
        }
        let mut rows = vec![Vec::new(); n_rows];
        for (r, c, v) in triples {
            rows[r].push((c, v));
        }
        Ok((name.unwrap_or_default(), threshold, Self::from_rows(n_cols, rows)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityConfig {
    /// Minimum voting cosine for neighbor membership.
    pub threshold: f64,
    /// Keep at most this many voting neighbors per row, by descending cosine.
    /// `None` keeps every qualifying neighbor.
    pub candidate_cap: Option<usize>,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            candidate_cap: Some(500),
        }
    }
}

/// Rows left empty, and the subset that had candidates but no positive
/// coefficient after clamping.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowFlags {
    pub empty: Vec<usize>,
    pub clamped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrices {
    /// `Ŝ`: users × users over followees.
    pub social: SparseMatrix,
    /// `Ĝ`: users × users over group-level friends.
    pub group: SparseMatrix,
    /// `T̂`: votings × votings over neighbor sets.
    pub voting: SparseMatrix,
    /// `V_j` for each voting, ascending.
    pub voting_neighbors: Vec<Vec<usize>>,
    pub threshold: f64,
    pub social_flags: RowFlags,
    pub group_flags: RowFlags,
    pub voting_flags: RowFlags,
}

impl SimilarityMatrices {
    /// No coupling at all; every row empty.
    pub fn empty(n_users: usize, n_votings: usize) -> Self {
        Self {
            social: SparseMatrix::empty(n_users, n_users),
            group: SparseMatrix::empty(n_users, n_users),
            voting: SparseMatrix::empty(n_votings, n_votings),
            voting_neighbors: vec![Vec::new(); n_votings],
            threshold: f64::NAN,
            social_flags: RowFlags::default(),
            group_flags: RowFlags::default(),
            voting_flags: RowFlags::default(),
        }
    }

    /// Reassembles matrices read back from disk. Neighbor sets become the
    /// stored row supports; clamped-row flags are not recoverable.
    pub fn from_parts(social: SparseMatrix, group: SparseMatrix, voting: SparseMatrix, threshold: f64) -> Result<Self> {
        let n = social.n_rows();
        let m = voting.n_rows();
        if social.n_cols() != n || group.n_rows() != n || group.n_cols() != n || voting.n_cols() != m {
            return Err(Error::config(format!(
                "similarity shapes disagree: social {}x{}, group {}x{}, voting {}x{}",
                social.n_rows(),
                social.n_cols(),
                group.n_rows(),
                group.n_cols(),
                voting.n_rows(),
                voting.n_cols()
            )));
        }
        let empty_rows = |s: &SparseMatrix| RowFlags {
            empty: (0..s.n_rows()).filter(|&i| s.row_is_empty(i)).collect(),
            clamped: Vec::new(),
        };
        Ok(Self {
            voting_neighbors: (0..m).map(|j| voting.row(j).0.to_vec()).collect(),
            social_flags: empty_rows(&social),
            group_flags: empty_rows(&group),
            voting_flags: empty_rows(&voting),
            social,
            group,
            voting,
            threshold,
        })
    }
}

/// `S_{i,k} = I_{i,k} · sqrt((d_k^- + d) / (d_i^+ + d_k^- + d)) · cos(e_i, e_k)`.
pub fn social_similarity(i: usize, k: usize, graph: &InteractionGraph, embeds: &DocumentEmbeddings) -> f64 {
    if !graph.follows(i, k) {
        return 0.0;
    }
    social_weight(i, k, graph, embeds)
}

/// `sqrt((d_k^- + d) / (d_i^+ + d_k^- + d))`.
pub fn authority_hub_factor(follower_out_degree: usize, followee_in_degree: usize) -> f64 {
    let d_in = followee_in_degree as f64;
    let d_out = follower_out_degree as f64;
    ((d_in + DEGREE_SMOOTHING) / (d_out + d_in + DEGREE_SMOOTHING)).sqrt()
}

fn social_weight(i: usize, k: usize, graph: &InteractionGraph, embeds: &DocumentEmbeddings) -> f64 {
    authority_hub_factor(graph.out_degree(i), graph.in_degree(k)) * cosine(&embeds.users[i], &embeds.users[k])
}

/// `G_{i,k} = Σ_G I_{i,G} I_{k,G} cos(e_i, e_G)`.
pub fn group_similarity(i: usize, k: usize, graph: &InteractionGraph, embeds: &DocumentEmbeddings) -> f64 {
    graph
        .groups_of(i)
        .iter()
        .filter(|&&g| graph.in_group(k, g))
        .map(|&g| cosine(&embeds.users[i], &embeds.groups[g]))
        .sum()
}

/// `T_{j,t} = cos(e_j, e_t)`.
pub fn voting_similarity(j: usize, t: usize, embeds: &DocumentEmbeddings) -> f64 {
    cosine(&embeds.votings[j], &embeds.votings[t])
}

struct NormalizedRow {
    entries: Vec<(usize, f64)>,
    had_candidates: bool,
}

/// Clamps at zero, drops zeros, divides by the row sum.
fn normalize_row(raw: Vec<(usize, f64)>) -> NormalizedRow {
    let had_candidates = !raw.is_empty();
    let kept: Vec<(usize, f64)> = raw.into_iter().filter(|&(_, v)| v > 0.0).collect();
    let sum: f64 = kept.iter().map(|&(_, v)| v).sum();
    let entries = if sum > 0.0 {
        kept.into_iter().map(|(c, v)| (c, v / sum)).collect()
    } else {
        Vec::new()
    };
    NormalizedRow {
        entries,
        had_candidates,
    }
}

fn assemble(n_cols: usize, rows: Vec<NormalizedRow>) -> (SparseMatrix, RowFlags) {
    let mut flags = RowFlags::default();
    for (i, r) in rows.iter().enumerate() {
        if r.entries.is_empty() {
            flags.empty.push(i);
            if r.had_candidates {
                flags.clamped.push(i);
            }
        }
    }
    let m = SparseMatrix::from_rows(n_cols, rows.into_iter().map(|r| r.entries).collect());
    (m, flags)
}

/// Builds `Ŝ`, `Ĝ` and `T̂`. Raw coefficients are clamped at zero before row
/// normalization; rows with no positive coefficient stay empty.
pub fn build_matrices(
    graph: &InteractionGraph,
    embeds: &DocumentEmbeddings,
    config: &SimilarityConfig,
) -> Result<SimilarityMatrices> {
    let n = graph.n_users();
    let m = graph.n_votings();
    if embeds.users.len() != n || embeds.votings.len() != m || embeds.groups.len() != graph.n_groups() {
        return Err(Error::config(format!(
            "document embeddings ({} users, {} votings, {} groups) do not match graph ({n}, {m}, {})",
            embeds.users.len(),
            embeds.votings.len(),
            embeds.groups.len(),
            graph.n_groups()
        )));
    }
    if !config.threshold.is_finite() {
        return Err(Error::config("voting similarity threshold must be finite"));
    }
    if config.threshold < 0.0 && embeds.votings.iter().all(|e| e.iter().all(|&x| x == 0.0)) {
        return Err(Error::config(
            "negative threshold with no non-empty voting embedding admits every pair",
        ));
    }

    let social_rows: Vec<NormalizedRow> = (0..n)
        .into_par_iter()
        .map(|i| {
            normalize_row(
                graph
                    .followees(i)
                    .iter()
                    .map(|&k| (k, social_weight(i, k, graph, embeds)))
                    .collect(),
            )
        })
        .collect();
    let (social, social_flags) = assemble(n, social_rows);

    let group_rows: Vec<NormalizedRow> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut raw: Vec<(usize, f64)> = Vec::new();
            for &g in graph.groups_of(i) {
                let c = cosine(&embeds.users[i], &embeds.groups[g]);
                raw.extend(graph.members(g).iter().filter(|&&k| k != i).map(|&k| (k, c)));
            }
            // sum contributions of every shared group per friend
            raw.sort_by_key(|&(k, _)| k);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
            for (k, c) in raw {
                match merged.last_mut() {
                    Some(last) if last.0 == k => last.1 += c,
                    _ => merged.push((k, c)),
                }
            }
            normalize_row(merged)
        })
        .collect();
    let (group, group_flags) = assemble(n, group_rows);

    let norms: Vec<f64> = embeds
        .votings
        .iter()
        .map(|e| e.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let threshold = config.threshold;
    let voting_rows: Vec<(Vec<usize>, NormalizedRow)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut cands: Vec<(usize, f64)> = (0..m)
                .filter(|&t| t != j)
                .map(|t| {
                    let c = if norms[j] == 0.0 || norms[t] == 0.0 {
                        0.0
                    } else {
                        voting_similarity(j, t, embeds)
                    };
                    (t, c)
                })
                .filter(|&(_, c)| c >= threshold)
                .collect();
            if let Some(cap) = config.candidate_cap {
                if cands.len() > cap {
                    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                    cands.truncate(cap);
                    cands.sort_by_key(|&(t, _)| t);
                }
            }
            let neighbors = cands.iter().map(|&(t, _)| t).collect();
            (neighbors, normalize_row(cands))
        })
        .collect();
    let (voting_neighbors, voting_rows): (Vec<_>, Vec<_>) = voting_rows.into_iter().unzip();
    let (voting, voting_flags) = assemble(m, voting_rows);

    Ok(SimilarityMatrices {
        social,
        group,
        voting,
        voting_neighbors,
        threshold,
        social_flags,
        group_flags,
        voting_flags,
    })
}
