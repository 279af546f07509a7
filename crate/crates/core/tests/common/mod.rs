//! Independent reference implementations used by the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod criteria;

use jtsmf::data::{Dimensions, EdgeKind, GraphBuilder, InteractionGraph};
use jtsmf::embedding::DocumentEmbeddings;
use jtsmf::factor::{Hyperparams, Matrix};
use jtsmf::similarity::{build_matrices, SimilarityConfig, SimilarityMatrices, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with each relation present independently with probability `density`.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, m: usize, groups: usize, density: f64) -> InteractionGraph {
    let mut b = GraphBuilder::new(Dimensions {
        n_users: n,
        n_votings: m,
        n_groups: groups,
    });
    for i in 0..n {
        for j in 0..m {
            if r.random_bool(density) {
                b.add(EdgeKind::UserVoting, i, j).unwrap();
            }
        }
        for k in 0..n {
            if k != i && r.random_bool(density) {
                b.add(EdgeKind::UserUser, i, k).unwrap();
            }
        }
        for g in 0..groups {
            if r.random_bool(density) {
                b.add(EdgeKind::UserGroup, i, g).unwrap();
            }
        }
    }
    b.build()
}

pub fn random_vectors(r: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn random_embeddings(r: &mut ChaCha8Rng, graph: &InteractionGraph, dim: usize) -> DocumentEmbeddings {
    DocumentEmbeddings {
        dim,
        votings: random_vectors(r, graph.n_votings(), dim),
        users: random_vectors(r, graph.n_users(), dim),
        groups: random_vectors(r, graph.n_groups(), dim),
    }
}

/// Graph plus similarity matrices built from random document embeddings.
pub fn random_problem(r: &mut ChaCha8Rng, n: usize, m: usize, groups: usize) -> (InteractionGraph, SimilarityMatrices) {
    let graph = random_graph(r, n, m, groups, 0.4);
    let embeds = random_embeddings(r, &graph, 4);
    let sims = build_matrices(
        &graph,
        &embeds,
        &SimilarityConfig {
            threshold: 0.0,
            candidate_cap: None,
        },
    )
    .unwrap();
    (graph, sims)
}

pub fn random_factors(r: &mut ChaCha8Rng, rows: usize, dim: usize) -> Matrix {
    Matrix::from_rows(&random_vectors(r, rows, dim))
}

type Dense = Vec<Vec<f64>>;

/// `I − W` with rows of empty `W` rows zeroed, so that their discrepancy is dropped.
fn discrepancy_operator(w: &SparseMatrix) -> Dense {
    let d = w.to_dense();
    (0..d.len())
        .map(|i| {
            if w.row_is_empty(i) {
                vec![0.0; d.len()]
            } else {
                (0..d.len())
                    .map(|k| if i == k { 1.0 - d[i][k] } else { -d[i][k] })
                    .collect()
            }
        })
        .collect()
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..cols).map(|c| (0..inner).map(|k| row[k] * b[k][c]).sum()).collect())
        .collect()
}

fn transpose(a: &Dense) -> Dense {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|c| a.iter().map(|r| r[c]).collect()).collect()
}

fn frob_sq(a: &Dense) -> f64 {
    a.iter().flatten().map(|x| x * x).sum()
}

fn weight(graph: &InteractionGraph, i: usize, j: usize, neg_weight: f64) -> (f64, f64) {
    if graph.participates(i, j) {
        (1.0, 1.0)
    } else {
        (neg_weight, 0.0)
    }
}

/// Full objective by a sweep over all cells and dense regularizer matrices.
pub fn dense_objective(
    q: &Matrix,
    p: &Matrix,
    graph: &InteractionGraph,
    sims: &SimilarityMatrices,
    h: &Hyperparams,
) -> f64 {
    let (qd, pd) = (q.to_rows(), p.to_rows());
    let mut data = 0.0;
    for i in 0..graph.n_users() {
        for j in 0..graph.n_votings() {
            let (w, r) = weight(graph, i, j, h.neg_weight);
            let pred: f64 = qd[i].iter().zip(&pd[j]).map(|(a, b)| a * b).sum();
            data += w * (r - pred) * (r - pred);
        }
    }
    let social = frob_sq(&matmul(&discrepancy_operator(&sims.social), &qd));
    let group = frob_sq(&matmul(&discrepancy_operator(&sims.group), &qd));
    let voting = frob_sq(&matmul(&discrepancy_operator(&sims.voting), &pd));
    0.5 * data
        + 0.5 * h.alpha * social
        + 0.5 * h.beta * group
        + 0.5 * h.gamma * voting
        + 0.5 * h.lambda * (frob_sq(&qd) + frob_sq(&pd))
}

/// `∂L/∂Q` and `∂L/∂P` via `Dᵀ D X` products on dense matrices.
pub fn dense_gradients(
    q: &Matrix,
    p: &Matrix,
    graph: &InteractionGraph,
    sims: &SimilarityMatrices,
    h: &Hyperparams,
) -> (Dense, Dense) {
    let (qd, pd) = (q.to_rows(), p.to_rows());
    let (n, m, dim) = (graph.n_users(), graph.n_votings(), q.cols());
    let mut gq = vec![vec![0.0; dim]; n];
    let mut gp = vec![vec![0.0; dim]; m];
    for i in 0..n {
        for j in 0..m {
            let (w, r) = weight(graph, i, j, h.neg_weight);
            let pred: f64 = qd[i].iter().zip(&pd[j]).map(|(a, b)| a * b).sum();
            let e = w * (pred - r);
            for a in 0..dim {
                gq[i][a] += e * pd[j][a];
                gp[j][a] += e * qd[i][a];
            }
        }
    }
    let add = |g: &mut Dense, weight: f64, w: &SparseMatrix, x: &Dense| {
        let d = discrepancy_operator(w);
        let term = matmul(&transpose(&d), &matmul(&d, x));
        for (row, t) in g.iter_mut().zip(term) {
            for (a, b) in row.iter_mut().zip(t) {
                *a += weight * b;
            }
        }
    };
    add(&mut gq, h.alpha, &sims.social, &qd);
    add(&mut gq, h.beta, &sims.group, &qd);
    add(&mut gp, h.gamma, &sims.voting, &pd);
    for (row, x) in gq.iter_mut().zip(&qd) {
        for (a, b) in row.iter_mut().zip(x) {
            *a += h.lambda * b;
        }
    }
    for (row, x) in gp.iter_mut().zip(&pd) {
        for (a, b) in row.iter_mut().zip(x) {
            *a += h.lambda * b;
        }
    }
    (gq, gp)
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn central_differences(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, or the absolute difference when both are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Exact collapsed LDA posterior over every joint assignment, in the order of
/// a little-endian base-`topics` counter over tokens (first document first).
pub fn lda_exact_posterior(docs: &[Vec<u32>], vocab: usize, topics: usize, alpha: f64, beta: f64) -> Vec<f64> {
    let tokens: Vec<(usize, usize)> = docs
        .iter()
        .enumerate()
        .flat_map(|(d, doc)| doc.iter().map(move |&w| (d, w as usize)))
        .collect();
    let states = topics.pow(tokens.len() as u32);
    let mut log_p = Vec::with_capacity(states);
    for s in 0..states {
        let mut code = s;
        let mut ndz = vec![vec![0usize; topics]; docs.len()];
        let mut nzw = vec![vec![0usize; vocab]; topics];
        for &(d, w) in &tokens {
            let z = code % topics;
            code /= topics;
            ndz[d][z] += 1;
            nzw[z][w] += 1;
        }
        let mut lp = 0.0;
        for counts in &ndz {
            let len: usize = counts.iter().sum();
            lp += counts.iter().map(|&c| ln_gamma(c as f64 + alpha)).sum::<f64>()
                - ln_gamma(len as f64 + topics as f64 * alpha);
        }
        for counts in &nzw {
            let total: usize = counts.iter().sum();
            lp += counts.iter().map(|&c| ln_gamma(c as f64 + beta)).sum::<f64>()
                - ln_gamma(total as f64 + vocab as f64 * beta);
        }
        log_p.push(lp);
    }
    let max = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = log_p.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / z).collect()
}

/// Encodes per-document assignments with the same counter as [`lda_exact_posterior`].
pub fn encode_assignments(assignments: &[Vec<usize>], topics: usize) -> usize {
    let mut code = 0;
    let mut mult = 1;
    for z in assignments.iter().flatten() {
        code += z * mult;
        mult *= topics;
    }
    code
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Direct transcription of `-(log σ(c·t) + Σ log σ(−n·t))`.
pub fn reference_sgns_loss(target: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let log_sigmoid = |x: f64| -(1.0 + (-x).exp()).ln();
    -(log_sigmoid(dot(context, target)) + negatives.iter().map(|n| log_sigmoid(-dot(n, target))).sum::<f64>())
}

/// Brute-force cosine for similarity oracles.
pub fn reference_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Dense `Ŝ`, `Ĝ`, `T̂` (exact mode, no candidate cap) computed entry by entry.
pub fn brute_force_similarities(
    graph: &InteractionGraph,
    e: &DocumentEmbeddings,
    threshold: f64,
) -> (Dense, Dense, Dense) {
    let n = graph.n_users();
    let m = graph.n_votings();
    let normalize = |raw: Vec<Vec<f64>>| -> Dense {
        raw.into_iter()
            .map(|row| {
                let clamped: Vec<f64> = row.iter().map(|&v| v.max(0.0)).collect();
                let s: f64 = clamped.iter().sum();
                if s > 0.0 {
                    clamped.iter().map(|v| v / s).collect()
                } else {
                    vec![0.0; clamped.len()]
                }
            })
            .collect()
    };
    let mut s = vec![vec![0.0; n]; n];
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if graph.follows(i, k) {
                let d_out = graph.followees(i).len() as f64;
                let d_in = graph.followers(k).len() as f64;
                s[i][k] = ((d_in + 1.0) / (d_out + d_in + 1.0)).sqrt() * reference_cosine(&e.users[i], &e.users[k]);
            }
            if i != k {
                for grp in 0..graph.n_groups() {
                    if graph.in_group(i, grp) && graph.in_group(k, grp) {
                        g[i][k] += reference_cosine(&e.users[i], &e.groups[grp]);
                    }
                }
            }
        }
    }
    let mut t = vec![vec![0.0; m]; m];
    for j in 0..m {
        for u in 0..m {
            if j != u {
                let c = reference_cosine(&e.votings[j], &e.votings[u]);
                if c >= threshold {
                    t[j][u] = c;
                }
            }
        }
    }
    (normalize(s), normalize(g), normalize(t))
}
