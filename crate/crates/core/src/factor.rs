//! Socially and semantically regularized matrix factorization.
//!
//! ```text
//! L = ½ Σ_ij I'_ij (R_ij − Q_i·P_j)²
//!   + α/2 Σ_i ‖Q_i − Σ_k Ŝ_ik Q_k‖² + β/2 Σ_i ‖Q_i − Σ_k Ĝ_ik Q_k‖²
//!   + γ/2 Σ_j ‖P_j − Σ_t T̂_jt P_t‖² + λ/2 (‖Q‖² + ‖P‖²)
//! ```
//!
//! `R_ij` is 1 for participations and 0 elsewhere; `I'_ij` is 1 on
//! participations and `I_m` elsewhere. A discrepancy term whose similarity row
//! is empty is omitted. Trained by full-batch gradient descent.

use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;

use crate::data::InteractionGraph;
use crate::error::{Error, Result};
use crate::rng;
use crate::similarity::{SimilarityMatrices, SparseMatrix};

pub const MODEL_MAGIC: &str = "jtsmf-mf";
pub const MODEL_VERSION: &str = "1";

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[f64]>::to_vec)
            .take(self.rows)
            .collect()
    }

    /// `self ← self − step · other`.
    pub fn sub_scaled(&mut self, step: f64, other: &Matrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= step * b;
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// `selfᵀ self`.
    fn gram(&self) -> Vec<f64> {
        let d = self.cols;
        let mut g = vec![0.0; d * d];
        for r in 0..self.rows {
            let row = self.row(r);
            for a in 0..d {
                let ra = row[a];
                for b in 0..d {
                    g[a * d + b] += ra * row[b];
                }
            }
        }
        g
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How the data term over all N×M cells is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataTerm {
    /// Uniform `I_m` part via the factor Gram matrix, plus a correction over
    /// participations. Cost is independent of the number of non-participations.
    Gram,
    /// Direct sweep over every cell.
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// `I_m`, the training weight of non-participated cells.
    pub neg_weight: f64,
    /// `δ`.
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub data_term: DataTerm,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            dim: 10,
            alpha: 10.0,
            beta: 140.0,
            gamma: 30.0,
            lambda: 0.5,
            neg_weight: 0.01,
            learning_rate: 0.001,
            iterations: 200,
            seed: 1,
            data_term: DataTerm::Gram,
        }
    }
}

impl Hyperparams {
    pub fn with_weights(mut self, alpha: f64, beta: f64, gamma: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self.gamma = gamma;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("latent dimension must be at least 1"));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
            ("neg_weight", self.neg_weight),
            ("learning_rate", self.learning_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Training data and coupling matrices, with transposes cached for the
/// reverse-direction gradient terms.
pub struct Problem<'a> {
    graph: &'a InteractionGraph,
    sims: &'a SimilarityMatrices,
    social_t: SparseMatrix,
    group_t: SparseMatrix,
    voting_t: SparseMatrix,
}

impl<'a> Problem<'a> {
    pub fn new(graph: &'a InteractionGraph, sims: &'a SimilarityMatrices) -> Result<Self> {
        let n = graph.n_users();
        let m = graph.n_votings();
        let shapes = [
            (sims.social.n_rows(), sims.social.n_cols(), n, n, "social"),
            (sims.group.n_rows(), sims.group.n_cols(), n, n, "group"),
            (sims.voting.n_rows(), sims.voting.n_cols(), m, m, "voting"),
        ];
        for (r, c, er, ec, name) in shapes {
            if (r, c) != (er, ec) {
                return Err(Error::config(format!(
                    "{name} similarity matrix is {r}x{c}, expected {er}x{ec}"
                )));
            }
        }
        Ok(Self {
            graph,
            sims,
            social_t: sims.social.transpose(),
            group_t: sims.group.transpose(),
            voting_t: sims.voting.transpose(),
        })
    }

    pub fn n_users(&self) -> usize {
        self.graph.n_users()
    }

    pub fn n_votings(&self) -> usize {
        self.graph.n_votings()
    }

    fn check(&self, q: &Matrix, p: &Matrix) -> Result<()> {
        if q.rows() != self.n_users() || p.rows() != self.n_votings() || q.cols() != p.cols() {
            return Err(Error::config(format!(
                "factor shapes {}x{} and {}x{} do not match {} users, {} votings",
                q.rows(),
                q.cols(),
                p.rows(),
                p.cols(),
                self.n_users(),
                self.n_votings()
            )));
        }
        Ok(())
    }
}

/// `r_i = X_i − Σ_k W_ik X_k` for non-empty rows of `w`, zero for empty rows.
fn residuals(w: &SparseMatrix, x: &Matrix) -> Matrix {
    let d = x.cols();
    let mut out = Matrix::zeros(x.rows(), d);
    out.data.par_chunks_mut(d.max(1)).enumerate().for_each(|(i, r)| {
        if w.row_is_empty(i) {
            return;
        }
        r.copy_from_slice(x.row(i));
        let (cols, vals) = w.row(i);
        for (&k, &wk) in cols.iter().zip(vals) {
            for (a, b) in r.iter_mut().zip(x.row(k)) {
                *a -= wk * b;
            }
        }
    });
    out
}

/// `grad_i += weight · (r_i − Σ_t W_ti r_t)`, using `w_t = Wᵀ`.
fn add_coupling_gradient(grad: &mut Matrix, weight: f64, res: &Matrix, w_t: &SparseMatrix) {
    let d = res.cols();
    grad.data.par_chunks_mut(d.max(1)).enumerate().for_each(|(i, g)| {
        let own = res.row(i);
        for a in 0..d {
            g[a] += weight * own[a];
        }
        let (rows, vals) = w_t.row(i);
        for (&t, &wti) in rows.iter().zip(vals) {
            let rt = res.row(t);
            for a in 0..d {
                g[a] -= weight * wti * rt[a];
            }
        }
    });
}

/// Objective value at `(q, p)`.
pub fn objective(q: &Matrix, p: &Matrix, problem: &Problem<'_>, hyper: &Hyperparams) -> Result<f64> {
    problem.check(q, p)?;
    let mut total = data_objective(q, p, problem.graph, hyper);
    for (weight, w, x) in [
        (hyper.alpha, &problem.sims.social, q),
        (hyper.beta, &problem.sims.group, q),
        (hyper.gamma, &problem.sims.voting, p),
    ] {
        if weight != 0.0 {
            total += 0.5 * weight * residuals(w, x).frobenius_sq();
        }
    }
    total += 0.5 * hyper.lambda * (q.frobenius_sq() + p.frobenius_sq());
    Ok(total)
}

fn data_objective(q: &Matrix, p: &Matrix, graph: &InteractionGraph, hyper: &Hyperparams) -> f64 {
    let im = hyper.neg_weight;
    match hyper.data_term {
        DataTerm::Dense => {
            let per_user: Vec<f64> = (0..q.rows())
                .into_par_iter()
                .map(|i| {
                    let qi = q.row(i);
                    (0..p.rows())
                        .map(|j| {
                            let pred = dot(qi, p.row(j));
                            if graph.participates(i, j) {
                                (1.0 - pred).powi(2)
                            } else {
                                im * pred * pred
                            }
                        })
                        .sum::<f64>()
                })
                .collect();
            0.5 * per_user.iter().sum::<f64>()
        }
        DataTerm::Gram => {
            let d = q.cols();
            let gram = p.gram();
            let per_user: Vec<f64> = (0..q.rows())
                .into_par_iter()
                .map(|i| {
                    let qi = q.row(i);
                    let mut quad = 0.0;
                    for a in 0..d {
                        quad += qi[a] * dot(&gram[a * d..(a + 1) * d], qi);
                    }
                    let mut s = im * quad;
                    for &j in graph.votings_of(i) {
                        let pred = dot(qi, p.row(j));
                        s += (1.0 - pred).powi(2) - im * pred * pred;
                    }
                    s
                })
                .collect();
            0.5 * per_user.iter().sum::<f64>()
        }
    }
}

/// `∂L/∂Q` at `(q, p)`.
pub fn gradient_q(q: &Matrix, p: &Matrix, problem: &Problem<'_>, hyper: &Hyperparams) -> Result<Matrix> {
    problem.check(q, p)?;
    let graph = problem.graph;
    let mut grad = data_gradient(q, p, hyper, |i| graph.votings_of(i), |i, j| graph.participates(i, j));
    if hyper.alpha != 0.0 {
        let res = residuals(&problem.sims.social, q);
        add_coupling_gradient(&mut grad, hyper.alpha, &res, &problem.social_t);
    }
    if hyper.beta != 0.0 {
        let res = residuals(&problem.sims.group, q);
        add_coupling_gradient(&mut grad, hyper.beta, &res, &problem.group_t);
    }
    add_ridge(&mut grad, hyper.lambda, q);
    Ok(grad)
}

/// `∂L/∂P` at `(q, p)`.
pub fn gradient_p(q: &Matrix, p: &Matrix, problem: &Problem<'_>, hyper: &Hyperparams) -> Result<Matrix> {
    problem.check(q, p)?;
    let graph = problem.graph;
    let mut grad = data_gradient(p, q, hyper, |j| graph.participants(j), |j, i| graph.participates(i, j));
    if hyper.gamma != 0.0 {
        let res = residuals(&problem.sims.voting, p);
        add_coupling_gradient(&mut grad, hyper.gamma, &res, &problem.voting_t);
    }
    add_ridge(&mut grad, hyper.lambda, p);
    Ok(grad)
}

/// Both gradients at the same point.
pub fn gradients(q: &Matrix, p: &Matrix, problem: &Problem<'_>, hyper: &Hyperparams) -> Result<(Matrix, Matrix)> {
    Ok((gradient_q(q, p, problem, hyper)?, gradient_p(q, p, problem, hyper)?))
}

fn add_ridge(grad: &mut Matrix, lambda: f64, x: &Matrix) {
    if lambda != 0.0 {
        for (g, v) in grad.data.iter_mut().zip(&x.data) {
            *g += lambda * v;
        }
    }
}

/// Data-term gradient with respect to the rows of `own`, where `other` holds
/// the opposite factor. `positives(r)` lists the participating partners of row
/// `r`; `is_positive(r, c)` tests one cell.
fn data_gradient<'g>(
    own: &Matrix,
    other: &Matrix,
    hyper: &Hyperparams,
    positives: impl Fn(usize) -> &'g [usize] + Sync,
    is_positive: impl Fn(usize, usize) -> bool + Sync,
) -> Matrix {
    let d = own.cols();
    let im = hyper.neg_weight;
    let mut grad = Matrix::zeros(own.rows(), d);
    match hyper.data_term {
        DataTerm::Dense => {
            grad.data.par_chunks_mut(d.max(1)).enumerate().for_each(|(r, g)| {
                let x = own.row(r);
                for c in 0..other.rows() {
                    let y = other.row(c);
                    let pred = dot(x, y);
                    let coef = if is_positive(r, c) { pred - 1.0 } else { im * pred };
                    for a in 0..d {
                        g[a] += coef * y[a];
                    }
                }
            });
        }
        DataTerm::Gram => {
            let gram = other.gram();
            grad.data.par_chunks_mut(d.max(1)).enumerate().for_each(|(r, g)| {
                let x = own.row(r);
                for a in 0..d {
                    g[a] = im * dot(&gram[a * d..(a + 1) * d], x);
                }
                for &c in positives(r) {
                    let y = other.row(c);
                    let coef = (1.0 - im) * dot(x, y) - 1.0;
                    for a in 0..d {
                        g[a] += coef * y[a];
                    }
                }
            });
        }
    }
    grad
}

/// Trained user and voting factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub q: Matrix,
    pub p: Matrix,
    pub hyper: Hyperparams,
    /// Objective before the first iteration, then after each iteration.
    pub objective_log: Vec<f64>,
}

/// Entries i.i.d. uniform in `[0, 0.1]`; `Q` is drawn before `P`.
pub fn initialize(n_users: usize, n_votings: usize, dim: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = rng::seeded(seed);
    let mut draw = |rows: usize| {
        let mut m = Matrix::zeros(rows, dim);
        for x in m.as_mut_slice() {
            *x = rng.random_range(0.0..=0.1);
        }
        m
    };
    let q = draw(n_users);
    let p = draw(n_votings);
    (q, p)
}

/// Batch gradient descent: each iteration updates `Q` from the current
/// factors, then `P` from the updated `Q`.
pub fn train(problem: &Problem<'_>, hyper: &Hyperparams) -> Result<FactorModel> {
    let (q, p) = initialize(problem.n_users(), problem.n_votings(), hyper.dim, hyper.seed);
    train_from(problem, hyper, q, p)
}

/// [`train`] from explicit initial factors.
pub fn train_from(problem: &Problem<'_>, hyper: &Hyperparams, mut q: Matrix, mut p: Matrix) -> Result<FactorModel> {
    hyper.validate()?;
    if hyper.iterations == 0 {
        return Err(Error::config("training needs at least one iteration"));
    }
    let mut log = Vec::with_capacity(hyper.iterations + 1);
    log.push(objective(&q, &p, problem, hyper)?);
    for it in 1..=hyper.iterations {
        let gq = gradient_q(&q, &p, problem, hyper)?;
        q.sub_scaled(hyper.learning_rate, &gq);
        let gp = gradient_p(&q, &p, problem, hyper)?;
        p.sub_scaled(hyper.learning_rate, &gp);
        let value = objective(&q, &p, problem, hyper)?;
        if !value.is_finite() || !q.is_finite() || !p.is_finite() {
            return Err(Error::Divergence { iteration: it, value });
        }
        log.push(value);
    }
    Ok(FactorModel {
        q,
        p,
        hyper: hyper.clone(),
        objective_log: log,
    })
}

impl FactorModel {
    pub fn n_users(&self) -> usize {
        self.q.rows()
    }

    pub fn n_votings(&self) -> usize {
        self.p.rows()
    }

    /// `Q_i Pᵀ`.
    pub fn predict_scores(&self, user: usize) -> Result<Vec<f64>> {
        if user >= self.n_users() {
            return Err(Error::Range {
                source_name: "predict".into(),
                line: 0,
                what: "user",
                id: user as u64,
                limit: self.n_users(),
            });
        }
        let qi = self.q.row(user);
        Ok((0..self.n_votings()).map(|j| dot(qi, self.p.row(j))).collect())
    }

    pub fn training_log_tsv(&self) -> String {
        let mut out = String::from("iter\tobjective\n");
        for (i, v) in self.objective_log.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{v}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let h = &self.hyper;
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_MAGIC} {MODEL_VERSION}");
        let _ = writeln!(out, "shape {} {} {}", self.n_users(), self.n_votings(), h.dim);
        let _ = writeln!(
            out,
            "hyper alpha={} beta={} gamma={} lambda={} neg_weight={} learning_rate={}",
            h.alpha, h.beta, h.gamma, h.lambda, h.neg_weight, h.learning_rate
        );
        let _ = writeln!(out, "seed {}", h.seed);
        let _ = writeln!(out, "iterations {}", h.iterations);
        for m in [&self.q, &self.p] {
            for r in 0..m.rows() {
                let row: Vec<String> = m.row(r).iter().map(f64::to_string).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out
    }

    /// Parses [`FactorModel::to_text`]. The objective log is not part of the
    /// model file and comes back empty.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut header = lines
            .next()
            .ok_or_else(|| Error::format("empty model file"))?
            .split_whitespace();
        if header.next() != Some(MODEL_MAGIC) {
            return Err(Error::format("not a factor model file"));
        }
        let version = header.next().unwrap_or("");
        if version != MODEL_VERSION {
            return Err(Error::Version {
                found: version.into(),
                expected: MODEL_VERSION.into(),
            });
        }
        let shape = field_values(lines.next(), "shape")?;
        let [n, m, dim] = shape[..] else {
            return Err(Error::format("shape needs three values"));
        };
        let parse_count = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(format!("bad count `{s}`")))
        };
        let (n, m, dim) = (parse_count(n)?, parse_count(m)?, parse_count(dim)?);
        if dim == 0 {
            return Err(Error::format("latent dimension must be positive"));
        }
        let mut hyper = Hyperparams {
            dim,
            ..Hyperparams::default()
        };
        for kv in field_values(lines.next(), "hyper")? {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::format("bad hyperparameter"))?;
            let v: f64 = v
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::format(format!("bad value for {k}")))?;
            match k {
                "alpha" => hyper.alpha = v,
                "beta" => hyper.beta = v,
                "gamma" => hyper.gamma = v,
                "lambda" => hyper.lambda = v,
                "neg_weight" => hyper.neg_weight = v,
                "learning_rate" => hyper.learning_rate = v,
                other => return Err(Error::format(format!("unknown hyperparameter `{other}`"))),
            }
        }
        let single = |line: Option<&str>, key: &str| -> Result<u64> {
            let v = field_values(line, key)?;
            match v[..] {
                [x] => x.parse().map_err(|_| Error::format(format!("bad {key}"))),
                _ => Err(Error::format(format!("{key} needs one value"))),
            }
        };
        hyper.seed = single(lines.next(), "seed")?;
        hyper.iterations = single(lines.next(), "iterations")? as usize;
        let mut read = |rows: usize| -> Result<Matrix> {
            let mut mat = Vec::new();
            for _ in 0..rows {
                mat.push(crate::topic::floats(lines.next(), dim)?);
            }
            Ok(Matrix {
                rows,
                cols: dim,
                data: mat.concat(),
            })
        };
        let q = read(n)?;
        let p = read(m)?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::format("trailing data after factor rows"));
        }
        Ok(Self {
            q,
            p,
            hyper,
            objective_log: Vec::new(),
        })
    }
}

fn field_values<'a>(line: Option<&'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = line.ok_or_else(|| Error::format(format!("missing `{key}` line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::format(format!("expected `{key}` line")));
    }
    Ok(parts.collect())
}
