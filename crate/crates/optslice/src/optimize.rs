//! Derivative-free optimization: a standard (mu/mu_w, lambda) CMA-ES with
//! weighted recombination, cumulative step-size adaptation and rank-one plus
//! rank-mu covariance updates, and a finite-difference gradient-descent
//! tracer for landscape-path figures.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{jacobi_eigen, DEFAULT_EIGEN_TOL};
use crate::linalg::Matrix;
use crate::objectives::ObjectiveHandle;
use crate::util::{distance, fmt_f64, mix_seed};
use crate::{Error, Result};

/// CMA-ES settings. Hyperparameters other than the population size follow
/// the published defaults as functions of dimension and lambda.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmaesConfig {
    /// Population size lambda.
    pub population: usize,
    /// Initial step scale sigma.
    pub sigma0: f64,
    /// Evaluation budget; the run stops at the end of the generation that
    /// reaches it.
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        CmaesConfig {
            population: 100,
            sigma0: 0.5,
            max_evals: 10_000,
            seed: 0,
        }
    }
}

/// Best-so-far snapshot taken once per generation.
#[derive(Clone, Debug)]
pub struct HistoryEntry {
    /// Objective evaluations consumed so far.
    pub evals: usize,
    pub best_f: f64,
    pub best_x: Vec<f64>,
    /// Euclidean distance to the objective's known optimum, when available.
    pub dist: Option<f64>,
}

/// Outcome of one optimizer run.
#[derive(Clone, Debug)]
pub struct OptimizerRun {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub history: Vec<HistoryEntry>,
}

impl OptimizerRun {
    /// CSV export: `evals,best_f,dist` with metadata comment lines.
    pub fn history_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# dimension: {}\n", self.best_x.len()));
        out.push_str(&format!("# generations: {}\n", self.history.len()));
        out.push_str("evals,best_f,dist\n");
        for entry in &self.history {
            let dist = entry.dist.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", entry.evals, fmt_f64(entry.best_f), dist));
        }
        out
    }
}

struct CmaesParams {
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl CmaesParams {
    fn derive(dim: usize, lambda: usize) -> Self {
        let n = dim as f64;
        let mu = lambda / 2;
        let mut weights: Vec<f64> = (0..mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln())
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        CmaesParams {
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// Minimizes `f` with CMA-ES from initial mean `x0`. Deterministic per seed;
/// non-finite objective values are treated as infinitely bad fitness. The
/// history records one best-so-far entry per generation.
pub fn cmaes_minimize(
    f: &ObjectiveHandle,
    x0: &[f64],
    cfg: &CmaesConfig,
) -> Result<OptimizerRun> {
    if x0.len() != f.dimension() {
        return Err(Error::invalid(format!(
            "cmaes_minimize: x0 has dimension {}, objective expects {}",
            x0.len(),
            f.dimension()
        )));
    }
    if cfg.population < 4 {
        return Err(Error::invalid("cmaes_minimize: population must be >= 4"));
    }
    if !(cfg.sigma0 > 0.0) {
        return Err(Error::invalid("cmaes_minimize: sigma0 must be positive"));
    }
    if cfg.max_evals == 0 {
        return Err(Error::invalid("cmaes_minimize: max_evals must be >= 1"));
    }

    let dim = f.dimension();
    let params = CmaesParams::derive(dim, cfg.population);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut mean = x0.to_vec();
    let mut sigma = cfg.sigma0;
    let mut cov = Matrix::identity(dim);
    let mut basis = Matrix::identity(dim);
    let mut scales = vec![1.0; dim];
    let mut path_sigma = vec![0.0; dim];
    let mut path_cov = vec![0.0; dim];

    let mut best_f = f64::INFINITY;
    let mut best_x = mean.clone();
    let mut history = Vec::new();
    let mut evals = 0usize;
    let mut generation = 0usize;

    loop {
        // Sample the population serially (deterministic), evaluate by index.
        let mut standard: Vec<Vec<f64>> = Vec::with_capacity(params.lambda);
        for _ in 0..params.lambda {
            standard.push((0..dim).map(|_| rng.sample(StandardNormal)).collect());
        }
        let candidates: Vec<Vec<f64>> = standard
            .iter()
            .map(|z| {
                let scaled: Vec<f64> = z.iter().zip(&scales).map(|(zi, di)| zi * di).collect();
                let y = basis.mul_vec(&scaled);
                mean.iter().zip(&y).map(|(m, yi)| m + sigma * yi).collect()
            })
            .collect();
        let fitness: Vec<f64> = candidates
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let value = f.evaluate(x, mix_seed(cfg.seed, &[generation as u64, i as u64]));
                if value.is_finite() {
                    value
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        evals += params.lambda;

        let mut order: Vec<usize> = (0..params.lambda).collect();
        order.sort_by(|&a, &b| {
            fitness[a]
                .partial_cmp(&fitness[b])
                .expect("non-finite fitness mapped to +inf")
                .then(a.cmp(&b))
        });

        if fitness[order[0]] < best_f {
            best_f = fitness[order[0]];
            best_x = candidates[order[0]].clone();
        }
        history.push(HistoryEntry {
            evals,
            best_f,
            best_x: best_x.clone(),
            dist: f.known_optimum().map(|opt| distance(&best_x, opt)),
        });

        if evals >= cfg.max_evals {
            break;
        }

        // Weighted recombination of the mu best.
        let old_mean = mean.clone();
        let mut new_mean = vec![0.0; dim];
        for (rank, &idx) in order.iter().take(params.mu).enumerate() {
            let w = params.weights[rank];
            for (m, x) in new_mean.iter_mut().zip(&candidates[idx]) {
                *m += w * x;
            }
        }
        mean = new_mean;

        // Cumulative step-size adaptation with C^(-1/2) (m' - m) / sigma.
        let shift: Vec<f64> = mean
            .iter()
            .zip(&old_mean)
            .map(|(a, b)| (a - b) / sigma)
            .collect();
        let mut t = vec![0.0; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for r in 0..dim {
                acc += basis.get(r, i) * shift[r];
            }
            t[i] = acc / scales[i];
        }
        let whitened = basis.mul_vec(&t);
        let cs_factor = (params.c_sigma * (2.0 - params.c_sigma) * params.mu_eff).sqrt();
        for (p, w) in path_sigma.iter_mut().zip(&whitened) {
            *p = (1.0 - params.c_sigma) * *p + cs_factor * w;
        }
        let ps_norm = path_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let decay = 1.0 - (1.0 - params.c_sigma).powi(2 * (generation as i32 + 1));
        let h_sigma = if ps_norm / decay.sqrt()
            < (1.4 + 2.0 / (dim as f64 + 1.0)) * params.chi_n
        {
            1.0
        } else {
            0.0
        };

        let cc_factor = (params.c_c * (2.0 - params.c_c) * params.mu_eff).sqrt();
        for (p, s) in path_cov.iter_mut().zip(&shift) {
            *p = (1.0 - params.c_c) * *p + h_sigma * cc_factor * s;
        }

        // Covariance update: rank-one from the evolution path plus rank-mu
        // from the selected steps.
        let stall = (1.0 - h_sigma) * params.c_c * (2.0 - params.c_c);
        let keep = 1.0 - params.c_1 - params.c_mu;
        for i in 0..dim {
            for j in i..dim {
                let value = (keep + params.c_1 * stall) * cov.get(i, j)
                    + params.c_1 * path_cov[i] * path_cov[j];
                cov.set(i, j, value);
                cov.set(j, i, value);
            }
        }
        for (rank, &idx) in order.iter().take(params.mu).enumerate() {
            let w = params.c_mu * params.weights[rank];
            let y: Vec<f64> = candidates[idx]
                .iter()
                .zip(&old_mean)
                .map(|(x, m)| (x - m) / sigma)
                .collect();
            for i in 0..dim {
                let wy = w * y[i];
                for j in i..dim {
                    let value = cov.get(i, j) + wy * y[j];
                    cov.set(i, j, value);
                    cov.set(j, i, value);
                }
            }
        }

        let exponent =
            ((params.c_sigma / params.d_sigma) * (ps_norm / params.chi_n - 1.0)).min(20.0);
        sigma *= exponent.exp();
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::numeric("cmaes_minimize: step size degenerated"));
        }

        let eigen = jacobi_eigen(&cov, DEFAULT_EIGEN_TOL)?;
        let max_eig = eigen.values.iter().fold(0.0f64, |m, &v| m.max(v));
        if !(max_eig > 0.0) {
            return Err(Error::numeric("cmaes_minimize: covariance collapsed"));
        }
        let floor = max_eig * 1e-20;
        scales = eigen.values.iter().map(|&v| v.max(floor).sqrt()).collect();
        basis = eigen.vectors;
        generation += 1;
    }

    Ok(OptimizerRun {
        best_x,
        best_f,
        history,
    })
}

/// Iterate record of a gradient-descent trace.
#[derive(Clone, Debug)]
pub struct DescentPath {
    /// All visited points, starting with the initial one.
    pub points: Vec<Vec<f64>>,
    /// Set when the path left the `||x|| > 1e6` guard region (or produced
    /// non-finite values) and was truncated.
    pub diverged: bool,
}

const DIVERGENCE_RADIUS: f64 = 1e6;

/// Fixed-step gradient descent `x <- x - step * grad f(x)`, using the
/// analytic gradient when the handle provides one and central differences
/// with step `h` otherwise. Records every iterate.
pub fn gradient_descent_path(
    f: &ObjectiveHandle,
    x0: &[f64],
    step: f64,
    iters: usize,
    h: f64,
) -> Result<DescentPath> {
    if !(step > 0.0) {
        return Err(Error::invalid("gradient_descent_path: step must be positive"));
    }
    if x0.len() != f.dimension() {
        return Err(Error::invalid("gradient_descent_path: dimension mismatch"));
    }
    let gradient = |x: &[f64]| -> Vec<f64> {
        if let Some(g) = f.analytic_gradient(x) {
            return g;
        }
        let mut g = vec![0.0; x.len()];
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            probe[i] = x[i] + h;
            let plus = f.evaluate(&probe, 0);
            probe[i] = x[i] - h;
            let minus = f.evaluate(&probe, 0);
            probe[i] = x[i];
            g[i] = (plus - minus) / (2.0 * h);
        }
        g
    };

    let mut points = vec![x0.to_vec()];
    let mut diverged = false;
    let mut x = x0.to_vec();
    for _ in 0..iters {
        let g = gradient(&x);
        if g.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        if crate::util::norm(&x) > DIVERGENCE_RADIUS || x.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        points.push(x.clone());
    }
    Ok(DescentPath { points, diverged })
}

/// Per-generation summary across runs.
#[derive(Clone, Debug)]
pub struct ComparisonRow {
    pub evals: usize,
    pub mean_dist: f64,
    pub std_dist: f64,
}

/// Mean and standard deviation of distance-to-optimum across runs, aligned
/// by generation. Every run must share the same budget axis. Distances come
/// from the run histories when present, otherwise from `known_optimum`.
pub fn compare_runs(
    runs: &[OptimizerRun],
    known_optimum: Option<&[f64]>,
) -> Result<Vec<ComparisonRow>> {
    if runs.is_empty() {
        return Err(Error::invalid("compare_runs: no runs"));
    }
    let axis: Vec<usize> = runs[0].history.iter().map(|e| e.evals).collect();
    for run in runs {
        let this: Vec<usize> = run.history.iter().map(|e| e.evals).collect();
        if this != axis {
            return Err(Error::invalid(
                "compare_runs: runs do not share a budget axis",
            ));
        }
    }
    let mut rows = Vec::with_capacity(axis.len());
    for (g, &evals) in axis.iter().enumerate() {
        let mut dists = Vec::with_capacity(runs.len());
        for run in runs {
            let entry = &run.history[g];
            let dist = match (entry.dist, known_optimum) {
                (Some(d), _) => d,
                (None, Some(opt)) => distance(&entry.best_x, opt),
                (None, None) => {
                    return Err(Error::invalid(
                        "compare_runs: no distance information available",
                    ))
                }
            };
            dists.push(dist);
        }
        let mean = dists.iter().sum::<f64>() / dists.len() as f64;
        let var = dists.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / dists.len() as f64;
        rows.push(ComparisonRow {
            evals,
            mean_dist: mean,
            std_dist: var.sqrt(),
        });
    }
    Ok(rows)
}

/// CSV export of a comparison table: `evals,mean_dist,std_dist`.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("evals,mean_dist,std_dist\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.evals,
            fmt_f64(row.mean_dist),
            fmt_f64(row.std_dist)
        ));
    }
    out
}
