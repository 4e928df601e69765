//! Zero-inflated negative binomial model with an area offset.
//!
//! With probability `π` a transect yields a structural zero; otherwise its
//! count is negative binomial with mean `μ_i = exp(β0) · a_i` (so `exp(β0)`
//! is animals per km² of the count process) and dispersion `k`
//! (variance `μ + μ²/k`). Parameters are fitted by maximum likelihood on the
//! unconstrained scale `θ = (logit π, β0, ln k)`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::TransectCount;
use crate::linalg::{spd_pseudo_inverse, Matrix};
use crate::math::{exp, ln, ln_1p, ln_gamma, logistic, logit, sqrt};
use crate::optim::{fd_hessian, maximize, BfgsOptions};
use crate::rng;
use crate::special::{digamma_rising, ln_factorial};

use super::{DensityEstimate, Method, Z_95};

pub const LOGIT_PI_BOUNDS: (f64, f64) = (-30.0, 15.0);
pub const BETA0_BOUNDS: (f64, f64) = (-50.0, 50.0);
pub const LN_K_BOUNDS: (f64, f64) = (-12.0, 25.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZinbOptions {
    pub max_iter: usize,
    /// Convergence tolerance on the change in log-likelihood.
    pub tol: f64,
    pub n_starts: usize,
    /// Seed for the jittered starting points.
    pub seed: u64,
}

impl Default for ZinbOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-8,
            n_starts: 3,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZinbFit {
    pub beta0: f64,
    pub pi: f64,
    pub k: f64,
    /// Optimum on the unconstrained scale `(logit π, β0, ln k)`.
    pub theta: [f64; 3],
    /// Inverse of the negative Hessian at `theta`.
    pub covariance: [[f64; 3]; 3],
    pub loglik: f64,
    pub converged: bool,
    pub n_iterations: usize,
    pub gradient_max_abs: f64,
    /// Log-likelihood at each starting point, in order.
    pub start_logliks: Vec<f64>,
    /// Directions in which the Hessian was not negative definite.
    pub flat_directions: usize,
    pub n_obs: usize,
}

impl ZinbFit {
    /// Standard errors on the unconstrained scale.
    pub fn standard_errors(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| sqrt(self.covariance[i][i].max(0.0)))
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + ln_1p(exp(-x))
    } else {
        ln_1p(exp(x))
    }
}

/// `Σ_{j<y} ln(1 + j/k)`, i.e. `ln Γ(y+k) − ln Γ(k) − y ln k`.
fn ln_rising_over_power(k: f64, y: u64) -> f64 {
    if y <= 256 {
        (1..y).map(|j| ln_1p(j as f64 / k)).sum()
    } else {
        ln_gamma(k + y as f64) - ln_gamma(k) - y as f64 * ln(k)
    }
}

fn data(counts: &[TransectCount]) -> Vec<(u64, f64)> {
    counts
        .iter()
        .map(|c| (c.animal_count, c.covered_area_km2))
        .collect()
}

/// Log-likelihood and its gradient with respect to `(logit π, β0, ln k)`.
pub fn zinb_loglik_grad(theta: &[f64], obs: &[(u64, f64)]) -> (f64, [f64; 3]) {
    let (lp, b0, lk) = (theta[0], theta[1], theta[2]);
    let pi = logistic(lp);
    let ln_one_minus_pi = -softplus(lp);
    let k = exp(lk);
    let mut ll = 0.0;
    let mut g = [0.0; 3];
    for &(y, a) in obs {
        let mu = exp(b0) * a;
        let ratio = mu / k;
        let ln_p = -ln_1p(ratio); // ln(k / (k + μ))
        let q = mu / (k + mu);
        if y == 0 {
            let nb0 = exp(k * ln_p);
            let d = pi + (1.0 - pi) * nb0;
            ll += ln(d);
            let common = (1.0 - pi) * nb0 / d;
            g[0] += (1.0 - nb0) / d * pi * (1.0 - pi);
            g[1] += common * (-k * q);
            g[2] += common * k * (ln_p + q);
        } else {
            let yf = y as f64;
            ll += ln_one_minus_pi + ln_rising_over_power(k, y) - ln_factorial(y)
                + k * ln_p
                + yf * (ln(mu) - ln_1p(ratio));
            g[0] += -pi;
            g[1] += k * (yf - mu) / (k + mu);
            g[2] += k * (digamma_rising(k, y) + ln_p + (mu - yf) / (k + mu));
        }
    }
    (ll, g)
}

/// Log-likelihood at `theta = (logit π, β0, ln k)`.
pub fn zinb_loglik(theta: &[f64], counts: &[TransectCount]) -> f64 {
    zinb_loglik_grad(theta, &data(counts)).0
}

fn starting_points(obs: &[(u64, f64)], opts: &ZinbOptions) -> Vec<[f64; 3]> {
    let n = obs.len() as f64;
    let animals: f64 = obs.iter().map(|o| o.0 as f64).sum();
    let area: f64 = obs.iter().map(|o| o.1).sum();
    let density = animals / area;
    let zeros = obs.iter().filter(|o| o.0 == 0).count() as f64 / n;
    // Zeros a Poisson count process alone would give at the pooled density.
    let poisson_zeros = obs.iter().map(|o| exp(-density * o.1)).sum::<f64>() / n;
    let pi0 = ((zeros - poisson_zeros) / (1.0 - poisson_zeros).max(1e-9)).clamp(0.05, 0.9);
    let base = [logit(pi0), ln(density / (1.0 - pi0)), 0.0];
    let mut r = rng::labeled(opts.seed, "zinb-starts");
    let mut starts = alloc::vec![base];
    while starts.len() < opts.n_starts.max(1) {
        starts.push([
            base[0] + r.random_range(-1.5..1.5),
            base[1] + r.random_range(-0.5..0.5),
            base[2] + r.random_range(-1.5..1.5),
        ]);
    }
    starts
}

fn bounds() -> [(f64, f64); 3] {
    [LOGIT_PI_BOUNDS, BETA0_BOUNDS, LN_K_BOUNDS]
}

fn clamp3(x: &mut [f64; 3]) {
    for (xi, (lo, hi)) in x.iter_mut().zip(bounds()) {
        *xi = xi.clamp(lo, hi);
    }
}

fn max_abs(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn at_bound(x: &[f64; 3], i: usize) -> bool {
    let (lo, hi) = bounds()[i];
    x[i] <= lo || x[i] >= hi
}

/// Newton refinement from a BFGS optimum, using a finite-difference Hessian
/// of the analytic gradient. Only steps that do not lower the likelihood are
/// taken.
fn polish(obs: &[(u64, f64)], mut x: [f64; 3], mut f: f64) -> ([f64; 3], f64, usize) {
    let grad = |t: &[f64]| zinb_loglik_grad(t, obs).1.to_vec();
    let mut steps = 0;
    for _ in 0..25 {
        let (_, g) = zinb_loglik_grad(&x, obs);
        let free: Vec<usize> = (0..3)
            .filter(|&i| {
                !at_bound(&x, i)
                    || g[i].abs() > 0.0 && {
                        let (lo, _) = bounds()[i];
                        (x[i] <= lo && g[i] > 0.0) || (x[i] > lo && g[i] < 0.0)
                    }
            })
            .collect();
        let gf: Vec<f64> = free.iter().map(|&i| g[i]).collect();
        if max_abs(&gf) < 1e-10 || free.is_empty() {
            break;
        }
        let h = fd_hessian(grad, &x, 1e-5);
        let mut neg = Matrix::zeros(free.len(), free.len());
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                neg[(a, b)] = -h[(i, j)];
            }
        }
        let (inv, dropped) = spd_pseudo_inverse(&neg, 1e-12);
        if dropped > 0 {
            break;
        }
        let dir = inv.mul_vec(&gf);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut trial = x;
            for (a, &i) in free.iter().enumerate() {
                trial[i] += t * dir[a];
            }
            clamp3(&mut trial);
            let (ft, _) = zinb_loglik_grad(&trial, obs);
            if ft.is_finite() && ft >= f {
                x = trial;
                f = ft;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        steps += 1;
        if !improved {
            break;
        }
    }
    (x, f, steps)
}

/// Projected gradient: components pushing against an active bound are zero.
fn projected_gradient(x: &[f64; 3], g: &[f64; 3]) -> [f64; 3] {
    let mut out = *g;
    for (i, (lo, hi)) in bounds().into_iter().enumerate() {
        if (x[i] <= lo && g[i] < 0.0) || (x[i] >= hi && g[i] > 0.0) {
            out[i] = 0.0;
        }
    }
    out
}

/// Maximum-likelihood fit with multi-start BFGS ascent.
pub fn fit_zinb(counts: &[TransectCount], opts: &ZinbOptions) -> Result<ZinbFit> {
    if counts.is_empty() {
        return Err(Error::degenerate("no transects"));
    }
    if let Some(c) = counts.iter().find(|c| !(c.covered_area_km2 > 0.0)) {
        return Err(Error::degenerate(alloc::format!(
            "transect {} has non-positive covered area",
            c.transect_id
        )));
    }
    if counts.iter().all(|c| c.animal_count == 0) {
        return Err(Error::NonIdentifiable("all counts are zero".into()));
    }
    let obs = data(counts);
    let starts = starting_points(&obs, opts);
    let bfgs = BfgsOptions {
        max_iter: opts.max_iter,
        f_tol: opts.tol,
        g_tol: 1e-7,
    };

    let mut start_logliks = Vec::with_capacity(starts.len());
    let mut best: Option<([f64; 3], f64, usize, bool)> = None;
    let mut best_any = f64::NEG_INFINITY;
    for s in &starts {
        let mut s = *s;
        clamp3(&mut s);
        start_logliks.push(zinb_loglik_grad(&s, &obs).0);
        let out = maximize(
            |t| {
                let (f, g) = zinb_loglik_grad(t, &obs);
                (f, g.to_vec())
            },
            &s,
            &bounds(),
            bfgs,
        );
        let x0 = [out.x[0], out.x[1], out.x[2]];
        let (x, f, extra) = polish(&obs, x0, out.value);
        let (_, g) = zinb_loglik_grad(&x, &obs);
        let gmax = max_abs(&projected_gradient(&x, &g));
        let converged = f.is_finite() && (out.converged || gmax < 1e-6) && gmax < 1e-4;
        best_any = best_any.max(f);
        let better = match &best {
            None => true,
            Some((_, bf, _, bc)) => (converged && !bc) || (converged == *bc && f > *bf),
        };
        if better {
            best = Some((x, f, out.iterations + extra, converged));
        }
    }
    let (theta, loglik, n_iterations, converged) = best.expect("at least one start");
    if !converged {
        return Err(Error::NonConvergence {
            best_loglik: best_any,
        });
    }

    let (_, g) = zinb_loglik_grad(&theta, &obs);
    let gradient_max_abs = max_abs(&projected_gradient(&theta, &g));
    let h = fd_hessian(|t| zinb_loglik_grad(t, &obs).1.to_vec(), &theta, 1e-5);
    let mut neg = Matrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            neg[(i, j)] = -h[(i, j)];
        }
    }
    let (cov, flat_directions) = spd_pseudo_inverse(&neg, 1e-13);
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = cov[(i, j)];
        }
    }

    Ok(ZinbFit {
        beta0: theta[1],
        pi: logistic(theta[0]),
        k: exp(theta[2]),
        theta,
        covariance,
        loglik,
        converged,
        n_iterations,
        gradient_max_abs,
        start_logliks,
        flat_directions,
        n_obs: counts.len(),
    })
}

/// Expected density `(1 − π̂)·exp(β̂0)` with a delta-method standard error.
pub fn zinb_density(fit: &ZinbFit, counts: &[TransectCount]) -> Result<DensityEstimate> {
    if !fit.converged {
        return Err(Error::NonConvergence {
            best_loglik: fit.loglik,
        });
    }
    let scale = exp(fit.beta0);
    let density = (1.0 - fit.pi) * scale;
    // ∂D/∂(logit π) = −π(1−π)e^β0, ∂D/∂β0 = D, ∂D/∂ln k = 0.
    let grad = [-fit.pi * (1.0 - fit.pi) * scale, density, 0.0];
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * fit.covariance[i][j] * grad[j];
        }
    }
    let se = sqrt(var.max(0.0));
    let mut est = DensityEstimate::point(Method::Zinb, density, counts.len());
    est.se = Some(se);
    est.ci_low = Some((density - Z_95 * se).max(0.0));
    est.ci_high = Some(density + Z_95 * se);
    est.note("pi", fit.pi);
    est.note("k", fit.k);
    est.note("beta0", fit.beta0);
    est.note("loglik", fit.loglik);
    est.note("iterations", fit.n_iterations);
    if fit.flat_directions > 0 {
        est.note("flat_directions", fit.flat_directions);
    }
    Ok(est)
}
