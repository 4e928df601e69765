//! Quasi-Newton (BFGS) maximization of smooth objectives with box bounds,
//! and finite-difference helpers used to check gradients and build Hessians.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::math::sqrt;

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the objective changes by less than this between iterations
    /// and the gradient is small.
    pub f_tol: f64,
    /// Stop when every gradient component is below this.
    pub g_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            f_tol: 1e-8,
            g_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes `f` starting at `x0`. `f` returns the value and gradient.
/// Coordinates are clamped to `bounds`; a gradient component pointing out of
/// an active bound is treated as zero.
pub fn maximize<F>(mut f: F, x0: &[f64], bounds: &[(f64, f64)], opts: BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for (xi, (lo, hi)) in x.iter_mut().zip(bounds) {
            *xi = xi.clamp(*lo, *hi);
        }
    };
    let projected = |x: &[f64], g: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(g)
            .zip(bounds)
            .map(|((xi, gi), (lo, hi))| {
                if (*xi <= *lo && *gi < 0.0) || (*xi >= *hi && *gi > 0.0) {
                    0.0
                } else {
                    *gi
                }
            })
            .collect()
    };

    let mut x = x0.to_vec();
    clamp(&mut x);
    let (mut fx, g) = f(&x);
    let mut g = projected(&x, &g);
    // Inverse Hessian approximation of −f.
    let mut h = Matrix::identity(n);
    let mut converged = false;
    let mut iterations = 0;

    if !fx.is_finite() {
        return BfgsOutcome {
            x,
            value: fx,
            gradient: g,
            iterations,
            converged,
        };
    }

    while iterations < opts.max_iter {
        iterations += 1;
        if max_abs(&g) < opts.g_tol {
            converged = true;
            break;
        }
        // Ascent direction d = H g.
        let mut d = h.mul_vec(&g);
        if dot(&d, &g) <= 0.0 {
            h = Matrix::identity(n);
            d = g.clone();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            clamp(&mut trial);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let (ft, gt) = f(&trial);
            // Armijo condition on the (possibly clamped) step actually taken.
            if ft.is_finite() && ft >= fx + 1e-4 * dot(&moved, &g) && max_abs(&moved) > 0.0 {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // No progress possible along this direction; restart once from
            // steepest ascent, otherwise give up.
            if h != Matrix::identity(n) {
                h = Matrix::identity(n);
                continue;
            }
            converged = max_abs(&g) < sqrt(opts.g_tol);
            break;
        };
        let g_new = projected(&x_new, &g_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        // y for the minimization of −f.
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let df = f_new - fx;
        x = x_new;
        fx = f_new;
        g = g_new;
        if sy > 1e-12 * sqrt(dot(&s, &s)) * sqrt(dot(&y, &y)) {
            let hy = h.mul_vec(&y);
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            let mut next = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    next[(i, j)] = h[(i, j)] - rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            h = next;
        }
        if df.abs() < opts.f_tol && max_abs(&g) < opts.g_tol * 1e3 {
            converged = true;
            break;
        }
    }
    BfgsOutcome {
        x,
        value: fx,
        gradient: g,
        iterations,
        converged,
    }
}

/// Central finite-difference gradient.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + h;
        let up = f(&xp);
        xp[i] = orig - h;
        let down = f(&xp);
        xp[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    g
}

/// Symmetrized Hessian from central differences of an analytic gradient.
pub fn fd_hessian<G: FnMut(&[f64]) -> Vec<f64>>(mut grad: G, x: &[f64], h: f64) -> Matrix {
    let n = x.len();
    let mut m = Matrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let orig = xp[j];
        xp[j] = orig + h;
        let up = grad(&xp);
        xp[j] = orig - h;
        let down = grad(&xp);
        xp[j] = orig;
        for i in 0..n {
            m[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_concave_quadratic() {
        let f = |x: &[f64]| {
            let v =
                -(x[0] - 1.0).powi(2) - 4.0 * (x[1] + 2.0).powi(2) - (x[0] - 1.0) * (x[1] + 2.0);
            let g = vec![
                -2.0 * (x[0] - 1.0) - (x[1] + 2.0),
                -8.0 * (x[1] + 2.0) - (x[0] - 1.0),
            ];
            (v, g)
        };
        let out = maximize(
            f,
            &[5.0, 5.0],
            &[(-10.0, 10.0), (-10.0, 10.0)],
            BfgsOptions::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6);
        assert!((out.x[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = -((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2));
            let g = vec![
                2.0 * (1.0 - a) + 400.0 * a * (b - a * a),
                -200.0 * (b - a * a),
            ];
            (v, g)
        };
        let out = maximize(
            f,
            &[-1.2, 1.0],
            &[(-5.0, 5.0), (-5.0, 5.0)],
            BfgsOptions::default(),
        );
        assert!(out.converged, "{out:?}");
        assert!((out.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0], vec![1.0]);
        let out = maximize(f, &[0.0], &[(-1.0, 2.0)], BfgsOptions::default());
        assert!(out.converged);
        assert_eq!(out.x[0], 2.0);
    }

    #[test]
    fn finite_differences() {
        let f = |x: &[f64]| x[0] * x[0] * x[1] + x[1].powi(3);
        let g = fd_gradient(f, &[1.5, -0.5], 1e-5);
        assert!((g[0] - 2.0 * 1.5 * -0.5).abs() < 1e-8);
        assert!((g[1] - (1.5 * 1.5 + 3.0 * 0.25)).abs() < 1e-8);
        let grad = |x: &[f64]| vec![2.0 * x[0] * x[1], x[0] * x[0] + 3.0 * x[1] * x[1]];
        let h = fd_hessian(grad, &[1.5, -0.5], 1e-5);
        assert!((h[(0, 1)] - 3.0).abs() < 1e-7);
        assert!((h[(1, 1)] - 6.0 * -0.5).abs() < 1e-7);
    }
}
