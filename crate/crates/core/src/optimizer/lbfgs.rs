//! Limited-memory BFGS with Armijo backtracking, used as the inner solver of
//! the augmented Lagrangian loop.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the largest gradient component falls below this.
    pub gtol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 12,
            max_iters: 500,
            gtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LbfgsReport {
    pub value: f64,
    pub iterations: usize,
    pub grad_inf: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `f` in place. `f(x, grad)` returns the value and writes the
/// gradient.
pub fn minimize<F>(mut f: F, x: &mut [f64], opts: LbfgsOptions) -> LbfgsReport
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut fx = f(x, &mut g);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha = vec![0.0; opts.memory];
    let mut stalled = 0;
    let mut it = 0;

    while it < opts.max_iters {
        let gnorm = inf_norm(&g);
        if gnorm <= opts.gtol || !fx.is_finite() {
            break;
        }
        it += 1;

        // two-loop recursion
        dir.copy_from_slice(&g);
        for (k, (s, y, rho)) in hist.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha[k] = a;
            for (d, yi) in dir.iter_mut().zip(y) {
                *d -= a * yi;
            }
        }
        let gamma = match hist.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / gnorm.max(1.0),
        };
        for d in dir.iter_mut() {
            *d *= gamma;
        }
        for (k, (s, y, rho)) in hist.iter().enumerate() {
            let b = rho * dot(y, &dir);
            for (d, si) in dir.iter_mut().zip(s) {
                *d += (alpha[k] - b) * si;
            }
        }
        for d in dir.iter_mut() {
            *d = -*d;
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            hist.clear();
            for (d, gi) in dir.iter_mut().zip(&g) {
                *d = -gi / gnorm.max(1.0);
            }
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                let mut s = vec![0.0; n];
                let mut y = vec![0.0; n];
                for i in 0..n {
                    s[i] = x_new[i] - x[i];
                    y[i] = g_new[i] - g[i];
                }
                let sy = dot(&s, &y);
                if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
                    if hist.len() == opts.memory {
                        hist.pop_front();
                    }
                    hist.push_back((s, y, 1.0 / sy));
                }
                let decrease = fx - f_new;
                if decrease <= 1e-16 * fx.abs().max(1.0) {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                x.copy_from_slice(&x_new);
                g.copy_from_slice(&g_new);
                fx = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            stalled += 1;
        }
        if stalled >= 5 {
            break;
        }
    }

    LbfgsReport {
        value: fx,
        iterations: it,
        grad_inf: inf_norm(&g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let mut x = vec![-1.2, 1.0];
        let r = minimize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            &mut x,
            LbfgsOptions {
                max_iters: 1000,
                ..Default::default()
            },
        );
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?} {r:?}");
    }

    #[test]
    fn quadratic_in_many_dims() {
        let n = 30;
        let mut x = vec![1.0; n];
        minimize(
            |x, g| {
                let mut f = 0.0;
                for i in 0..x.len() {
                    let w = (i + 1) as f64;
                    f += 0.5 * w * (x[i] - 0.1 * i as f64).powi(2);
                    g[i] = w * (x[i] - 0.1 * i as f64);
                }
                f
            },
            &mut x,
            LbfgsOptions::default(),
        );
        for (i, v) in x.iter().enumerate() {
            assert!((v - 0.1 * i as f64).abs() < 1e-8);
        }
    }
}
