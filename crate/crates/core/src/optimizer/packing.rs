//! Augmented Lagrangian formulation of the constrained packing problem.
//!
//! Variables are the `3M` point coordinates, plus an epigraph variable `t`
//! for the peak objective, which turns `min max_i peak_i` into
//! `min t  s.t.  peak_i <= t`. Inequalities, all of the form `c(x) <= 0`:
//!
//! * pairs: `1 - |s_i - s_j|`
//! * cone: `sqrt(2) rho_i - w1_i`
//! * peak (peak objective only): `w1_i + sqrt(2) rho_i - t`
//!
//! A secondary solve can add a cap `value(measure) <= cap` on another
//! measure; it is used to break ties between equally good packings.
//!
//! The radial distance `rho` is smoothed as `sqrt(rho^2 + eps^2) - eps`,
//! exact on the axis; `eps` shrinks over the outer iterations.

use std::f64::consts::SQRT_2;

use crate::geometry::{AdmissibleCone, Point3};
use crate::metrics::Measure;

#[derive(Debug, Clone, Copy)]
pub struct Packing {
    pub m: usize,
    pub objective: Measure,
    pub cap: Option<(Measure, f64)>,
}

impl Packing {
    pub fn new(m: usize, objective: Measure) -> Self {
        Self {
            m,
            objective,
            cap: None,
        }
    }

    pub fn with_cap(mut self, measure: Measure, cap: f64) -> Self {
        self.cap = Some((measure, cap));
        self
    }

    fn n_cap(&self) -> usize {
        match self.cap {
            None => 0,
            Some((Measure::PeakOptical, _)) => self.m,
            Some(_) => 1,
        }
    }

    fn has_epigraph(&self) -> bool {
        self.objective == Measure::PeakOptical
    }

    pub fn n_vars(&self) -> usize {
        3 * self.m + usize::from(self.has_epigraph())
    }

    pub fn n_constraints(&self) -> usize {
        let pairs = self.m * (self.m - 1) / 2;
        pairs + self.m + if self.has_epigraph() { self.m } else { 0 } + self.n_cap()
    }

    pub fn pack(&self, points: &[Point3]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_vars());
        for p in points {
            x.extend_from_slice(&[p.w1, p.w2, p.w3]);
        }
        if self.has_epigraph() {
            x.push(points.iter().map(Point3::peak).fold(f64::NEG_INFINITY, f64::max));
        }
        x
    }

    pub fn unpack(&self, x: &[f64]) -> Vec<Point3> {
        x[..3 * self.m]
            .chunks_exact(3)
            .map(|c| Point3::new(c[0], c[1], c[2]))
            .collect()
    }

    /// Smooth objective (uses `t` for the peak objective).
    fn objective(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let inv_m = 1.0 / self.m as f64;
        match self.objective {
            Measure::AvgElectrical => {
                let mut f = 0.0;
                for (xi, gi) in x.iter().zip(grad.iter_mut()) {
                    f += xi * xi;
                    *gi = 2.0 * xi * inv_m;
                }
                f * inv_m
            }
            Measure::AvgOptical => {
                let mut f = 0.0;
                for i in 0..self.m {
                    f += x[3 * i];
                    grad[3 * i] = inv_m;
                }
                f * inv_m
            }
            Measure::PeakOptical => {
                let t = 3 * self.m;
                grad[t] = 1.0;
                x[t]
            }
        }
    }

    /// Augmented Lagrangian value and gradient.
    pub fn lagrangian(&self, x: &[f64], lambda: &[f64], mu: f64, eps: f64, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut val = self.objective(x, grad);
        let mut k = 0;
        let inv2mu = 0.5 / mu;
        let term = |c: f64, k: usize, val: &mut f64| -> f64 {
            let shifted = (lambda[k] + mu * c).max(0.0);
            *val += inv2mu * (shifted * shifted - lambda[k] * lambda[k]);
            shifted
        };

        for i in 0..self.m {
            for j in i + 1..self.m {
                let d0 = x[3 * i] - x[3 * j];
                let d1 = x[3 * i + 1] - x[3 * j + 1];
                let d2 = x[3 * i + 2] - x[3 * j + 2];
                let d = (d0 * d0 + d1 * d1 + d2 * d2).sqrt().max(1e-300);
                let w = term(1.0 - d, k, &mut val);
                if w > 0.0 {
                    let s = w / d;
                    grad[3 * i] -= s * d0;
                    grad[3 * i + 1] -= s * d1;
                    grad[3 * i + 2] -= s * d2;
                    grad[3 * j] += s * d0;
                    grad[3 * j + 1] += s * d1;
                    grad[3 * j + 2] += s * d2;
                }
                k += 1;
            }
        }

        for i in 0..self.m {
            let (w1, w2, w3) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
            let r = (w2 * w2 + w3 * w3 + eps * eps).sqrt();
            let w = term(SQRT_2 * (r - eps) - w1, k, &mut val);
            if w > 0.0 {
                grad[3 * i] -= w;
                grad[3 * i + 1] += w * SQRT_2 * w2 / r;
                grad[3 * i + 2] += w * SQRT_2 * w3 / r;
            }
            k += 1;
        }

        if self.has_epigraph() {
            let t = 3 * self.m;
            for i in 0..self.m {
                let (w1, w2, w3) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
                let r = (w2 * w2 + w3 * w3 + eps * eps).sqrt();
                let w = term(w1 + SQRT_2 * (r - eps) - x[t], k, &mut val);
                if w > 0.0 {
                    grad[3 * i] += w;
                    grad[3 * i + 1] += w * SQRT_2 * w2 / r;
                    grad[3 * i + 2] += w * SQRT_2 * w3 / r;
                    grad[t] -= w;
                }
                k += 1;
            }
        }

        if let Some((measure, cap)) = self.cap {
            let inv_m = 1.0 / self.m as f64;
            match measure {
                Measure::AvgElectrical => {
                    let es = x[..3 * self.m].iter().map(|v| v * v).sum::<f64>() * inv_m;
                    let w = term(es - cap, k, &mut val);
                    if w > 0.0 {
                        for i in 0..3 * self.m {
                            grad[i] += w * 2.0 * x[i] * inv_m;
                        }
                    }
                }
                Measure::AvgOptical => {
                    let dc = (0..self.m).map(|i| x[3 * i]).sum::<f64>() * inv_m;
                    let w = term(dc - cap, k, &mut val);
                    if w > 0.0 {
                        for i in 0..self.m {
                            grad[3 * i] += w * inv_m;
                        }
                    }
                }
                Measure::PeakOptical => {
                    for i in 0..self.m {
                        let (w1, w2, w3) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
                        let r = (w2 * w2 + w3 * w3 + eps * eps).sqrt();
                        let w = term(w1 + SQRT_2 * (r - eps) - cap, k + i, &mut val);
                        if w > 0.0 {
                            grad[3 * i] += w;
                            grad[3 * i + 1] += w * SQRT_2 * w2 / r;
                            grad[3 * i + 2] += w * SQRT_2 * w3 / r;
                        }
                    }
                }
            }
        }
        val
    }

    /// Constraint values with exact (unsmoothed) radii.
    pub fn constraints(&self, x: &[f64], out: &mut [f64]) {
        let pts = self.unpack(x);
        let mut k = 0;
        for i in 0..self.m {
            for j in i + 1..self.m {
                out[k] = 1.0 - pts[i].dist(&pts[j]);
                k += 1;
            }
        }
        for p in &pts {
            out[k] = SQRT_2 * p.radial() - p.w1;
            k += 1;
        }
        if self.has_epigraph() {
            let t = x[3 * self.m];
            for p in &pts {
                out[k] = p.peak() - t;
                k += 1;
            }
        }
        if let Some((measure, cap)) = self.cap {
            let inv_m = 1.0 / self.m as f64;
            match measure {
                Measure::AvgElectrical => {
                    out[k] = pts.iter().map(Point3::norm_sq).sum::<f64>() * inv_m - cap;
                }
                Measure::AvgOptical => {
                    out[k] = pts.iter().map(|p| p.w1).sum::<f64>() * inv_m - cap;
                }
                Measure::PeakOptical => {
                    for (i, p) in pts.iter().enumerate() {
                        out[k + i] = p.peak() - cap;
                    }
                }
            }
        }
    }
}

/// Largest violation of the unit-distance and cone constraints.
pub fn feasibility_residual(points: &[Point3]) -> f64 {
    let mut r: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        r = r.max(AdmissibleCone::violation(a));
        for b in &points[i + 1..] {
            r = r.max(1.0 - a.dist(b));
        }
    }
    r
}
