//! Mutual information of equiprobable inputs on the vector AWGN channel,
//! together with the spectral efficiency curves and wideband limits derived
//! from it.
//!
//! With `n ~ N(0, N0/2 I)` and `d_ij = s_i - s_j`,
//!
//! ```text
//! I = log2 M - (1/M) sum_i E[ log2 sum_j exp(-(|d_ij|^2 + 2 n.d_ij) / N0) ]
//! ```
//!
//! Only differences enter, so the expectation is taken over the (at most
//! three dimensional) span of the differences.

use gauss_quad::hermite::GaussHermite;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BandwidthFactor, Constellation, Point3};
use crate::metrics::{ebn0_db_from_snr, snr_from_ebn0_db, Measure, PowerSummary};
use crate::parallel::Execution;

/// Noise samples per independently seeded chunk.
const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiMethod {
    /// Monte Carlo with `samples` noise vectors, drawn as antithetic pairs
    /// `(z, -z)` and whitened to unit sample covariance. Odd-order noise
    /// terms then cancel exactly and the second-order term is exact, which
    /// matters at low SNR where the information itself is second order.
    MonteCarlo { samples: usize, seed: u64 },
    /// Tensor Gauss-Hermite rule with `order` nodes per dimension.
    GaussHermite { order: usize },
}

impl Default for MiMethod {
    fn default() -> Self {
        MiMethod::MonteCarlo {
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub bits: f64,
    /// Monte Carlo standard error; zero for quadrature.
    pub std_error: f64,
}

/// Orthonormal coordinates of the points in the span of their differences.
fn reduce_to_span(c: &Constellation) -> (usize, Vec<[f64; 3]>) {
    let scale = c.points.iter().map(Point3::norm).fold(1.0, f64::max);
    let origin = c.points[0];
    let mut basis: Vec<[f64; 3]> = Vec::new();
    for p in &c.points[1..] {
        let d = *p - origin;
        let mut v = [d.w1, d.w2, d.w3];
        for _ in 0..2 {
            for b in &basis {
                let dot = v[0] * b[0] + v[1] * b[1] + v[2] * b[2];
                for k in 0..3 {
                    v[k] -= dot * b[k];
                }
            }
        }
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-9 * scale {
            basis.push([v[0] / n, v[1] / n, v[2] / n]);
            if basis.len() == 3 {
                break;
            }
        }
    }
    let coords = c
        .points
        .iter()
        .map(|p| {
            let mut out = [0.0; 3];
            for (k, b) in basis.iter().enumerate() {
                out[k] = p.w1 * b[0] + p.w2 * b[1] + p.w3 * b[2];
            }
            out
        })
        .collect();
    (basis.len(), coords)
}

/// Applies `L^-1` to every sample, where `L L^T` is the sample second
/// moment matrix, so the samples have exactly unit covariance.
fn whiten(samples: &mut [[f64; 3]], dim: usize) {
    if samples.is_empty() || dim == 0 {
        return;
    }
    let n = samples.len() as f64;
    let mut c = [[0.0f64; 3]; 3];
    for z in samples.iter() {
        for a in 0..dim {
            for b in 0..=a {
                c[a][b] += z[a] * z[b] / n;
            }
        }
    }
    // Cholesky factor, lower triangular.
    let mut l = [[0.0f64; 3]; 3];
    for a in 0..dim {
        for b in 0..=a {
            let s: f64 = (0..b).map(|k| l[a][k] * l[b][k]).sum();
            if a == b {
                let d = c[a][a] - s;
                if !(d > 0.0) {
                    return;
                }
                l[a][a] = d.sqrt();
            } else {
                l[a][b] = (c[a][b] - s) / l[b][b];
            }
        }
    }
    for z in samples.iter_mut() {
        let mut y = [0.0; 3];
        for a in 0..dim {
            let s: f64 = (0..a).map(|k| l[a][k] * y[k]).sum();
            y[a] = (z[a] - s) / l[a][a];
        }
        *z = y;
    }
}

/// Precomputed state for repeated evaluations of one constellation at
/// different noise levels. Monte Carlo evaluations reuse the same noise
/// draws (common random numbers), so the estimate is a smooth, monotone
/// function of `N0`.
pub struct MiEvaluator {
    m: usize,
    dim: usize,
    /// `diffs[i * m + j] = s_i - s_j` in span coordinates.
    diffs: Vec<[f64; 3]>,
    /// Standard normal samples (or quadrature nodes scaled to unit variance).
    nodes: Vec<[f64; 3]>,
    /// Quadrature weights; empty for Monte Carlo (equal weights).
    weights: Vec<f64>,
    antithetic: bool,
    execution: Execution,
}

impl MiEvaluator {
    pub fn new(c: &Constellation, method: MiMethod) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidConstellation("empty constellation".into()));
        }
        let (dim, coords) = reduce_to_span(c);
        let m = c.len();
        let mut diffs = Vec::with_capacity(m * m);
        for a in &coords {
            for b in &coords {
                diffs.push([a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
            }
        }
        let (nodes, weights, antithetic) = match method {
            MiMethod::MonteCarlo { samples, seed } => {
                if samples < 2 {
                    return Err(Error::InvalidArgument("need at least 2 samples".into()));
                }
                let base = samples / 2;
                let chunks = base.div_ceil(CHUNK);
                let drawn = Execution::default().map_indexed(chunks, |k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    let n = CHUNK.min(base - k * CHUNK);
                    (0..n)
                        .map(|_| {
                            let mut z = [0.0; 3];
                            for v in z.iter_mut().take(dim) {
                                *v = StandardNormal.sample(&mut rng);
                            }
                            z
                        })
                        .collect::<Vec<_>>()
                });
                let mut nodes = drawn.concat();
                whiten(&mut nodes, dim);
                (nodes, Vec::new(), true)
            }
            MiMethod::GaussHermite { order } => {
                let rule = GaussHermite::new(order)
                    .map_err(|e| Error::InvalidArgument(format!("Gauss-Hermite order {order}: {e}")))?;
                // Weight exp(-x^2) corresponds to N(0, 1/2); rescale nodes to
                // unit variance and normalize the weights.
                let pairs: Vec<(f64, f64)> = rule
                    .as_node_weight_pairs()
                    .iter()
                    .map(|&(x, w)| (x * std::f64::consts::SQRT_2, w / std::f64::consts::PI.sqrt()))
                    .collect();
                let mut nodes = vec![[0.0; 3]];
                let mut weights = vec![1.0];
                for axis in 0..dim {
                    let mut nn = Vec::with_capacity(nodes.len() * pairs.len());
                    let mut ww = Vec::with_capacity(nodes.len() * pairs.len());
                    for (node, w) in nodes.iter().zip(&weights) {
                        for &(x, v) in &pairs {
                            let mut z = *node;
                            z[axis] = x;
                            nn.push(z);
                            ww.push(w * v);
                        }
                    }
                    nodes = nn;
                    weights = ww;
                }
                (nodes, weights, false)
            }
        };
        Ok(Self {
            m,
            dim,
            diffs,
            nodes,
            weights,
            antithetic,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Dimension of the span the expectation runs over.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(1/M) sum_i ln sum_j exp(...)` for noise `sigma * z`.
    fn conditional_log_sum(&self, z: &[f64; 3], sigma: f64, n0: f64) -> f64 {
        let m = self.m;
        let mut total = 0.0;
        let mut e = vec![0.0; m];
        for i in 0..m {
            let mut max = f64::NEG_INFINITY;
            for (j, ej) in e.iter_mut().enumerate() {
                let d = &self.diffs[i * m + j];
                let mut dd = 0.0;
                let mut nd = 0.0;
                for k in 0..self.dim {
                    dd += d[k] * d[k];
                    nd += z[k] * d[k];
                }
                *ej = -(dd + 2.0 * sigma * nd) / n0;
                max = max.max(*ej);
            }
            let s: f64 = e.iter().map(|v| (v - max).exp()).sum();
            total += max + s.ln();
        }
        total / m as f64
    }

    pub fn evaluate(&self, n0: f64) -> Result<MiEstimate> {
        if !(n0 > 0.0) || !n0.is_finite() {
            return Err(Error::InvalidArgument(format!("n0 must be positive, got {n0}")));
        }
        let log2m = (self.m as f64).log2();
        if self.dim == 0 {
            // All points coincide: nothing can be learned from the output.
            return Ok(MiEstimate { bits: 0.0, std_error: 0.0 });
        }
        let sigma = (n0 / 2.0).sqrt();
        let ln2 = std::f64::consts::LN_2;
        let chunks = self.nodes.len().div_ceil(CHUNK);
        if self.antithetic {
            let partial = self.execution.map_indexed(chunks, |k| {
                let (mut s, mut s2) = (0.0, 0.0);
                for z in &self.nodes[k * CHUNK..((k + 1) * CHUNK).min(self.nodes.len())] {
                    let neg = [-z[0], -z[1], -z[2]];
                    let v = 0.5 * (self.conditional_log_sum(z, sigma, n0) + self.conditional_log_sum(&neg, sigma, n0));
                    s += v;
                    s2 += v * v;
                }
                (s, s2)
            });
            let n = self.nodes.len() as f64;
            let (s, s2) = partial.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
            let mean = s / n;
            let var = ((s2 / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
            Ok(MiEstimate {
                bits: log2m - mean / ln2,
                std_error: (var / n).sqrt() / ln2,
            })
        } else {
            let partial = self.execution.map_indexed(chunks, |k| {
                let lo = k * CHUNK;
                let hi = ((k + 1) * CHUNK).min(self.nodes.len());
                (lo..hi)
                    .map(|t| self.weights[t] * self.conditional_log_sum(&self.nodes[t], sigma, n0))
                    .sum::<f64>()
            });
            let mean: f64 = partial.into_iter().sum();
            Ok(MiEstimate {
                bits: (log2m - mean / ln2).max(0.0),
                std_error: 0.0,
            })
        }
    }
}

/// Mutual information in bits per symbol at noise density `n0`.
pub fn mutual_information(c: &Constellation, n0: f64, method: MiMethod) -> Result<MiEstimate> {
    MiEvaluator::new(c, method)?.evaluate(n0)
}

/// Root of a monotone function on a bracket, by the Illinois variant of
/// regula falsi (bracketing, superlinear).
pub(crate) fn solve_bracketed(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> Result<f64> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoConvergence(format!("root not bracketed by [{a}, {b}]")));
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol {
            return Ok(0.5 * (a + b));
        }
    }
    Err(Error::NoConvergence("bracketed root search did not converge".into()))
}

/// One point of a spectral-efficiency curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    /// SNR under the curve's measure.
    pub snr_db: f64,
    pub gamma_eb_db: f64,
    /// Noise density solving `gamma_Eb = 10 log10(Es / (I N0))`; infinite
    /// below the zero-crossing.
    pub n0: f64,
    pub mi_bits: f64,
    pub std_error: f64,
    /// `I / bandwidth_factor` in bit/s/Hz.
    pub eta: f64,
}

/// Range of `ln(N0 / Es)` searched when solving for the noise level.
const LN_N0_RANGE: (f64, f64) = (-30.0, 12.0);

/// Solves `gamma_Eb = 10 log10(Es / (I(N0) N0))` for `N0` with `R = I`.
fn solve_n0(ev: &MiEvaluator, es: f64, gamma_eb_db: f64) -> Result<Option<(f64, MiEstimate)>> {
    let target = gamma_eb_db * std::f64::consts::LN_10 / 10.0;
    // g(x) = ln(Es / (I N0)) - target with N0 = Es e^x, decreasing in x.
    let g = |x: f64| -> Result<f64> {
        let n0 = es * x.exp();
        let i = ev.evaluate(n0)?.bits;
        if i <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-(i.ln() + x) - target)
    };
    let (lo, hi) = LN_N0_RANGE;
    let g_hi = g(hi)?;
    if g_hi >= 0.0 {
        // Even vanishing rates need more SNR than available: below the
        // zero-crossing.
        return Ok(None);
    }
    // Shrink the upper end until the estimate is positive so the secant
    // steps stay finite.
    let mut top = hi;
    while g(top)? == f64::NEG_INFINITY && top > lo {
        top -= 1.0;
    }
    if g(lo)? <= 0.0 {
        return Err(Error::NoConvergence(format!(
            "gamma_Eb = {gamma_eb_db} dB is above the searched noise range"
        )));
    }
    let x = solve_bracketed(g, lo, top, 1e-9)?;
    let n0 = es * x.exp();
    Ok(Some((n0, ev.evaluate(n0)?)))
}

/// Spectral efficiency `eta = I / bandwidth_factor` over an SNR grid in
/// the given measure, with the rate set to the mutual information itself.
pub fn spectral_efficiency_curve(
    c: &Constellation,
    measure: Measure,
    snr_grid_db: &[f64],
    method: MiMethod,
) -> Result<Vec<EfficiencyPoint>> {
    let ev = MiEvaluator::new(c, method)?;
    let s = PowerSummary::of(c);
    let bw = c.bandwidth_factor.value();
    snr_grid_db
        .iter()
        .map(|&snr| {
            if !snr.is_finite() {
                return Err(Error::InvalidArgument(format!("SNR grid value {snr} is not finite")));
            }
            let g = ebn0_db_from_snr(c, measure, snr)?;
            Ok(match solve_n0(&ev, s.es, g)? {
                Some((n0, est)) => EfficiencyPoint {
                    snr_db: snr,
                    gamma_eb_db: g,
                    n0,
                    mi_bits: est.bits,
                    std_error: est.std_error,
                    eta: est.bits / bw,
                },
                None => EfficiencyPoint {
                    snr_db: snr,
                    gamma_eb_db: g,
                    n0: f64::INFINITY,
                    mi_bits: 0.0,
                    std_error: 0.0,
                    eta: 0.0,
                },
            })
        })
        .collect()
}

/// SNR (dB, in `measure`) at which the constellation reaches spectral
/// efficiency `eta` with `R = I`.
pub fn snr_at_efficiency(ev: &MiEvaluator, c: &Constellation, measure: Measure, eta: f64) -> Result<f64> {
    let bw = c.bandwidth_factor.value();
    let i_target = eta * bw;
    let log2m = (c.len() as f64).log2();
    if !(i_target > 0.0 && i_target < log2m) {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta} is outside (0, {})",
            log2m / bw
        )));
    }
    let es = PowerSummary::of(c).es;
    let x = solve_bracketed(
        |x| Ok(ev.evaluate(es * f64::exp(x))?.bits - i_target),
        LN_N0_RANGE.0,
        LN_N0_RANGE.1,
        1e-10,
    )?;
    let gamma_eb = 10.0 * (es / (i_target * es * x.exp())).log10();
    snr_from_ebn0_db(c, measure, gamma_eb)
}

/// Spectral efficiency at which constellations `a` and `b` need the same
/// SNR under `measure`, searched in `[eta_lo, eta_hi]`.
pub fn efficiency_crossover(
    a: &Constellation,
    b: &Constellation,
    measure: Measure,
    eta_lo: f64,
    eta_hi: f64,
    method: MiMethod,
) -> Result<f64> {
    let ea = MiEvaluator::new(a, method)?;
    let eb = MiEvaluator::new(b, method)?;
    solve_bracketed(
        |eta| Ok(snr_at_efficiency(&ea, a, measure, eta)? - snr_at_efficiency(&eb, b, measure, eta)?),
        eta_lo,
        eta_hi,
        1e-4,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCrossing {
    pub measure: Measure,
    pub value_db: f64,
}

/// Lowest SNR at which the spectral efficiency is positive, in closed form.
pub fn zero_crossing(c: &Constellation, measure: Measure) -> Result<ZeroCrossing> {
    let m = c.len() as f64;
    let sum = c.points.iter().fold(Point3::ORIGIN, |a, p| a + *p);
    let energy: f64 = c.points.iter().map(Point3::norm_sq).sum();
    let spread = m * energy - sum.norm_sq();
    let scale = energy.max(1e-300) * m;
    if !(spread > 1e-12 * scale) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let ln2 = std::f64::consts::LN_2;
    let value_db = match measure {
        Measure::AvgElectrical => 10.0 * (ln2 * m * energy / spread).log10(),
        Measure::AvgOptical => 5.0 * (sum.w1 * sum.w1 * ln2 / spread).log10(),
        Measure::PeakOptical => {
            let peak = PowerSummary::of(c).peak_moment;
            5.0 * ((m * peak).powi(2) * ln2 / spread).log10()
        }
    };
    Ok(ZeroCrossing { measure, value_db })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidebandBound {
    pub value_db: f64,
    /// The peak-power bound is a conjecture, not a theorem.
    pub conjectured: bool,
}

/// Lower bound on the zero-crossing of any `m`-point constellation.
pub fn wideband_bound(m: usize, measure: Measure) -> Result<WidebandBound> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m must be at least 2, got {m}")));
    }
    let mf = m as f64;
    let ln2 = std::f64::consts::LN_2;
    Ok(match measure {
        Measure::AvgElectrical => WidebandBound {
            value_db: 10.0 * (mf * ln2 / (mf - 1.0)).log10(),
            conjectured: false,
        },
        Measure::AvgOptical => WidebandBound {
            value_db: 5.0 * (2.0 * ln2 / (3.0 * (mf - 1.0))).log10(),
            conjectured: false,
        },
        Measure::PeakOptical => WidebandBound {
            value_db: 5.0 * (4.0 * ln2).log10(),
            conjectured: true,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidebandVariant {
    /// Nonzero point on the axis; one dimension, bandwidth factor 1.
    AxisE,
    /// Nonzero point on the cone boundary; bandwidth factor 2.
    BoundaryO,
}

impl std::str::FromStr for WidebandVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axis-e" | "e" => Ok(WidebandVariant::AxisE),
            "boundary-o" | "o" => Ok(WidebandVariant::BoundaryO),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant `{other}` (expected axis-e or boundary-o)"
            ))),
        }
    }
}

/// `m - 1` points at the apex and one point carrying all the energy, which
/// attains the electrical (`AxisE`) or optical (`BoundaryO`) bound.
pub fn make_wideband_constellation(m: usize, es: f64, variant: WidebandVariant) -> Result<Constellation> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m must be at least 2, got {m}")));
    }
    if !(es > 0.0) || !es.is_finite() {
        return Err(Error::InvalidArgument(format!("es must be positive, got {es}")));
    }
    let total = m as f64 * es;
    let (name, bw, point) = match variant {
        WidebandVariant::AxisE => ("E", BandwidthFactor::Single, Point3::axial(total.sqrt())),
        WidebandVariant::BoundaryO => (
            "O",
            BandwidthFactor::Double,
            Point3::new((2.0 / 3.0 * total).sqrt(), 0.0, (total / 3.0).sqrt()),
        ),
    };
    let mut points = vec![Point3::ORIGIN; m - 1];
    points.push(point);
    Constellation::new(format!("{name}{m}"), bw, points)
}
