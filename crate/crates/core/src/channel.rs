//! Vector AWGN channel `y = s + n` with `N0/2` noise variance per
//! dimension: maximum-likelihood detection, Monte Carlo symbol error rate,
//! the union-bound approximation and exact simplex error rates.

use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Constellation, Point3};
use crate::metrics::{ebn0_db_from_snr, snr_from_ebn0_db, Measure, PowerSummary};
use crate::parallel::Execution;

/// Symbols per independently seeded batch in [`simulate_ser`].
pub const BATCH: u64 = 4096;

/// Default relative distance tolerance when counting minimum-distance pairs.
pub const PAIR_TOL: f64 = 1e-9;

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `N0` for a given `gamma_Eb` in dB, with `Eb = Es / log2 M`.
pub fn n0_from_ebn0_db(c: &Constellation, gamma_eb_db: f64) -> f64 {
    let eb = PowerSummary::of(c).es / c.rate();
    eb / 10f64.powf(gamma_eb_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Number of transmitted symbols.
    pub symbols: u64,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl ChannelConfig {
    pub fn new(symbols: u64, seed: u64) -> Self {
        Self {
            symbols,
            seed,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerEstimate {
    pub errors: u64,
    pub trials: u64,
    pub ser: f64,
    /// Half-width of the 95% Wilson score interval.
    pub ci95_halfwidth: f64,
}

impl SerEstimate {
    pub fn new(errors: u64, trials: u64) -> Self {
        let ser = if trials == 0 { 0.0 } else { errors as f64 / trials as f64 };
        Self {
            errors,
            trials,
            ser,
            ci95_halfwidth: wilson_halfwidth(errors, trials),
        }
    }

    /// Wilson interval centre, which differs from `ser` for small counts.
    pub fn wilson_center(&self) -> f64 {
        if self.trials == 0 {
            return 0.5;
        }
        let (n, z2) = (self.trials as f64, Z95 * Z95);
        (self.ser + z2 / (2.0 * n)) / (1.0 + z2 / n)
    }
}

const Z95: f64 = 1.959_963_984_540_054;

fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.5;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Index of the nearest constellation point; the lowest index wins ties.
pub fn detect_ml(y: &Point3, c: &Constellation) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, s) in c.points.iter().enumerate() {
        let d = (*y - *s).norm_sq();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Monte Carlo symbol error rate at `gamma_Eb` (dB).
pub fn simulate_ser(c: &Constellation, gamma_eb_db: f64, cfg: &ChannelConfig) -> Result<SerEstimate> {
    simulate_ser_n0(c, n0_from_ebn0_db(c, gamma_eb_db), cfg)
}

/// Monte Carlo symbol error rate at noise density `n0`.
///
/// Symbols are split into batches of [`BATCH`]; batch `b` draws from its own
/// stream `(seed, b)`, so the estimate is identical for any schedule.
pub fn simulate_ser_n0(c: &Constellation, n0: f64, cfg: &ChannelConfig) -> Result<SerEstimate> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::InvalidArgument(format!("n0 must be positive, got {n0}")));
    }
    if c.len() < 2 {
        return Err(Error::InvalidConstellation("need at least 2 points".into()));
    }
    let sigma = (n0 / 2.0).sqrt();
    let batches = cfg.symbols.div_ceil(BATCH);
    let m = c.len();
    let counts = cfg.execution.map_indexed(batches as usize, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b as u64);
        let n = BATCH.min(cfg.symbols - b as u64 * BATCH);
        let mut errors = 0u64;
        for _ in 0..n {
            let i = rng.gen_range(0..m);
            let noise = Point3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let y = c.points[i] + noise * sigma;
            if detect_ml(&y, c) != i {
                errors += 1;
            }
        }
        errors
    });
    Ok(SerEstimate::new(counts.into_iter().sum(), cfg.symbols))
}

/// Number of point pairs at the minimum distance, within `rel_tol` of it.
pub fn min_distance_pairs(c: &Constellation, rel_tol: f64) -> usize {
    let d = c.raw_min_distance();
    c.pairs_at_distance(d, rel_tol * d.max(1.0))
}

/// `(2K/M) Q(dmin / sqrt(2 N0))` at `gamma_Eb` (dB), where `K` counts the
/// minimum-distance pairs within [`PAIR_TOL`].
pub fn union_bound_ser(c: &Constellation, gamma_eb_db: f64) -> f64 {
    union_bound_ser_with_tol(c, gamma_eb_db, PAIR_TOL)
}

/// [`union_bound_ser`] with an explicit pair tolerance, for coordinates
/// that are only given to a few decimals.
pub fn union_bound_ser_with_tol(c: &Constellation, gamma_eb_db: f64, pair_tol: f64) -> f64 {
    union_bound_ser_n0(c, n0_from_ebn0_db(c, gamma_eb_db), pair_tol)
}

pub fn union_bound_ser_n0(c: &Constellation, n0: f64, pair_tol: f64) -> f64 {
    let k = min_distance_pairs(c, pair_tol) as f64;
    let d = c.raw_min_distance();
    2.0 * k / c.len() as f64 * q_function(d / (2.0 * n0).sqrt())
}

fn legendre() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16).expect("degree 16 is valid"))
}

/// Adaptive Gauss-Legendre quadrature by interval bisection.
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = legendre().integrate(a, mid, f);
    let right = legendre().integrate(mid, b, f);
    if depth == 0 || (left + right - whole).abs() <= tol {
        return left + right;
    }
    adaptive(f, a, mid, left, 0.5 * tol, depth - 1) + adaptive(f, mid, b, right, 0.5 * tol, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let whole = legendre().integrate(a, b, f);
    adaptive(f, a, b, whole, tol, 30)
}

/// Exact symbol error rate of an `m`-point regular simplex with energy
/// `es_simplex` per symbol about its centroid, as a function of
/// `es_simplex / N0`.
///
/// Evaluated as `P_s = ∫ φ(u) [1 - (1 - Q(u + a))^(m-1)] du` with
/// `a = sqrt(2 (Es/N0) m/(m-1))`. The bracket is computed as
/// `-expm1((m-1) log1p(-Q))`, which keeps full relative accuracy when the
/// error rate is tiny.
pub fn exact_simplex_ser(m: usize, es_simplex_over_n0: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("simplex needs m >= 2, got {m}")));
    }
    if !(es_simplex_over_n0 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Es/N0 must be non-negative, got {es_simplex_over_n0}"
        )));
    }
    let k = (m - 1) as f64;
    let a = (2.0 * es_simplex_over_n0 * m as f64 / k).sqrt();
    if !a.is_finite() {
        return Ok(0.0);
    }
    let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = move |u: f64| phi(u) * -(k * (-q_function(u + a)).ln_1p()).exp_m1();
    // The integrand is negligible below -a - 40 and above 40.
    let lo = -a - 40.0;
    let hi = 40.0;
    // First pass sets the scale for the absolute tolerance.
    let rough = integrate(&f, lo, hi, 1e-12);
    let tol = (1e-10 * rough).clamp(1e-300, 1e-12);
    Ok(integrate(&f, lo, hi, tol).clamp(0.0, k / m as f64))
}

/// Exact error rate of C4 at `Eb/N0` (linear). C4 is a tetrahedron shifted
/// along the axis, with centroid energy `Es/2 = Eb`.
pub fn exact_c4_ser(eb_over_n0: f64) -> Result<f64> {
    exact_simplex_ser(4, eb_over_n0)
}

/// Exact error rate if `c` is a regular simplex (all pairwise distances
/// equal within `rel_tol`), which includes every 2-point constellation.
pub fn exact_ser_if_simplex(c: &Constellation, n0: f64, rel_tol: f64) -> Option<f64> {
    let m = c.len();
    if !(2..=4).contains(&m) {
        return None;
    }
    let d = c.raw_min_distance();
    let pairs = m * (m - 1) / 2;
    if min_distance_pairs(c, rel_tol) != pairs {
        return None;
    }
    let s = PowerSummary::of(c);
    let n = m as f64;
    let centroid = c.points.iter().fold(Point3::ORIGIN, |acc, p| acc + *p) * (1.0 / n);
    let es_simplex = s.es - centroid.norm_sq();
    debug_assert!((es_simplex - d * d * (n - 1.0) / (2.0 * n)).abs() < 1e-6 * d * d);
    exact_simplex_ser(m, es_simplex / n0).ok()
}

/// `gamma_Eb` (dB) at which a decreasing SER curve reaches `target`,
/// by bisection on `log(SER)` to within `tol_db`.
pub fn gamma_eb_at_ser(
    mut ser_at: impl FnMut(f64) -> Result<f64>,
    target: f64,
    tol_db: f64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!("target SER must lie in (0, 1), got {target}")));
    }
    let (mut lo, mut hi) = (-20.0f64, 60.0f64);
    if ser_at(lo)? < target || ser_at(hi)? > target {
        return Err(Error::NoConvergence(format!(
            "SER {target:e} is not bracketed by [{lo}, {hi}] dB"
        )));
    }
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if ser_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// SNR under `measure` (dB) at which `ser_at(gamma_Eb)` reaches `target`.
pub fn snr_at_ser(
    c: &Constellation,
    measure: Measure,
    ser_at: impl FnMut(f64) -> Result<f64>,
    target: f64,
) -> Result<f64> {
    let g = gamma_eb_at_ser(ser_at, target, 1e-4)?;
    snr_from_ebn0_db(c, measure, g)
}

/// Which analytic SER model a constellation gets: the exact simplex
/// formula when it applies, the union bound otherwise.
pub fn analytic_ser(c: &Constellation, gamma_eb_db: f64, pair_tol: f64) -> f64 {
    let n0 = n0_from_ebn0_db(c, gamma_eb_db);
    exact_ser_if_simplex(c, n0, pair_tol).unwrap_or_else(|| union_bound_ser_n0(c, n0, pair_tol))
}

/// Inverse of the measure conversion, for callers that sweep a grid in a
/// measure other than `gamma_Eb`.
pub fn gamma_eb_for(c: &Constellation, measure: Measure, snr_db: f64) -> Result<f64> {
    ebn0_db_from_snr(c, measure, snr_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-16);
        // Q(5) from tables.
        assert!((q_function(5.0) / 2.866_515_718_791_939e-7 - 1.0).abs() < 1e-14);
        assert!((q_function(-1.0) + q_function(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn detection_ties_go_to_lowest_index() {
        let c = catalog::get("C4").unwrap();
        for (i, p) in c.points.iter().enumerate() {
            assert_eq!(detect_ml(p, &c), i);
        }
        let mid = (c.points[0] + c.points[1]) * 0.5;
        assert_eq!(detect_ml(&mid, &c), 0);
    }

    #[test]
    fn detection_matches_brute_force() {
        let c = catalog::get("C_Pe16").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let y = Point3::new(rng.gen_range(-1.0..4.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d: Vec<f64> = c.points.iter().map(|s| y.dist(s)).collect();
            let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
            let first = d.iter().position(|&x| x == min).unwrap();
            assert_eq!(detect_ml(&y, &c), first);
        }
    }

    #[test]
    fn union_bound_multiplicities() {
        let c4 = catalog::get("C4").unwrap();
        assert_eq!(min_distance_pairs(&c4, PAIR_TOL), 6);
        let ook = catalog::get("OOK").unwrap();
        let n0 = 0.1;
        assert!((union_bound_ser_n0(&ook, n0, PAIR_TOL) - q_function((1.0 / (2.0 * n0)).sqrt())).abs() < 1e-16);
        assert!((union_bound_ser_n0(&c4, n0, PAIR_TOL) - 3.0 * q_function((1.0 / (2.0 * n0)).sqrt())).abs() < 1e-16);
    }

    #[test]
    fn simplex_limits() {
        assert!((exact_simplex_ser(4, 0.0).unwrap() - 0.75).abs() < 1e-12);
        assert!((exact_simplex_ser(8, 1e-12).unwrap() - 7.0 / 8.0).abs() < 1e-6);
        assert!(exact_simplex_ser(4, 200.0).unwrap() < 1e-40);
        let mut prev = 1.0;
        for k in 0..40 {
            let p = exact_simplex_ser(4, 0.25 * k as f64).unwrap();
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn two_point_simplex_is_q() {
        // Binary simplex with centroid energy E: Ps = Q(sqrt(2E/N0)).
        for e in [0.1, 1.0, 5.0, 20.0] {
            let p = exact_simplex_ser(2, e).unwrap();
            let q = q_function((2.0 * e).sqrt());
            assert!((p / q - 1.0).abs() < 1e-9, "{e}: {p} vs {q}");
        }
    }

    #[test]
    fn c4_exact_matches_generic_simplex_detection() {
        let c4 = catalog::get("C4").unwrap();
        for g in [0.0, 4.0, 8.0, 12.0] {
            let n0 = n0_from_ebn0_db(&c4, g);
            let eb = 0.75 / 2.0;
            let a = exact_c4_ser(eb / n0).unwrap();
            let b = exact_ser_if_simplex(&c4, n0, PAIR_TOL).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{g}: {a} {b}");
        }
    }

    #[test]
    fn high_snr_is_error_free() {
        let c = catalog::get("C_Pe8").unwrap();
        let est = simulate_ser(&c, 60.0, &ChannelConfig::new(100_000, 3)).unwrap();
        assert_eq!(est.errors, 0);
    }

    #[test]
    fn ook_simulation_matches_closed_form() {
        let ook = catalog::get("OOK").unwrap();
        let g = 10.0;
        let est = simulate_ser(&ook, g, &ChannelConfig::new(400_000, 9)).unwrap();
        let n0 = n0_from_ebn0_db(&ook, g);
        let exact = q_function((1.0 / (2.0 * n0)).sqrt());
        assert!((est.ser - exact).abs() < 3.0 * est.ci95_halfwidth, "{} vs {exact}", est.ser);
    }

    #[test]
    fn simulation_is_schedule_independent() {
        let c = catalog::get("C4").unwrap();
        let mut cfg = ChannelConfig::new(50_000, 77);
        let a = simulate_ser(&c, 6.0, &cfg).unwrap();
        cfg.execution = Execution::Sequential;
        let b = simulate_ser(&c, 6.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wilson_interval() {
        let e = SerEstimate::new(0, 100);
        assert!(e.ci95_halfwidth > 0.0);
        let e = SerEstimate::new(50, 100);
        // p = 1/2: half-width z/(1+z^2/n) * sqrt(1/(4n) + z^2/(4n^2))
        let n = 100.0;
        let z2 = Z95 * Z95;
        let hw = Z95 / (1.0 + z2 / n) * (0.25 / n + z2 / (4.0 * n * n)).sqrt();
        assert!((e.ci95_halfwidth - hw).abs() < 1e-15);
        assert!((e.wilson_center() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bisection_finds_target() {
        let ook = catalog::get("OOK").unwrap();
        let g = gamma_eb_at_ser(|g| Ok(union_bound_ser(&ook, g)), 1e-6, 1e-6).unwrap();
        assert!((union_bound_ser(&ook, g) / 1e-6 - 1.0).abs() < 1e-3);
        assert!(gamma_eb_at_ser(|_| Ok(0.5), 1e-6, 1e-3).is_err());
    }
}
