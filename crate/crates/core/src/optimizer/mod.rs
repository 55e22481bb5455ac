//! Multistart search for power-minimal packings of `M` unit-distance points
//! inside the admissible cone.
//!
//! Each restart draws a random configuration and runs an augmented
//! Lagrangian loop (L-BFGS inner solves, multiplier updates, penalty growth
//! while the residual stalls). The locally optimal configuration is then
//! projected onto the cone and rescaled to unit minimum distance, which makes
//! it exactly feasible. Restarts are independent and seeded from
//! `(seed, restart index)`, so the outcome does not depend on scheduling.
//!
//! Optima are often not unique: for the peak objective the apex point of a
//! packing has slack, and for `M = 2` under average energy any unit vector
//! in the cone is optimal. Ties are broken by a second solve that minimizes
//! a secondary measure (see [`tie_break_measure`]) while capping the primary
//! objective at its best value.

mod lbfgs;
mod packing;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use lbfgs::{minimize as lbfgs_minimize, LbfgsOptions, LbfgsReport};
pub use packing::{feasibility_residual, Packing};

use crate::error::{Error, Result};
use crate::geometry::{canonicalize, project_to_cone, BandwidthFactor, Constellation, Point3};
use crate::metrics::{Measure, PowerSummary};
use crate::parallel::Execution;

pub type Objective = Measure;

pub const MAX_POINTS: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// L-BFGS iteration budget per restart, summed over outer iterations.
    pub max_iters: usize,
    pub seed: u64,
    pub penalty_growth: f64,
    pub constraint_tol: f64,
    pub objective_tol: f64,
    /// Height of the sampling region for initial points; `None` means
    /// `3 M^(1/3)`.
    pub init_box_height: Option<f64>,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 200,
            max_iters: 5000,
            seed: 0,
            penalty_growth: 10.0,
            constraint_tol: 1e-9,
            objective_tol: 1e-10,
            init_box_height: None,
            execution: Execution::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.penalty_growth > 1.0) {
            return bad("penalty_growth must exceed 1");
        }
        if !(self.constraint_tol > 0.0 && self.constraint_tol < 1e-6) {
            return bad("constraint_tol must lie in (0, 1e-6)");
        }
        if !(self.objective_tol > 0.0) {
            return bad("objective_tol must be positive");
        }
        if let Some(h) = self.init_box_height {
            if !(h > 0.0) {
                return bad("init_box_height must be positive");
            }
        }
        Ok(())
    }

    fn box_height(&self, m: usize) -> f64 {
        self.init_box_height
            .unwrap_or_else(|| 3.0 * (m as f64).cbrt())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    /// Objective after the final projection and rescaling.
    pub objective: f64,
    /// Constraint residual reached by the local solver before the final
    /// projection and rescaling.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub m: usize,
    pub objective: Measure,
    /// Run that produced the result; indices at or above `restarts.len()`
    /// are fresh starts of the tie-break solve.
    pub best_restart: usize,
    pub best_objective: f64,
    /// Restarts whose objective is within `1e-6` relative of the best.
    pub hits: usize,
    pub restarts: Vec<RestartRecord>,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub constellation: Constellation,
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

pub fn objective_value(c: &Constellation, obj: Objective) -> f64 {
    PowerSummary::of(c).value(obj)
}

struct LocalOutcome {
    points: Vec<Point3>,
    residual: f64,
    iterations: usize,
}

/// Runs the augmented Lagrangian loop from `start`.
fn local_solve(
    problem: &Packing,
    start: &[Point3],
    cfg: &OptimizerConfig,
    mu0: f64,
    eps0: f64,
) -> LocalOutcome {
    let mut x = problem.pack(start);
    let nc = problem.n_constraints();
    let mut lambda = vec![0.0; nc];
    let mut cons = vec![0.0; nc];
    let mut mu = mu0;
    let mut eps = eps0;
    let eps_final = 1e-12;
    let mut residual_prev = f64::INFINITY;
    let mut f_prev = f64::INFINITY;
    let mut used = 0;
    let mut residual = f64::INFINITY;

    for _outer in 0..60 {
        if used >= cfg.max_iters {
            break;
        }
        let budget = (cfg.max_iters - used).min(1000);
        let gtol = (1e-3 * eps.max(1e-9)).max(1e-13);
        let report = lbfgs::minimize(
            |x, g| problem.lagrangian(x, &lambda, mu, eps, g),
            &mut x,
            LbfgsOptions {
                max_iters: budget,
                gtol,
                ..Default::default()
            },
        );
        used += report.iterations.max(1);

        problem.constraints(&x, &mut cons);
        residual = cons.iter().fold(0.0f64, |r, c| r.max(*c));
        for (l, c) in lambda.iter_mut().zip(&cons) {
            *l = (*l + mu * c).max(0.0);
        }
        let f = objective_from_points(problem.objective, &problem.unpack(&x));
        let settled = eps <= eps_final
            && residual <= 0.1 * cfg.constraint_tol
            && (f - f_prev).abs() <= cfg.objective_tol * f.abs().max(1.0);
        if settled {
            break;
        }
        if residual > 0.25 * residual_prev && residual > 0.1 * cfg.constraint_tol {
            mu = (mu * cfg.penalty_growth).min(1e12);
        }
        residual_prev = residual;
        f_prev = f;
        eps = (eps * 0.1).max(eps_final);
    }

    LocalOutcome {
        points: problem.unpack(&x),
        residual,
        iterations: used,
    }
}

fn objective_from_points(obj: Measure, pts: &[Point3]) -> f64 {
    let n = pts.len() as f64;
    match obj {
        Measure::AvgElectrical => pts.iter().map(Point3::norm_sq).sum::<f64>() / n,
        Measure::AvgOptical => pts.iter().map(|p| p.w1).sum::<f64>() / n,
        Measure::PeakOptical => pts.iter().map(Point3::peak).fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Projects every point onto the cone and rescales to unit minimum distance.
/// Returns `None` when points coincide.
fn repair(points: &[Point3]) -> Option<Vec<Point3>> {
    let projected: Vec<Point3> = points.iter().map(project_to_cone).collect();
    let mut dmin = f64::INFINITY;
    for (i, a) in projected.iter().enumerate() {
        for b in &projected[i + 1..] {
            dmin = dmin.min(a.dist(b));
        }
    }
    if !(dmin > 1e-9) || !dmin.is_finite() {
        return None;
    }
    Some(projected.iter().map(|p| *p * (1.0 / dmin)).collect())
}

fn random_start(m: usize, height: f64, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    (0..m)
        .map(|_| {
            let w1 = height * rng.gen::<f64>();
            let r = w1 / std::f64::consts::SQRT_2 * rng.gen::<f64>().sqrt();
            let phi = std::f64::consts::TAU * rng.gen::<f64>();
            Point3::new(w1, r * phi.cos(), r * phi.sin())
        })
        .collect()
}

/// Secondary measure minimized among equally good packings.
pub fn tie_break_measure(obj: Objective) -> Measure {
    match obj {
        Measure::AvgElectrical => Measure::PeakOptical,
        Measure::AvgOptical | Measure::PeakOptical => Measure::AvgElectrical,
    }
}

/// Relative slack within which two restarts count as equally good.
const TIE_REL: f64 = 1e-6;
/// At most this many tied restarts go through the tie-break solve.
const MAX_TIE_CANDIDATES: usize = 16;
/// Random streams for fresh tie-break starts begin at this index.
const TIE_STREAM_OFFSET: usize = 1 << 32;

fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Searches for an `m`-point packing minimizing `obj`.
pub fn optimize(m: usize, obj: Objective, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    if !(2..=MAX_POINTS).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "m must lie in 2..={MAX_POINTS}, got {m}"
        )));
    }
    cfg.validate()?;
    let problem = Packing::new(m, obj);
    let height = cfg.box_height(m);

    let runs = cfg.execution.map_indexed(cfg.restarts, |k| {
        let mut rng = restart_rng(cfg.seed, k);
        let start = random_start(m, height, &mut rng);
        let out = local_solve(&problem, &start, cfg, 10.0, 1e-3);
        let repaired = repair(&out.points);
        let objective = repaired
            .as_ref()
            .map_or(f64::INFINITY, |p| objective_from_points(obj, p));
        (
            RestartRecord {
                index: k,
                objective,
                residual: out.residual,
                iterations: out.iterations,
            },
            repaired,
        )
    });

    let best = runs
        .iter()
        .filter(|(_, pts)| pts.is_some())
        .min_by(|a, b| a.0.objective.total_cmp(&b.0.objective).then(a.0.index.cmp(&b.0.index)));
    let Some((best_rec, Some(_))) = best else {
        let best_residual = runs
            .iter()
            .map(|(r, _)| r.residual)
            .fold(f64::INFINITY, f64::min);
        return Err(Error::Infeasible {
            restarts: cfg.restarts,
            best_residual,
        });
    };

    let best_objective = best_rec.objective;
    let tied: Vec<(usize, &Vec<Point3>)> = runs
        .iter()
        .filter_map(|(r, pts)| {
            let pts = pts.as_ref()?;
            (r.objective <= best_objective * (1.0 + TIE_REL) + 1e-12).then_some((r.index, pts))
        })
        .collect();
    let hits = tied.len();

    let secondary = tie_break_measure(obj);
    let cap = best_objective * (1.0 + 1e-9);
    let tie_problem = Packing::new(m, secondary).with_cap(obj, cap);
    // Tied restarts can sit in different components of the optimal set, and
    // the tie-break solve is local, so fresh starts join the tied ones.
    let mut candidates: Vec<(usize, Vec<Point3>)> = tied
        .iter()
        .take(MAX_TIE_CANDIDATES)
        .map(|(k, p)| (*k, (*p).clone()))
        .collect();
    for k in 0..cfg.restarts {
        let mut rng = restart_rng(cfg.seed, TIE_STREAM_OFFSET + k);
        candidates.push((cfg.restarts + k, random_start(m, height, &mut rng)));
    }
    let refined = cfg.execution.map_indexed(candidates.len(), |i| {
        let (k, ref pts) = candidates[i];
        let (mu0, eps0) = if k < cfg.restarts { (1e3, 1e-6) } else { (10.0, 1e-3) };
        let out = local_solve(&tie_problem, pts, cfg, mu0, eps0);
        let chosen = repair(&out.points)
            .filter(|p| objective_from_points(obj, p) <= best_objective * (1.0 + 1e-7) + 1e-12);
        let chosen = match chosen {
            Some(p) => Some(p),
            None if k < cfg.restarts => Some(pts.clone()),
            None => None,
        };
        chosen.map(|p| (objective_from_points(secondary, &p), k, p))
    });
    let (_, chosen_index, points) = refined
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least the best restart is tied with itself");

    let constellation = canonicalize(
        &Constellation::new(
            format!("opt_{}_{m}", obj.as_str()),
            BandwidthFactor::Double,
            points,
        )?,
    );
    let diagnostics = Diagnostics {
        m,
        objective: obj,
        best_restart: chosen_index,
        best_objective,
        hits,
        restarts: runs.into_iter().map(|(r, _)| r).collect(),
    };
    Ok(OptimizeResult {
        objective: objective_value(&constellation, obj),
        constellation,
        diagnostics,
    })
}

#[derive(Debug, Clone)]
pub struct PolishOutcome {
    pub constellation: Constellation,
    pub objective: f64,
    /// Residual of the returned constellation.
    pub residual: f64,
    pub warning: Option<String>,
}

/// Refines a near-feasible constellation to a nearby exactly feasible local
/// optimum.
pub fn polish(c: &Constellation, obj: Objective, cfg: &OptimizerConfig) -> Result<PolishOutcome> {
    cfg.validate()?;
    if c.len() < 2 {
        return Err(Error::InvalidConstellation("polish needs at least 2 points".into()));
    }
    let problem = Packing::new(c.len(), obj);
    let input_residual = feasibility_residual(&c.points);
    let input_objective = objective_value(c, obj);
    let out = local_solve(&problem, &c.points, cfg, 1e3, 1e-6);

    let fallback = |why: String| PolishOutcome {
        constellation: c.clone(),
        objective: input_objective,
        residual: input_residual,
        warning: Some(why),
    };

    let Some(points) = repair(&out.points) else {
        return Ok(fallback("polish collapsed points; returning input".into()));
    };
    let objective = objective_from_points(obj, &points);
    let residual = feasibility_residual(&points);
    if !objective.is_finite() || residual > cfg.constraint_tol {
        return Ok(fallback(format!("polish diverged (residual {residual:e}); returning input")));
    }
    if input_residual <= cfg.constraint_tol
        && objective > input_objective * (1.0 + cfg.objective_tol) + cfg.objective_tol
    {
        return Ok(fallback(format!(
            "polish increased the objective from {input_objective} to {objective}; returning input"
        )));
    }
    let axial = points.iter().all(|p| p.w2 == 0.0 && p.w3 == 0.0);
    let bw = if axial { c.bandwidth_factor } else { BandwidthFactor::Double };
    let constellation = Constellation::new(c.name.clone(), bw, points)?;
    Ok(PolishOutcome {
        objective,
        residual,
        constellation,
        warning: None,
    })
}
