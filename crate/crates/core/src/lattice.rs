//! The face-centered cubic lattice A3 intersected with the admissible cone,
//! and the search for the best `M`-point subset of it.
//!
//! The lattice has a point at the apex and two basis vectors in the
//! `w2`-`w3` plane, so it is a stack of triangular layers spaced
//! `sqrt(2/3)` apart along the axis. The basis is
//!
//! ```text
//! b1 = (0, 1, 0)
//! b2 = (0, 1/2, sqrt(3)/2)
//! b3 = (sqrt(2/3), 0, 1/sqrt(3))
//! ```
//!
//! Every objective is separable over points (a mean or a maximum of
//! per-point values), so the optimal subset is found by sorting rather
//! than by a combinatorial search. Ties are broken as in the optimizer:
//! first by the secondary measure of
//! [`tie_break_measure`](crate::optimizer::tie_break_measure), then by the
//! lexicographically smallest canonical form.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonical_key, canonicalize, AdmissibleCone, BandwidthFactor, Constellation, Point3};
use crate::metrics::Measure;
use crate::optimizer::tie_break_measure;

/// Spacing between consecutive lattice layers along the axis.
pub fn layer_spacing() -> f64 {
    (2.0f64 / 3.0).sqrt()
}

/// Tolerance for cone membership of enumerated points and for value ties.
const TOL: f64 = 1e-9;

/// Beyond this many tied subsets only the first (in index order) is kept.
const MAX_TIE_SUBSETS: usize = 100_000;

/// Extensions of the height cap tried before giving up on stability.
const MAX_EXTENSIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSlice {
    pub points: Vec<Point3>,
    pub height_cap: f64,
}

impl LatticeSlice {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// All lattice points in the cone with `w1 <= height_cap`, ordered by layer,
/// then by `w3`, then by `w2`.
pub fn enumerate_lattice(height_cap: f64) -> LatticeSlice {
    let h = layer_spacing();
    let s3 = 3.0f64.sqrt();
    let mut points = Vec::new();
    if height_cap.is_finite() && height_cap >= 0.0 {
        let layers = (height_cap / h + 1e-12).floor() as i64;
        for k in 0..=layers {
            let w1 = k as f64 * h;
            let r = w1 / SQRT_2 + TOL;
            let shift = k as f64 / s3;
            let b_lo = ((-r - shift) / (s3 / 2.0)).floor() as i64 - 1;
            let b_hi = ((r - shift) / (s3 / 2.0)).ceil() as i64 + 1;
            let mut layer = Vec::new();
            for b in b_lo..=b_hi {
                let w3 = b as f64 * s3 / 2.0 + shift;
                let off = b as f64 / 2.0;
                let a_lo = (-r - off).floor() as i64 - 1;
                let a_hi = (r - off).ceil() as i64 + 1;
                for a in a_lo..=a_hi {
                    let p = Point3::new(w1, a as f64 + off, w3);
                    if AdmissibleCone::contains(&p, TOL) {
                        layer.push(p);
                    }
                }
            }
            layer.sort_by(|p, q| p.w3.total_cmp(&q.w3).then(p.w2.total_cmp(&q.w2)));
            points.extend(layer);
        }
    }
    LatticeSlice { points, height_cap }
}

/// Default enumeration height for an `m`-point search.
pub fn default_height_cap(m: usize) -> f64 {
    layer_spacing() * m as f64
}

fn point_value(p: &Point3, measure: Measure) -> f64 {
    match measure {
        Measure::AvgElectrical => p.norm_sq(),
        Measure::AvgOptical => p.w1,
        Measure::PeakOptical => p.peak(),
    }
}

/// Splits `pool` into points every optimal `need`-subset contains and a
/// tie group from which the remaining points may be drawn freely.
///
/// `floor` is the largest value already committed, which only matters for
/// the peak measure: points below it cost nothing extra.
fn refine(
    points: &[Point3],
    pool: &[usize],
    need: usize,
    measure: Measure,
    floor: f64,
) -> (Vec<usize>, Vec<usize>) {
    if need == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut sorted = pool.to_vec();
    sorted.sort_by(|&i, &j| {
        point_value(&points[i], measure)
            .total_cmp(&point_value(&points[j], measure))
            .then(i.cmp(&j))
    });
    let pivot = point_value(&points[sorted[need - 1]], measure);
    let scale = pivot.abs().max(1.0);
    match measure {
        Measure::PeakOptical => {
            let limit = pivot.max(floor) + TOL * scale;
            let eligible: Vec<usize> = sorted
                .into_iter()
                .filter(|&i| point_value(&points[i], measure) <= limit)
                .collect();
            if eligible.len() == need {
                (eligible, Vec::new())
            } else {
                (Vec::new(), eligible)
            }
        }
        _ => {
            let (mut forced, mut tied) = (Vec::new(), Vec::new());
            for i in sorted {
                let v = point_value(&points[i], measure);
                if v < pivot - TOL * scale {
                    forced.push(i);
                } else if v <= pivot + TOL * scale {
                    tied.push(i);
                }
            }
            if forced.len() + tied.len() == need {
                forced.append(&mut tied);
            }
            (forced, tied)
        }
    }
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        let Some(pos) = (0..k).rev().find(|&p| idx[p] != p + n - k) else {
            return;
        };
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Best `m`-subset of a given slice under `obj`.
pub fn best_subset(slice: &LatticeSlice, m: usize, obj: Measure) -> Result<Constellation> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    if slice.len() < m {
        return Err(Error::SliceTooSmall {
            available: slice.len(),
            requested: m,
        });
    }
    let pts = &slice.points;
    let all: Vec<usize> = (0..pts.len()).collect();

    let (mut chosen, tied) = refine(pts, &all, m, obj, f64::NEG_INFINITY);
    let need = m - chosen.len();
    let secondary = tie_break_measure(obj);
    let floor = chosen
        .iter()
        .map(|&i| point_value(&pts[i], secondary))
        .fold(f64::NEG_INFINITY, f64::max);
    let (forced, tied) = refine(pts, &tied, need, secondary, floor);
    chosen.extend(forced);
    let need = m - chosen.len();

    let build = |extra: &[usize]| {
        let mut idx = chosen.clone();
        idx.extend(extra.iter().map(|&t| tied[t]));
        idx.sort_unstable();
        let points = idx.iter().map(|&i| pts[i]).collect();
        Constellation::new(
            format!("lattice_{}_{m}", obj.as_str()),
            BandwidthFactor::Double,
            points,
        )
    };

    let mut best: Option<(Vec<[i64; 3]>, Constellation)> = None;
    let mut seen = 0;
    let mut failure = None;
    for_each_combination(tied.len(), need, |combo| {
        match build(combo) {
            Ok(c) => {
                let key = canonical_key(&c);
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, c));
                }
            }
            Err(e) => {
                failure = Some(e);
                return false;
            }
        }
        seen += 1;
        seen < MAX_TIE_SUBSETS
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (_, c) = best.expect("at least one subset");
    Ok(canonicalize(&c))
}

/// Best `m`-point subset of the lattice slice under `obj`.
///
/// The cap is raised one layer at a time until one more layer no longer
/// changes the objective.
pub fn lattice_search(m: usize, obj: Measure, height_cap: f64) -> Result<Constellation> {
    if !(height_cap >= 0.0) || !height_cap.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "height cap must be finite and non-negative, got {height_cap}"
        )));
    }
    let mut cap = height_cap;
    let mut current = best_subset(&enumerate_lattice(cap), m, obj)?;
    for _ in 0..MAX_EXTENSIONS {
        cap += layer_spacing();
        let next = best_subset(&enumerate_lattice(cap), m, obj)?;
        let (a, b) = (objective(&current, obj), objective(&next, obj));
        if b >= a - TOL * a.abs().max(1.0) {
            return Ok(current);
        }
        current = next;
    }
    Err(Error::NoConvergence(format!(
        "lattice objective still improving after {MAX_EXTENSIONS} extra layers"
    )))
}

fn objective(c: &Constellation, obj: Measure) -> f64 {
    crate::metrics::PowerSummary::of(c).value(obj)
}
