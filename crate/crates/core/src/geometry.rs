//! Signal-space points and the admissible cone they live in.
//!
//! Coordinates are taken with respect to the three orthonormal basis
//! functions of a single-subcarrier intensity-modulated link: `w1` is the DC
//! (bias) component and `(w2, w3)` carry the in-phase and quadrature parts of
//! the subcarrier. A signal is nonnegative for all time exactly when
//! `w1 >= sqrt(2 (w2^2 + w3^2))`, which is a circular cone around the `w1`
//! axis with apex at the origin.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for cone membership after unit-dmin scaling.
pub const CONE_TOL: f64 = 1e-9;

/// A point in the three-dimensional signal space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { w1: 0.0, w2: 0.0, w3: 0.0 };

    pub const fn new(w1: f64, w2: f64, w3: f64) -> Self {
        Self { w1, w2, w3 }
    }

    /// Point on the `w1` axis.
    pub const fn axial(w1: f64) -> Self {
        Self { w1, w2: 0.0, w3: 0.0 }
    }

    /// Distance from the `w1` axis.
    pub fn radial(&self) -> f64 {
        self.w2.hypot(self.w3)
    }

    pub fn norm_sq(&self) -> f64 {
        self.w1 * self.w1 + self.w2 * self.w2 + self.w3 * self.w3
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.is_finite() && self.w2.is_finite() && self.w3.is_finite()
    }

    /// Rotation by `angle` radians about the `w1` axis.
    pub fn rotate_about_axis(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            w1: self.w1,
            w2: c * self.w2 - s * self.w3,
            w3: s * self.w2 + c * self.w3,
        }
    }

    /// Mirror image under `w3 -> -w3`.
    pub fn reflect(&self) -> Self {
        Self { w3: -self.w3, ..*self }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.w1, self.w2, self.w3]
    }

    /// Peak-power expression `w1 + sqrt(2 (w2^2 + w3^2))`.
    pub fn peak(&self) -> f64 {
        self.w1 + SQRT_2 * self.radial()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.w1 + o.w1, self.w2 + o.w2, self.w3 + o.w3)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.w1 - o.w1, self.w2 - o.w2, self.w3 - o.w3)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.w1 * k, self.w2 * k, self.w3 * k)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.w1, self.w2, self.w3)
    }
}

/// Occupied bandwidth in units of the symbol rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum BandwidthFactor {
    /// Baseband formats that only use the DC basis function.
    Single,
    /// Single-subcarrier formats.
    Double,
}

impl BandwidthFactor {
    pub fn value(self) -> f64 {
        match self {
            BandwidthFactor::Single => 1.0,
            BandwidthFactor::Double => 2.0,
        }
    }
}

impl TryFrom<u8> for BandwidthFactor {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(BandwidthFactor::Single),
            2 => Ok(BandwidthFactor::Double),
            other => Err(format!("bandwidth_factor must be 1 or 2, got {other}")),
        }
    }
}

impl From<BandwidthFactor> for u8 {
    fn from(b: BandwidthFactor) -> u8 {
        match b {
            BandwidthFactor::Single => 1,
            BandwidthFactor::Double => 2,
        }
    }
}

/// The admissible region of nonnegative signals.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdmissibleCone;

impl AdmissibleCone {
    /// Half of the apex angle, `acos(1/3) / 2`.
    pub fn half_apex_angle() -> f64 {
        (1.0f64 / 3.0).acos() / 2.0
    }

    pub fn contains(p: &Point3, tol: f64) -> bool {
        debug_assert!(tol >= 0.0);
        p.w1 + tol >= SQRT_2 * p.radial()
    }

    /// How far `p` lies outside the cone along the membership inequality.
    pub fn violation(p: &Point3) -> f64 {
        (SQRT_2 * p.radial() - p.w1).max(0.0)
    }

    /// Euclidean projection onto the cone.
    pub fn project(p: &Point3) -> Point3 {
        let rho = p.radial();
        if p.w1 >= SQRT_2 * rho {
            return *p;
        }
        let t = SQRT_2 * p.w1 + rho;
        if t <= 0.0 {
            return Point3::ORIGIN;
        }
        let rho_star = t / 3.0;
        // rho > 0 here: rho == 0 is either inside (w1 >= 0) or at the apex branch
        let scale = rho_star / rho;
        Point3::new(SQRT_2 * rho_star, p.w2 * scale, p.w3 * scale)
    }
}

pub fn cone_contains(p: &Point3, tol: f64) -> bool {
    AdmissibleCone::contains(p, tol)
}

pub fn project_to_cone(p: &Point3) -> Point3 {
    AdmissibleCone::project(p)
}

/// An ordered set of signal points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    #[serde(default)]
    pub name: String,
    pub bandwidth_factor: BandwidthFactor,
    #[serde(with = "point_rows")]
    pub points: Vec<Point3>,
}

mod point_rows {
    use super::Point3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(pts: &[Point3], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<[f64; 3]> = pts.iter().map(|p| p.to_array()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point3>, D::Error> {
        let rows: Vec<[f64; 3]> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(Point3::from).collect())
    }
}

impl Constellation {
    /// Builds a constellation, checking the structural invariants that every
    /// downstream computation relies on. Distinctness and cone membership are
    /// checked separately by [`Constellation::validate`] because the wideband
    /// constructions deliberately stack points at the origin.
    pub fn new(
        name: impl Into<String>,
        bandwidth_factor: BandwidthFactor,
        points: Vec<Point3>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConstellation("no points".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidConstellation(format!("non-finite point {p}")));
        }
        if bandwidth_factor == BandwidthFactor::Single {
            if let Some(p) = points.iter().find(|p| p.w2 != 0.0 || p.w3 != 0.0) {
                return Err(Error::InvalidConstellation(format!(
                    "bandwidth factor 1 requires w2 = w3 = 0, found {p}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            bandwidth_factor,
            points,
        })
    }

    /// Baseband constellation from levels on the DC axis.
    pub fn from_levels(name: impl Into<String>, levels: &[f64]) -> Result<Self> {
        Self::new(
            name,
            BandwidthFactor::Single,
            levels.iter().map(|&l| Point3::axial(l)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bits per symbol for uncoded transmission, `log2 M`.
    pub fn rate(&self) -> f64 {
        (self.len() as f64).log2()
    }

    /// Full validity check: `M >= 2`, distinct points, cone membership.
    pub fn validate(&self, cone_tol: f64) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::InvalidConstellation(format!(
                "need at least 2 points, got {}",
                self.len()
            )));
        }
        min_distance(self)?;
        if let Some((i, p)) = self
            .points
            .iter()
            .enumerate()
            .find(|(_, p)| !cone_contains(p, cone_tol))
        {
            return Err(Error::InvalidConstellation(format!(
                "point {i} {p} outside the admissible cone (violation {:e})",
                AdmissibleCone::violation(p)
            )));
        }
        Ok(())
    }

    pub fn map_points(&self, f: impl FnMut(&Point3) -> Point3) -> Self {
        Self {
            name: self.name.clone(),
            bandwidth_factor: self.bandwidth_factor,
            points: self.points.iter().map(f).collect(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        self.map_points(|p| *p * k)
    }

    pub fn rotated(&self, angle: f64) -> Self {
        self.map_points(|p| p.rotate_about_axis(angle))
    }

    pub fn reflected(&self) -> Self {
        self.map_points(Point3::reflect)
    }

    pub fn translated(&self, v: Point3) -> Self {
        self.map_points(|p| *p + v)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Smallest pairwise distance without the degeneracy check.
    pub fn raw_min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min(a.dist(b));
            }
        }
        best
    }

    /// Number of unordered pairs whose distance is within `tol` of `d`.
    pub fn pairs_at_distance(&self, d: f64, tol: f64) -> usize {
        let mut k = 0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                if (a.dist(b) - d).abs() <= tol {
                    k += 1;
                }
            }
        }
        k
    }
}

/// Minimum Euclidean distance over all pairs of distinct indices.
pub fn min_distance(c: &Constellation) -> Result<f64> {
    if c.len() < 2 {
        return Err(Error::InvalidConstellation(
            "minimum distance needs at least 2 points".into(),
        ));
    }
    let d = c.raw_min_distance();
    let scale = c.points.iter().map(Point3::norm).fold(1.0, f64::max);
    if d <= 1e-12 * scale {
        return Err(Error::Degenerate("two points coincide".into()));
    }
    Ok(d)
}

/// Scales the constellation so that its minimum distance is one.
pub fn normalize_unit_dmin(c: &Constellation) -> Result<Constellation> {
    let d = min_distance(c)?;
    Ok(c.scaled(1.0 / d))
}

const CANON_TIE: f64 = 1e-7;
const CANON_KEY: f64 = 1e-6;

fn sort_key(p: &Point3) -> [i64; 3] {
    let q = |x: f64| (x / CANON_KEY).round() as i64;
    [q(p.w1), q(p.w2), q(p.w3)]
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

/// Rotates (and possibly reflects) a constellation about the `w1` axis into
/// a canonical orientation and sorts its points.
///
/// The point with the largest distance from the axis (ties: smallest `w1`)
/// is brought onto the positive `w2` half-axis. When several points qualify,
/// or when the mirror image gives a different result, the candidate whose
/// sorted coordinate list is lexicographically smallest wins. Powers and
/// distances are unchanged.
pub fn canonicalize(c: &Constellation) -> Constellation {
    let scale = c.points.iter().map(Point3::norm).fold(1.0, f64::max);
    let tie = CANON_TIE * scale;
    let r_max = c.points.iter().map(Point3::radial).fold(0.0, f64::max);

    let mut best: Option<(Vec<[i64; 3]>, Vec<Point3>)> = None;
    let mut consider = |pts: Vec<Point3>| {
        let mut pts: Vec<Point3> = pts
            .into_iter()
            .map(|p| Point3::new(clean(p.w1), clean(p.w2), clean(p.w3)))
            .collect();
        pts.sort_by(|a, b| {
            sort_key(a)
                .cmp(&sort_key(b))
                .then(a.w1.total_cmp(&b.w1))
                .then(a.w2.total_cmp(&b.w2))
                .then(a.w3.total_cmp(&b.w3))
        });
        let key: Vec<[i64; 3]> = pts.iter().map(sort_key).collect();
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, pts));
        }
    };

    if r_max <= tie {
        consider(c.points.clone());
    } else {
        let far: Vec<usize> = (0..c.len())
            .filter(|&i| c.points[i].radial() >= r_max - tie)
            .collect();
        let w1_min = far
            .iter()
            .map(|&i| c.points[i].w1)
            .fold(f64::INFINITY, f64::min);
        for &i in far.iter().filter(|&&i| c.points[i].w1 <= w1_min + tie) {
            let anchor = c.points[i];
            let angle = -anchor.w3.atan2(anchor.w2);
            for mirror in [false, true] {
                let pts = c
                    .points
                    .iter()
                    .enumerate()
                    .map(|(j, p)| {
                        let q = p.rotate_about_axis(angle);
                        let q = if j == i {
                            Point3::new(q.w1, anchor.radial(), 0.0)
                        } else {
                            q
                        };
                        if mirror {
                            q.reflect()
                        } else {
                            q
                        }
                    })
                    .collect();
                consider(pts);
            }
        }
    }

    let (_, points) = best.expect("at least one candidate orientation");
    Constellation {
        name: c.name.clone(),
        bandwidth_factor: c.bandwidth_factor,
        points,
    }
}

/// Quantized coordinates of the canonical form, usable as an ordering key
/// that is invariant under the symmetries of the cone and under relabelling.
pub fn canonical_key(c: &Constellation) -> Vec<[i64; 3]> {
    canonicalize(c).points.iter().map(sort_key).collect()
}

/// Largest coordinate deviation between `a` and `b` under the best rotation
/// about the `w1` axis with optional reflection, up to relabelling.
///
/// Returns `None` when the sizes differ or no bijective nearest-point
/// matching exists under any candidate alignment.
pub fn symmetric_deviation(a: &Constellation, b: &Constellation) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    embedding_deviation(a, b)
}

/// Like [`symmetric_deviation`], but only requires every point of `small`
/// to have its own counterpart in `big`.
pub fn embedding_deviation(small: &Constellation, big: &Constellation) -> Option<f64> {
    if small.len() > big.len() || small.is_empty() {
        return None;
    }
    let anchor = *small.points.iter().max_by(|p, q| {
        p.radial()
            .total_cmp(&q.radial())
            .then(q.w1.total_cmp(&p.w1))
    })?;
    let gate = 0.25;

    let mut best: Option<f64> = None;
    let mut try_alignment = |pts: Vec<Point3>| {
        if let Some(dev) = matched_deviation(&pts, &big.points) {
            if best.is_none_or(|b| dev < b) {
                best = Some(dev);
            }
        }
    };

    // The identity alignment covers (nearly) axial sets, where the anchor
    // angle is meaningless.
    try_alignment(small.points.clone());
    try_alignment(small.points.iter().map(Point3::reflect).collect());
    if anchor.radial() >= 1e-9 {
        for q in &big.points {
            if (q.radial() - anchor.radial()).abs() > gate
                || (q.w1 - anchor.w1).abs() > gate
                || q.radial() < 1e-12
            {
                continue;
            }
            let target = q.w3.atan2(q.w2);
            for mirror in [false, true] {
                let a0 = if mirror { anchor.reflect() } else { anchor };
                let angle = target - a0.w3.atan2(a0.w2);
                let pts = small
                    .points
                    .iter()
                    .map(|p| {
                        let p = if mirror { p.reflect() } else { *p };
                        p.rotate_about_axis(angle)
                    })
                    .collect();
                try_alignment(pts);
            }
        }
    }
    best
}

fn matched_deviation(a: &[Point3], b: &[Point3]) -> Option<f64> {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for p in a {
        let (j, _) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, q)| (j, p.dist(q)))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        used[j] = true;
        let q = b[j];
        let coord = (p.w1 - q.w1)
            .abs()
            .max((p.w2 - q.w2).abs())
            .max((p.w3 - q.w3).abs());
        worst = worst.max(coord);
    }
    Some(worst)
}

/// Angle in radians between a boundary generator of the cone and its axis.
pub fn boundary_axis_angle() -> f64 {
    let p = Point3::new(SQRT_2, 1.0, 0.0);
    (p.w1 / p.norm()).acos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c4() -> Constellation {
        let r = (2.0f64 / 3.0).sqrt();
        let s3 = 3.0f64.sqrt();
        Constellation::new(
            "C4",
            BandwidthFactor::Double,
            vec![
                Point3::ORIGIN,
                Point3::new(r, 0.0, 1.0 / s3),
                Point3::new(r, 0.5, -s3 / 6.0),
                Point3::new(r, -0.5, -s3 / 6.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn cone_membership_examples() {
        assert!(cone_contains(&Point3::ORIGIN, 0.0));
        let b = Point3::new((2.0f64 / 3.0).sqrt(), 0.0, 1.0 / 3.0f64.sqrt());
        assert!(cone_contains(&b, 1e-15));
        assert!(!cone_contains(&Point3::new(0.0, 1.0, 0.0), 0.0));
    }

    #[test]
    fn projection_examples() {
        let p = Point3::new(1.0, 0.1, 0.0);
        assert_eq!(project_to_cone(&p), p);

        let q = project_to_cone(&Point3::new(0.0, 1.0, 0.0));
        assert!((q.w1 - SQRT_2 / 3.0).abs() < 1e-15);
        assert!((q.w2 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(q.w3, 0.0);

        assert_eq!(
            project_to_cone(&Point3::new(-2.0, 0.1, 0.0)),
            Point3::ORIGIN
        );
        assert_eq!(project_to_cone(&Point3::new(-1.0, 0.0, 0.0)), Point3::ORIGIN);
    }

    #[test]
    fn projection_matches_grid_search() {
        // brute force over the boundary generator through the point's azimuth
        for p in [
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(-0.3, 0.5, -0.7),
            Point3::new(0.2, -2.0, 1.0),
            Point3::new(-2.0, 0.1, 0.0),
        ] {
            let proj = project_to_cone(&p);
            let phi = p.w3.atan2(p.w2);
            let mut best = p.norm();
            let mut n = 0;
            while n <= 400_000 {
                let r = n as f64 * 1e-5;
                let b = Point3::new(SQRT_2 * r, r * phi.cos(), r * phi.sin());
                best = best.min(p.dist(&b));
                n += 1;
            }
            assert!((p.dist(&proj) - best).abs() < 1e-6, "{p}");
        }
    }

    #[test]
    fn min_distance_examples() {
        assert!((min_distance(&c4()).unwrap() - 1.0).abs() < 1e-15);
        let two = Constellation::from_levels("", &[0.0, 3.0]).unwrap();
        assert_eq!(min_distance(&two).unwrap(), 3.0);
        let dup = Constellation::from_levels("", &[1.0, 1.0]).unwrap();
        assert!(matches!(min_distance(&dup), Err(Error::Degenerate(_))));
    }

    #[test]
    fn normalization() {
        let c = Constellation::from_levels("", &[0.0, 2.0]).unwrap();
        let n = normalize_unit_dmin(&c).unwrap();
        assert_eq!(n.points, vec![Point3::ORIGIN, Point3::axial(1.0)]);
        let back = normalize_unit_dmin(&c4().scaled(2.0)).unwrap();
        assert!(symmetric_deviation(&back, &c4()).unwrap() < 1e-15);
        assert!(normalize_unit_dmin(&Constellation::from_levels("", &[1.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn canonicalize_examples() {
        let single = Constellation::new("", BandwidthFactor::Double, vec![Point3::axial(1.0)]).unwrap();
        assert_eq!(canonicalize(&single).points, vec![Point3::axial(1.0)]);

        let c = Constellation::new(
            "",
            BandwidthFactor::Double,
            vec![Point3::new(SQRT_2, 0.0, 1.0)],
        )
        .unwrap();
        assert_eq!(canonicalize(&c).points, vec![Point3::new(SQRT_2, 1.0, 0.0)]);

        let base = canonicalize(&c4());
        for k in 0..12 {
            let rot = canonicalize(&c4().rotated(0.37 + k as f64 * 0.51));
            for (a, b) in base.points.iter().zip(&rot.points) {
                assert!(a.dist(b) < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn symmetric_deviation_detects_mismatch() {
        let a = c4();
        assert!(symmetric_deviation(&a, &a.rotated(1.1).reflected()).unwrap() < 1e-14);
        let mut b = a.clone();
        b.points[1].w1 += 0.01;
        let d = symmetric_deviation(&a, &b).unwrap();
        assert!(d > 1e-3 && d < 0.02);
    }

    #[test]
    fn cone_angle_matches_tetrahedron() {
        let expected = (SQRT_2 / 3.0f64.sqrt()).acos();
        assert!((boundary_axis_angle() - expected).abs() < 1e-15);
        assert!((AdmissibleCone::half_apex_angle() - expected).abs() < 1e-15);
        assert!((expected.to_degrees() - 35.264).abs() < 1e-3);
    }

    #[test]
    fn single_bandwidth_rejects_subcarrier_points() {
        let r = Constellation::new("", BandwidthFactor::Single, vec![Point3::new(1.0, 0.1, 0.0)]);
        assert!(r.is_err());
    }
}
