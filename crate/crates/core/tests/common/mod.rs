//! Generators and oracles shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::SQRT_2;

use conepack_core::geometry::{canonicalize, symmetric_deviation};
use conepack_core::{BandwidthFactor, Constellation, Point3};
use rand::Rng;

/// Uniform point in the cone below height `h`, by rejection from the
/// bounding box.
pub fn point_in_cone<R: Rng>(rng: &mut R, h: f64) -> Point3 {
    let r = h / SQRT_2;
    loop {
        let p = Point3::new(rng.gen_range(0.0..h), rng.gen_range(-r..r), rng.gen_range(-r..r));
        if p.w1 >= SQRT_2 * p.radial() {
            return p;
        }
    }
}

/// Arbitrary point of R^3, mostly outside the cone.
pub fn point_anywhere<R: Rng>(rng: &mut R, scale: f64) -> Point3 {
    Point3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

/// Random feasible constellation with `m` points in the cone.
pub fn random_constellation<R: Rng>(rng: &mut R, m: usize) -> Constellation {
    let h = rng.gen_range(0.5..5.0);
    let points = (0..m).map(|_| point_in_cone(rng, h)).collect();
    Constellation::new("random", BandwidthFactor::Double, points).expect("points lie in the cone")
}

/// Coordinate deviation between the canonical forms of `a` and `b`.
pub fn canonical_deviation(a: &Constellation, b: &Constellation) -> f64 {
    symmetric_deviation(&canonicalize(a), &canonicalize(b)).unwrap_or(f64::INFINITY)
}

/// Error-rate of OOK with unit spacing: one neighbour per point, half the
/// time on each side.
pub fn ook_ser(n0: f64) -> f64 {
    conepack_core::channel::q_function(1.0 / (2.0 * n0).sqrt())
}
