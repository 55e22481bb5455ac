//! Reference constellations: the optimized sphere packings and lattice codes,
//! the baseline formats they are compared against, and the wideband
//! constructions.
//!
//! Published coordinates mix exact radicals with four-decimal numerics. Each
//! point carries its [`Precision`] so that validation can apply a slack that
//! matches how the value was recorded.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{embedding_deviation, BandwidthFactor, Constellation, Point3};
use crate::metrics::UNIT_DMIN_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Source {
    /// Numerically optimized constellations and lattice codes.
    Optimized,
    /// Previously known formats used as baselines.
    Baseline,
    /// Constructed on demand (wideband-optimal families).
    Constructed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Precision {
    /// Exact value, evaluated in double precision.
    Exact,
    /// Rounded to four decimals.
    Decimal,
}

impl Precision {
    pub fn tolerance(self) -> f64 {
        match self {
            Precision::Exact => 1e-9,
            Precision::Decimal => 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub source: Source,
    pub constellation: Constellation,
    pub precision: Vec<Precision>,
}

impl CatalogEntry {
    /// Loosest precision class among the points.
    pub fn tolerance(&self) -> f64 {
        self.precision
            .iter()
            .map(|p| p.tolerance())
            .fold(Precision::Exact.tolerance(), f64::max)
    }

    pub fn has_decimal_points(&self) -> bool {
        self.precision.contains(&Precision::Decimal)
    }
}

/// Names accepted by [`get`].
pub const NAMES: [&str; 13] = [
    "C4",
    "C_Pe8",
    "C_Po8",
    "C_Phat8",
    "L_Pe8",
    "C_Pe16",
    "C_Po16",
    "C_Phat16",
    "L16",
    "OOK",
    "PAM4",
    "QAM8breve",
    "QAM16breve",
];

/// Optimized entries whose point sets are claimed to contain `C4`.
pub const OPTIMIZED: [&str; 9] = [
    "C4", "C_Pe8", "C_Po8", "C_Phat8", "L_Pe8", "C_Pe16", "C_Po16", "C_Phat16", "L16",
];

#[derive(Default)]
struct Builder {
    points: Vec<Point3>,
    precision: Vec<Precision>,
}

impl Builder {
    fn exact(mut self, w1: f64, w2: f64, w3: f64) -> Self {
        self.points.push(Point3::new(w1, w2, w3));
        self.precision.push(Precision::Exact);
        self
    }

    fn decimal(mut self, w1: f64, w2: f64, w3: f64) -> Self {
        self.points.push(Point3::new(w1, w2, w3));
        self.precision.push(Precision::Decimal);
        self
    }

    fn extend(mut self, other: Builder) -> Self {
        self.points.extend(other.points);
        self.precision.extend(other.precision);
        self
    }

    fn build(self, name: &'static str, source: Source, bw: BandwidthFactor) -> CatalogEntry {
        CatalogEntry {
            name,
            source,
            constellation: Constellation::new(name, bw, self.points)
                .expect("catalog data is structurally valid"),
            precision: self.precision,
        }
    }
}

fn r23() -> f64 {
    (2.0f64 / 3.0).sqrt()
}

fn s3() -> f64 {
    3.0f64.sqrt()
}

fn c4_points() -> Builder {
    let (r, s) = (r23(), s3());
    Builder::default()
        .exact(0.0, 0.0, 0.0)
        .exact(r, 0.0, 1.0 / s)
        .exact(r, 0.5, -s / 6.0)
        .exact(r, -0.5, -s / 6.0)
}

/// The three points each touching a face of the central tetrahedron.
fn cap_triangle() -> Builder {
    let (r, s) = (r23(), s3());
    let h = 5.0 / 3.0 * r;
    Builder::default()
        .exact(h, 0.0, -5.0 / (3.0 * s))
        .exact(h, 5.0 / 6.0, 5.0 / (6.0 * s))
        .exact(h, -5.0 / 6.0, 5.0 / (6.0 * s))
}

fn c_po8_points() -> Builder {
    c4_points()
        .extend(cap_triangle())
        .decimal(1.6293, -0.9236, -0.6886)
}

fn l_pe8_points() -> Builder {
    let (r, s) = (r23(), s3());
    c4_points()
        .exact(2.0 * r, 0.5, s / 6.0)
        .exact(2.0 * r, -0.5, s / 6.0)
        .exact(2.0 * r, 0.0, -1.0 / s)
        .exact(2.0 * r, 1.0, -1.0 / s)
}

fn build(name: &str) -> Option<CatalogEntry> {
    use BandwidthFactor::{Double, Single};
    let (r, s) = (r23(), s3());
    let six = 6.0f64.sqrt();
    let e = match name {
        "C4" => c4_points().build("C4", Source::Optimized, Double),
        "C_Pe8" => c4_points()
            .extend(cap_triangle())
            .exact(2.0 * r, 0.0, 0.0)
            .build("C_Pe8", Source::Optimized, Double),
        "C_Po8" => c_po8_points().build("C_Po8", Source::Optimized, Double),
        "C_Phat8" => c4_points()
            .exact(2.0 * r, 0.0, -1.0 / s)
            .exact(2.0 * r, 0.5, s / 6.0)
            .exact(2.0 * r, -0.5, s / 6.0)
            .exact(six, 0.0, 0.0)
            .build("C_Phat8", Source::Optimized, Double),
        "L_Pe8" => l_pe8_points().build("L_Pe8", Source::Optimized, Double),
        "C_Pe16" => c4_points()
            .decimal(1.3608, 5.0 / 6.0, 5.0 / (6.0 * s))
            .decimal(1.3608, 0.0, -0.9623)
            .decimal(1.4628, -0.7513, 0.7110)
            .decimal(1.6024, -1.1134, -0.2106)
            .decimal(1.6293, 0.1346, 1.1442)
            .decimal(1.6293, 0.9236, -0.6887)
            .exact(2.0 * r, 0.0, 0.0)
            .decimal(1.9336, -0.8075, -1.1032)
            .decimal(2.0380, 1.4396, 0.0642)
            .decimal(2.3097, 0.5202, 0.5210)
            .decimal(2.3097, 0.1911, -0.7110)
            .decimal(2.3499, -0.6462, 0.2616)
            .build("C_Pe16", Source::Optimized, Double),
        "C_Po16" => c_po8_points()
            .decimal(1.6293, -0.1345, 1.1442)
            .decimal(1.6293, 1.0582, -0.4556)
            .exact(2.0 * r, 0.0, 0.0)
            .decimal(2.0380, 0.6643, -1.2789)
            .decimal(2.0380, -1.4396, 0.0642)
            .decimal(2.0380, 0.7754, 1.2147)
            .decimal(2.1187, 1.4645, 0.3160)
            .decimal(2.1187, -1.0059, 1.1103)
            .build("C_Po16", Source::Optimized, Double),
        "C_Phat16" => c4_points()
            .decimal(1.6279, 0.8995, -0.7184)
            .decimal(1.6279, -0.4977, 1.0379)
            .decimal(1.6270, -0.9003, -0.7162)
            .decimal(1.6300, 0.5022, 1.0374)
            .decimal(1.6310, -0.0010, -1.1533)
            .decimal(1.6313, -1.1242, 0.2584)
            .decimal(1.6328, 1.1259, 0.2557)
            .exact(2.0 * r, 0.0, 0.0)
            .decimal(2.4495, 0.0, 1.0 / s)
            .decimal(2.4495, 0.5, -s / 6.0)
            .decimal(2.4495, -0.5, -s / 6.0)
            .decimal(3.2660, 0.0, 0.0)
            .build("C_Phat16", Source::Optimized, Double),
        // The first added point is printed with an unbalanced parenthesis;
        // it reads (2 sqrt(2/3), 0, 2 sqrt(3)/3), which sits on the cone
        // boundary at unit distance from its lattice neighbours.
        "L16" => l_pe8_points()
            .exact(2.0 * r, 0.0, 2.0 * s / 3.0)
            .exact(2.0 * r, -1.0, -s / 3.0)
            .exact(six, 0.0, 0.0)
            .exact(six, -0.5, s / 2.0)
            .exact(six, 0.5, -s / 2.0)
            .exact(six, -0.5, -s / 2.0)
            .exact(six, 1.0, 0.0)
            .exact(six, -1.0, 0.0)
            .build("L16", Source::Optimized, Double),
        "OOK" => Builder::default()
            .exact(0.0, 0.0, 0.0)
            .exact(1.0, 0.0, 0.0)
            .build("OOK", Source::Baseline, Single),
        "PAM4" => (0..4)
            .fold(Builder::default(), |b, i| b.exact(i as f64, 0.0, 0.0))
            .build("PAM4", Source::Baseline, Single),
        "QAM8breve" => {
            let a = (1.0 + s) / SQRT_2;
            let b = (1.0 + s) / 2.0;
            Builder::default()
                .exact(1.0, 0.5, 0.5)
                .exact(1.0, 0.5, -0.5)
                .exact(1.0, -0.5, 0.5)
                .exact(1.0, -0.5, -0.5)
                .exact(a, 0.0, b)
                .exact(a, 0.0, -b)
                .exact(a, b, 0.0)
                .exact(a, -b, 0.0)
                .build("QAM8breve", Source::Baseline, Double)
        }
        "QAM16breve" => {
            let mut b = Builder::default();
            let five = 5.0f64.sqrt();
            for (w1, u, v) in [(1.0, 0.5, 0.5), (five, 0.5, 1.5), (five, 1.5, 0.5), (3.0, 1.5, 1.5)] {
                for su in [1.0, -1.0] {
                    for sv in [1.0, -1.0] {
                        b = b.exact(w1, su * u, sv * v);
                    }
                }
            }
            b.build("QAM16breve", Source::Baseline, Double)
        }
        _ => return None,
    };
    Some(e)
}

/// Looks up a catalog entry by name.
pub fn entry(name: &str) -> Result<CatalogEntry> {
    build(name).ok_or_else(|| Error::UnknownEntry {
        name: name.to_string(),
        valid: NAMES.join(", "),
    })
}

/// Returns a fresh copy of the named constellation.
pub fn get(name: &str) -> Result<Constellation> {
    entry(name).map(|e| e.constellation)
}

pub fn all() -> Vec<CatalogEntry> {
    NAMES.iter().map(|n| build(n).expect("listed name")).collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<(String, bool, String)>,
}

impl ValidationReport {
    fn record(&mut self, what: String, ok: bool, detail: String) {
        self.checks.push((what, ok, detail));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok, _)| *ok)
    }

    pub fn failures(&self) -> Vec<&(String, bool, String)> {
        self.checks.iter().filter(|c| !c.1).collect()
    }
}

/// Per-entry checks: unit minimum distance and cone membership at the
/// precision of each pair or point.
pub fn validate_entry(e: &CatalogEntry, report: &mut ValidationReport) {
    let pts = &e.constellation.points;
    let mut worst_pair = f64::INFINITY;
    let mut pair_ok = true;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].dist(&pts[j]);
            let tol = e.precision[i].tolerance().max(e.precision[j].tolerance());
            worst_pair = worst_pair.min(d);
            if d < 1.0 - tol {
                pair_ok = false;
            }
        }
    }
    let unit = pts.len() >= 2 && (worst_pair - 1.0).abs() <= e.tolerance().max(UNIT_DMIN_TOL);
    report.record(
        format!("{}: unit dmin", e.name),
        pair_ok && unit,
        format!("dmin = {worst_pair:.9}"),
    );

    let mut worst_cone: f64 = 0.0;
    let mut cone_ok = true;
    for (p, prec) in pts.iter().zip(&e.precision) {
        let v = SQRT_2 * p.radial() - p.w1;
        worst_cone = worst_cone.max(v);
        if v > prec.tolerance() {
            cone_ok = false;
        }
    }
    report.record(
        format!("{}: cone membership", e.name),
        cone_ok,
        format!("max violation = {worst_cone:.3e}"),
    );
}

/// Checks every entry plus the published set-inclusion claims.
pub fn validate_catalog() -> ValidationReport {
    let mut report = ValidationReport::default();
    let entries = all();
    for e in &entries {
        validate_entry(e, &mut report);
    }
    let c4 = get("C4").expect("C4");
    for name in OPTIMIZED.iter().skip(1) {
        let big = get(name).expect("listed");
        let dev = embedding_deviation(&c4, &big);
        report.record(
            format!("C4 within {name}"),
            dev.is_some_and(|d| d <= 1e-6),
            format!("deviation = {dev:?}"),
        );
    }
    let l16 = get("L16").expect("L16");
    for name in ["C_Phat8", "L_Pe8"] {
        let small = get(name).expect("listed");
        let dev = embedding_deviation(&small, &l16);
        report.record(
            format!("{name} within L16"),
            dev.is_some_and(|d| d <= 1e-9),
            format!("deviation = {dev:?}"),
        );
    }
    report
}
