//! Power measures and the SNR conversions built on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Constellation;

/// Unit-dmin tolerance accepted by functions that require normalized input.
pub const UNIT_DMIN_TOL: f64 = 1e-6;

/// The three power measures. The same choice selects an SNR axis for
/// performance curves and an objective for constellation optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    AvgElectrical,
    AvgOptical,
    PeakOptical,
}

pub type SnrMeasure = Measure;

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::AvgElectrical, Measure::AvgOptical, Measure::PeakOptical];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::AvgElectrical => "avg-electrical",
            Measure::AvgOptical => "avg-optical",
            Measure::PeakOptical => "peak-optical",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg-electrical" | "electrical" | "e" => Ok(Measure::AvgElectrical),
            "avg-optical" | "optical" | "o" => Ok(Measure::AvgOptical),
            "peak-optical" | "peak" | "p" => Ok(Measure::PeakOptical),
            other => Err(Error::InvalidArgument(format!(
                "unknown measure `{other}` (expected avg-electrical, avg-optical or peak-optical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    /// Average symbol energy `E[|s|^2]`.
    pub es: f64,
    /// Average DC coordinate `E[s_1]`.
    pub mean_dc: f64,
    /// `max_i s_i1 + sqrt(2 (s_i2^2 + s_i3^2))`.
    pub peak_moment: f64,
    /// Raw minimum distance (zero when points coincide).
    pub dmin: f64,
    pub m: usize,
    pub bandwidth_factor: f64,
}

impl PowerSummary {
    pub fn of(c: &Constellation) -> Self {
        let m = c.len();
        let n = m as f64;
        let es = c.points.iter().map(|p| p.norm_sq()).sum::<f64>() / n;
        let mean_dc = c.points.iter().map(|p| p.w1).sum::<f64>() / n;
        let peak_moment = c
            .points
            .iter()
            .map(|p| p.peak())
            .fold(f64::NEG_INFINITY, f64::max);
        let dmin = if m >= 2 { c.raw_min_distance() } else { 0.0 };
        Self {
            es,
            mean_dc,
            peak_moment,
            dmin,
            m,
            bandwidth_factor: c.bandwidth_factor.value(),
        }
    }

    pub fn value(&self, measure: Measure) -> f64 {
        match measure {
            Measure::AvgElectrical => self.es,
            Measure::AvgOptical => self.mean_dc,
            Measure::PeakOptical => self.peak_moment,
        }
    }
}

pub fn power_summary(c: &Constellation) -> PowerSummary {
    PowerSummary::of(c)
}

/// Geometry-only term relating an SNR measure to `gamma_Eb`:
/// `gamma = gamma_Eb / 2 + offset` for the optical measures.
pub fn snr_geometry_offset(c: &Constellation, measure: Measure) -> Result<f64> {
    let s = PowerSummary::of(c);
    if s.es <= 0.0 {
        return Err(Error::Degenerate("zero symbol energy".into()));
    }
    Ok(match measure {
        Measure::AvgElectrical => 0.0,
        Measure::AvgOptical => 10.0 * (s.mean_dc / s.es.sqrt()).log10(),
        Measure::PeakOptical => 10.0 * (s.peak_moment / s.es.sqrt()).log10(),
    })
}

/// Converts `gamma_Eb` (dB) to the requested SNR measure.
pub fn snr_from_ebn0_db(c: &Constellation, measure: Measure, gamma_eb_db: f64) -> Result<f64> {
    let off = snr_geometry_offset(c, measure)?;
    Ok(match measure {
        Measure::AvgElectrical => gamma_eb_db,
        _ => 0.5 * gamma_eb_db + off,
    })
}

/// Inverse of [`snr_from_ebn0_db`].
pub fn ebn0_db_from_snr(c: &Constellation, measure: Measure, gamma_db: f64) -> Result<f64> {
    let off = snr_geometry_offset(c, measure)?;
    Ok(match measure {
        Measure::AvgElectrical => gamma_db,
        _ => 2.0 * (gamma_db - off),
    })
}

/// Bits per second per hertz, `rate / (W / Rs)`.
pub fn spectral_efficiency(rate_bits_per_symbol: f64, bandwidth_factor: f64) -> f64 {
    rate_bits_per_symbol / bandwidth_factor
}

/// Asymptotic power gain over OOK in dB at equal bit rate and unit dmin.
/// Positive means the constellation needs less power than OOK.
pub fn asymptotic_gain_vs_ook(c: &Constellation, measure: Measure) -> Result<f64> {
    let s = PowerSummary::of(c);
    if s.m < 2 || (s.dmin - 1.0).abs() > UNIT_DMIN_TOL {
        return Err(Error::NotNormalized(s.dmin));
    }
    let rate = c.rate();
    let ratio = match measure {
        // OOK: es = 1/2, rate 1
        Measure::AvgElectrical => 0.5 / (s.es / rate),
        // OOK: mean DC = 1/2
        Measure::AvgOptical => 0.5 / (s.mean_dc / rate.sqrt()),
        // OOK: peak = 1
        Measure::PeakOptical => 1.0 / (s.peak_moment / rate.sqrt()),
    };
    Ok(10.0 * ratio.log10())
}

/// One row of the gain summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub name: String,
    pub m: usize,
    pub bandwidth_factor: u8,
    pub es: f64,
    pub mean_dc: f64,
    pub peak_moment: f64,
    pub gain_e_db: f64,
    pub gain_o_db: f64,
    pub gain_p_db: f64,
}

impl GainRow {
    pub const HEADER: &'static str =
        "name,M,bandwidth_factor,es,mean_dc,peak_moment,gain_e_dB,gain_o_dB,gain_p_dB";

    pub fn new(c: &Constellation) -> Result<Self> {
        let s = PowerSummary::of(c);
        Ok(Self {
            name: c.name.clone(),
            m: s.m,
            bandwidth_factor: c.bandwidth_factor.into(),
            es: s.es,
            mean_dc: s.mean_dc,
            peak_moment: s.peak_moment,
            gain_e_db: asymptotic_gain_vs_ook(c, Measure::AvgElectrical)?,
            gain_o_db: asymptotic_gain_vs_ook(c, Measure::AvgOptical)?,
            gain_p_db: asymptotic_gain_vs_ook(c, Measure::PeakOptical)?,
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.2},{:.2},{:.2}",
            self.name,
            self.m,
            self.bandwidth_factor,
            self.es,
            self.mean_dc,
            self.peak_moment,
            self.gain_e_db,
            self.gain_o_db,
            self.gain_p_db
        )
    }
}
