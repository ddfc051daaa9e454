use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mi::{mutual_information, noise_std_for_snr};
use crate::constellation::{induced_distribution, Constellation, ShapingProfile, SymbolDistribution};
use crate::error::{Error, Result};

/// Half-width of the central difference used to estimate `dR/dSNR`.
pub const SLOPE_HALF_WIDTH_DB: f64 = 0.25;

const MONOTONE_SLACK: f64 = 1e-9;

/// Mutual information against SNR, sampled on an increasing SNR grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiCurve {
    pub label: String,
    points: Vec<(f64, f64)>,
}

impl MiCurve {
    /// `points` are `(snr_db, mi_bpcu)` pairs with strictly increasing SNR
    /// and nondecreasing MI.
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("a curve needs at least two points"));
        }
        for pair in points.windows(2) {
            let ((s0, r0), (s1, r1)) = (pair[0], pair[1]);
            if !(s1 > s0) {
                return Err(Error::param(format!("SNR grid not increasing at {s0} dB")));
            }
            if r1 < r0 - MONOTONE_SLACK {
                return Err(Error::Numerical(format!(
                    "MI decreases from {r0} to {r1} between {s0} and {s1} dB"
                )));
            }
        }
        if points.iter().any(|&(s, r)| !s.is_finite() || !(r >= 0.0)) {
            return Err(Error::param("curve points must be finite with MI >= 0"));
        }
        Ok(Self { label: label.into(), points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn snr_range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn rate_range(&self) -> (f64, f64) {
        (self.points[0].1, self.points[self.points.len() - 1].1)
    }

    /// Fritsch-Carlson tangents for monotone cubic Hermite interpolation.
    fn tangents(&self) -> Vec<f64> {
        let n = self.points.len();
        let secants: Vec<f64> = self
            .points
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let mut tangents = vec![0.0; n];
        tangents[0] = secants[0];
        tangents[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            if a * b <= 0.0 {
                tangents[i] = 0.0;
            } else {
                let (h0, h1) = (
                    self.points[i].0 - self.points[i - 1].0,
                    self.points[i + 1].0 - self.points[i].0,
                );
                let (w0, w1) = (2.0 * h1 + h0, h1 + 2.0 * h0);
                tangents[i] = (w0 + w1) / (w0 / a + w1 / b);
            }
        }
        tangents
    }

    fn hermite(&self, tangents: &[f64], seg: usize, snr: f64) -> f64 {
        let (x0, y0) = self.points[seg];
        let (x1, y1) = self.points[seg + 1];
        let h = x1 - x0;
        let t = (snr - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * tangents[seg]
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * tangents[seg + 1]
    }

    /// Interpolated MI at `snr_db`.
    pub fn mi_at(&self, snr_db: f64) -> Result<f64> {
        let (lo, hi) = self.snr_range();
        if !(lo..=hi).contains(&snr_db) {
            return Err(Error::param(format!(
                "SNR {snr_db} dB outside curve range [{lo}, {hi}]"
            )));
        }
        let seg = self
            .points
            .partition_point(|&(s, _)| s <= snr_db)
            .clamp(1, self.points.len() - 1)
            - 1;
        Ok(self.hermite(&self.tangents(), seg, snr_db))
    }

    /// SNR in dB at which the interpolated curve reaches `rate`.
    pub fn snr_at(&self, rate: f64) -> Result<f64> {
        let (lo, hi) = self.rate_range();
        if !(lo..=hi).contains(&rate) {
            return Err(Error::param(format!(
                "rate {rate} bpcu outside curve range [{lo}, {hi}]"
            )));
        }
        let seg = self
            .points
            .windows(2)
            .position(|w| w[0].1 <= rate && rate <= w[1].1)
            .expect("rate lies within a monotone curve");
        let (x0, y0) = self.points[seg];
        let (x1, y1) = self.points[seg + 1];
        if y1 - y0 <= 0.0 {
            return Ok(x0);
        }
        let tangents = self.tangents();
        let (mut a, mut b) = (x0, x1);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if self.hermite(&tangents, seg, mid) < rate {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Local slope `dR/dSNR` in bpcu per dB by central difference.
    pub fn slope_at_rate(&self, rate: f64) -> Result<f64> {
        let center = self.snr_at(rate)?;
        let up = self.mi_at(center + SLOPE_HALF_WIDTH_DB)?;
        let down = self.mi_at(center - SLOPE_HALF_WIDTH_DB)?;
        Ok((up - down) / (2.0 * SLOPE_HALF_WIDTH_DB))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,mi_bpcu\n");
        for (s, r) in &self.points {
            out.push_str(&format!("{s},{r}\n"));
        }
        out
    }
}

/// Horizontal distance in dB between two curves at a fixed rate:
/// SNR needed by `curve_a` minus SNR needed by `curve_b`.
pub fn mi_gap_db(curve_a: &MiCurve, curve_b: &MiCurve, rate_bpcu: f64) -> Result<f64> {
    Ok(curve_a.snr_at(rate_bpcu)? - curve_b.snr_at(rate_bpcu)?)
}

/// Converts a rate loss in bpcu into an SNR penalty in dB using the local
/// slope of `reference_curve` at `operating_rate`.
pub fn rate_loss_to_db(rate_loss_bpcu: f64, reference_curve: &MiCurve, operating_rate: f64) -> Result<f64> {
    if rate_loss_bpcu == 0.0 {
        return Ok(0.0);
    }
    let slope = reference_curve.slope_at_rate(operating_rate)?;
    if !(slope > 0.0) {
        return Err(Error::Numerical(format!("curve slope {slope} at {operating_rate} bpcu")));
    }
    Ok(rate_loss_bpcu / slope)
}

/// Evenly spaced SNR grid including both end points.
pub fn snr_grid(start_db: f64, stop_db: f64, step_db: f64) -> Vec<f64> {
    let count = ((stop_db - start_db) / step_db + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start_db + i as f64 * step_db).collect()
}

/// MI curve of a fixed distribution. Each SNR sets the noise level from
/// the distribution's own energy.
pub fn distribution_curve(
    label: impl Into<String>,
    dist: &SymbolDistribution,
    constellation: &Constellation,
    snrs_db: &[f64],
) -> Result<MiCurve> {
    let points = snrs_db
        .par_iter()
        .map(|&snr| {
            let sigma = noise_std_for_snr(dist.average_energy(), snr);
            mutual_information(dist, constellation, sigma).map(|mi| (snr, mi))
        })
        .collect::<Result<Vec<_>>>()?;
    MiCurve::new(label, points)
}

pub fn profile_curve(profile: &ShapingProfile, snrs_db: &[f64]) -> Result<MiCurve> {
    let constellation = Constellation::build_ask(profile.bits_per_symbol())?;
    let label = format!(
        "{}-ASK fixed p = {:?}",
        profile.constellation_size(),
        profile.probs()
    );
    distribution_curve(label, &induced_distribution(profile), &constellation, snrs_db)
}
