//! End-to-end SNR loss budget of a two-source shaper with finite-length DMs.

use serde::{Deserialize, Serialize};

use crate::constellation::ShapingProfile;
use crate::enumdm::rate_loss;
use crate::error::{Error, Result};
use crate::midist::{
    capacity_snr_db, optimized_curve, profile_curve, profile_mi_at_snr, rate_loss_to_db, snr_grid,
    GridOptions, MiCurve, Quadrature, SLOPE_HALF_WIDTH_DB,
};
use crate::shaper::switch_energy_loss;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub m: u32,
    pub p1: f64,
    pub p2: f64,
    /// Shaper block length; `None` is the infinite-length limit.
    pub n: Option<usize>,
    pub snr_db: f64,
    /// MI of the fixed profile at `snr_db`.
    pub rate_bpcu: f64,
    pub capacity_snr_db: f64,
    pub quantization_db: f64,
    pub dm_rate_loss_bpcu: f64,
    pub dm_db: f64,
    pub switch_db: f64,
    pub total_db: f64,
}

/// Splits the gap between `snr_db` and the Gaussian capacity SNR at the
/// achieved rate into quantization, DM and switch contributions.
///
/// The DM term averages the rate losses of the two matchers, each of length
/// `n / 2`, and converts it to dB with the slope of the profile's own MI
/// curve at the operating rate.
pub fn loss_budget(m: u32, p1: f64, p2: f64, n: Option<usize>, snr_db: f64) -> Result<LossBudget> {
    let profile = ShapingProfile::new(m, vec![p1, p2])?;
    if profile.num_distinct() != 2 {
        return Err(Error::Unsupported("loss budget needs exactly two sources".into()));
    }
    let rate_bpcu = profile_mi_at_snr(&profile, snr_db, Quadrature::default())?;
    let capacity_snr = capacity_snr_db(rate_bpcu);
    let quantization_db = snr_db - capacity_snr;

    let (dm_rate_loss_bpcu, dm_db, switch_db) = match n {
        None => (0.0, 0.0, 0.0),
        Some(n) => {
            if n < 2 || n % 2 != 0 {
                return Err(Error::param(format!("block length {n} must be even and >= 2")));
            }
            let loss = 0.5 * (rate_loss(n / 2, p1)? + rate_loss(n / 2, p2)?);
            let half = 4.0 * SLOPE_HALF_WIDTH_DB;
            let curve = profile_curve(&profile, &snr_grid(snr_db - half, snr_db + half, 0.25))?;
            let dm_db = rate_loss_to_db(loss, &curve, rate_bpcu)?;
            (loss, dm_db, switch_energy_loss(&profile, n)?)
        }
    };
    Ok(LossBudget {
        m,
        p1,
        p2,
        n,
        snr_db,
        rate_bpcu,
        capacity_snr_db: capacity_snr,
        quantization_db,
        dm_rate_loss_bpcu,
        dm_db,
        switch_db,
        total_db: quantization_db + dm_db + switch_db,
    })
}

/// Optimized MI curve on a 0.25 dB grid wide enough to take a slope at
/// `rate`.
pub fn optimized_curve_around_rate(
    m: u32,
    num_distinct: usize,
    rate: f64,
    options: &GridOptions,
) -> Result<MiCurve> {
    if !(rate > 0.0 && rate < f64::from(m)) {
        return Err(Error::param(format!("rate {rate} outside (0, {m})")));
    }
    let start = capacity_snr_db(rate) - 1.0;
    let mut stop = start + 4.0;
    loop {
        let (curve, _) = optimized_curve(m, num_distinct, &snr_grid(start, stop, 0.25), options)?;
        let reach = curve.snr_at(rate).map(|s| s + SLOPE_HALF_WIDTH_DB < stop);
        match reach {
            Ok(true) => return Ok(curve),
            _ if stop - start > 40.0 => {
                return Err(Error::Numerical(format!("rate {rate} not reached below {stop} dB")))
            }
            _ => stop += 4.0,
        }
    }
}
