use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, SymbolDistribution};
use crate::error::{Error, Result};

/// Integration grid for `h(Y)` of the Gaussian mixture at the channel
/// output.
///
/// The output density is sampled on a uniform grid with spacing
/// `sigma / points_per_sigma`, extended `span_sigmas` noise deviations past
/// the outermost symbols. The integrand is analytic, so the trapezoid rule
/// converges geometrically in `points_per_sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub points_per_sigma: usize,
    pub span_sigmas: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { points_per_sigma: 8, span_sigmas: 10.0 }
    }
}

impl Quadrature {
    pub fn doubled(self) -> Self {
        Self { points_per_sigma: 2 * self.points_per_sigma, ..self }
    }
}

/// AWGN channel `Y = X + Z` with `Z ~ N(0, noise_std^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub noise_std: f64,
}

impl ChannelSpec {
    pub fn new(noise_std: f64) -> Result<Self> {
        if !(noise_std > 0.0 && noise_std.is_finite()) {
            return Err(Error::param(format!("noise std {noise_std} must be positive")));
        }
        Ok(Self { noise_std })
    }

    /// Channel reaching `snr_db` for an input of the given energy.
    pub fn for_snr(average_energy: f64, snr_db: f64) -> Result<Self> {
        Self::new(noise_std_for_snr(average_energy, snr_db))
    }

    /// `10 log10(E[X^2] / sigma^2)` for the distribution in use.
    pub fn snr_db(&self, dist: &SymbolDistribution) -> f64 {
        snr_db(dist.average_energy(), self.noise_std)
    }
}

pub fn snr_db(average_energy: f64, noise_std: f64) -> f64 {
    10.0 * (average_energy / (noise_std * noise_std)).log10()
}

pub fn noise_std_for_snr(average_energy: f64, snr_db: f64) -> f64 {
    (average_energy / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Gaussian-input AWGN capacity `0.5 log2(1 + SNR)`.
pub fn awgn_capacity(snr_db: f64) -> f64 {
    0.5 * (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

/// SNR in dB at which the Gaussian-input capacity equals `rate`.
pub fn capacity_snr_db(rate: f64) -> f64 {
    10.0 * ((2f64).powf(2.0 * rate) - 1.0).log10()
}

/// `I(X;Y)` in bits per channel use with the default quadrature.
pub fn mutual_information(
    dist: &SymbolDistribution,
    constellation: &Constellation,
    noise_std: f64,
) -> Result<f64> {
    mutual_information_with(dist, constellation, noise_std, Quadrature::default())
}

/// `I(X;Y) = h(Y) - h(Z)` with `h(Y)` integrated numerically.
pub fn mutual_information_with(
    dist: &SymbolDistribution,
    constellation: &Constellation,
    noise_std: f64,
    quadrature: Quadrature,
) -> Result<f64> {
    if !(noise_std > 0.0 && noise_std.is_finite()) {
        return Err(Error::param(format!("noise std {noise_std} must be positive")));
    }
    if dist.len() != constellation.size() {
        return Err(Error::param(format!(
            "distribution has {} entries for a {}-point constellation",
            dist.len(),
            constellation.size()
        )));
    }
    if quadrature.points_per_sigma == 0 {
        return Err(Error::param("quadrature needs at least one point per sigma"));
    }
    let total: f64 = dist.probabilities().iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::param(format!("distribution sums to {total}")));
    }

    // (symbol, ln p) over the support
    let support: Vec<(f64, f64)> = constellation
        .symbols()
        .iter()
        .zip(dist.probabilities())
        .filter(|(_, &p)| p > 0.0)
        .map(|(&x, &p)| (f64::from(x), p.ln()))
        .collect();

    let sigma = noise_std;
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let ln_norm = (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let step = sigma / quadrature.points_per_sigma as f64;
    let lo = support.first().unwrap().0 - quadrature.span_sigmas * sigma;
    let hi = support.last().unwrap().0 + quadrature.span_sigmas * sigma;
    let count = ((hi - lo) / step).ceil() as usize + 1;

    let mut exponents = vec![0.0; support.len()];
    let mut neg_entropy = 0.0;
    for k in 0..count {
        let y = lo + k as f64 * step;
        let mut max = f64::NEG_INFINITY;
        for (e, &(x, ln_p)) in exponents.iter_mut().zip(&support) {
            let d = y - x;
            *e = ln_p - d * d * inv_two_var;
            max = max.max(*e);
        }
        let sum: f64 = exponents.iter().map(|e| (e - max).exp()).sum();
        let ln_py = max + sum.ln() - ln_norm;
        neg_entropy += ln_py.exp() * ln_py;
    }
    let output_entropy = -neg_entropy * step;
    let noise_entropy = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).ln();
    let mi = (output_entropy - noise_entropy) / std::f64::consts::LN_2;
    if !mi.is_finite() {
        return Err(Error::Numerical(format!("mutual information evaluated to {mi}")));
    }
    Ok(mi.max(0.0))
}

/// Maxwell-Boltzmann distribution `p(x) ~ exp(-lambda x^2)`.
pub fn maxwell_boltzmann(constellation: &Constellation, lambda: f64) -> Result<SymbolDistribution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("lambda = {lambda} must be nonnegative")));
    }
    // shift by the smallest energy (x = +-1) so the largest weight is 1
    let weights: Vec<f64> = constellation
        .symbols()
        .iter()
        .map(|&x| (-lambda * (f64::from(x).powi(2) - 1.0)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    SymbolDistribution::new(weights.iter().map(|w| w / total).collect(), constellation)
}
