//! Uncoded AWGN Monte Carlo harness for the shaped chain.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{induced_distribution, select_source_for_value, Constellation};
use crate::error::{Error, Result};
use crate::midist::noise_std_for_snr;
use crate::shaper::{ShapedBlock, Shaper, ShaperConfig, ShaperMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub shaper: ShaperConfig,
    pub noise_std: f64,
    pub num_blocks: usize,
    pub rng_seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OverflowStats {
    pub mean: f64,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub symbols: u64,
    /// Transmitted symbol frequencies in ascending symbol order.
    pub empirical_distribution: Vec<f64>,
    pub empirical_energy: f64,
    pub snr_db: f64,
    pub symbol_error_rate: f64,
    pub shaping_bit_error_rate: f64,
    /// Plug-in estimate from the empirical joint of `X` and quantized `Y`.
    pub mi_estimate: f64,
    pub overflow_stats: OverflowStats,
    /// Blocks whose info bits (block mode) or symbols (ideal mode) were not
    /// recovered exactly.
    pub block_errors: usize,
}

/// Nearest-symbol hard decision, ties toward the smaller symbol.
pub fn demap(y: f64, constellation: &Constellation) -> i32 {
    let size = constellation.size() as f64;
    // symbol index i sits at 2i - (M - 1); midpoints are at even integers
    let position = (y + size - 1.0) / 2.0;
    let index = if position <= 0.0 {
        0.0
    } else {
        // ceil(position - 0.5) rounds exact halves down
        (position - 0.5).ceil().min(size - 1.0)
    };
    constellation.symbol(index as usize)
}

/// Output quantizer used by the plug-in MI estimate.
struct Bins {
    width: f64,
    low: f64,
    count: i64,
}

impl Bins {
    fn new(max_symbol: f64, sigma: f64) -> Self {
        let width = sigma / 4.0;
        let reach = max_symbol + 5.0 * sigma;
        let count = (2.0 * reach / width).ceil() as i64;
        Self { width, low: -reach, count }
    }

    fn index(&self, y: f64) -> i64 {
        (((y - self.low) / self.width).floor() as i64).clamp(0, self.count - 1)
    }
}

#[derive(Default)]
struct Tally {
    symbol_counts: Vec<u64>,
    energy: f64,
    symbol_errors: u64,
    shaping_bit_errors: u64,
    overflow_sum: u64,
    overflow_max: usize,
    block_errors: usize,
    joint: BTreeMap<(usize, i64), u64>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        if self.symbol_counts.is_empty() {
            self.symbol_counts = other.symbol_counts;
        } else {
            for (a, b) in self.symbol_counts.iter_mut().zip(other.symbol_counts) {
                *a += b;
            }
        }
        self.energy += other.energy;
        self.symbol_errors += other.symbol_errors;
        self.shaping_bit_errors += other.shaping_bit_errors;
        self.overflow_sum += other.overflow_sum;
        self.overflow_max = self.overflow_max.max(other.overflow_max);
        self.block_errors += other.block_errors;
        for (key, count) in other.joint {
            *self.joint.entry(key).or_default() += count;
        }
        self
    }
}

fn block_rng(seed: u64, block_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block_index);
    rng
}

fn simulate_block(shaper: &Shaper, config: &SimConfig, bins: Option<&Bins>, block_index: u64) -> Result<Tally> {
    let constellation = shaper.constellation();
    let profile = &config.shaper.profile;
    let half = constellation.size() / 2;
    let mut rng = block_rng(config.rng_seed, block_index);

    let (block, info): (ShapedBlock, Vec<bool>) = match config.shaper.mode {
        ShaperMode::IdealSources => (shaper.encode_block_ideal(&mut rng, block_index)?, Vec::new()),
        ShaperMode::BlockDm => {
            let info: Vec<bool> = (0..shaper.info_len()).map(|_| rng.random()).collect();
            (shaper.encode_block_dm(&info)?, info)
        }
    };
    let noise = if config.noise_std > 0.0 {
        Some(Normal::new(0.0, config.noise_std).map_err(|e| Error::param(e.to_string()))?)
    } else {
        None
    };

    let mut tally = Tally { symbol_counts: vec![0; constellation.size()], ..Tally::default() };
    let mut decided = Vec::with_capacity(block.symbols.len());
    for &x in &block.symbols {
        let y = f64::from(x) + noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
        let x_hat = demap(y, constellation);
        decided.push(x_hat);

        let index = constellation.index_of(x).expect("encoder emits constellation symbols");
        let index_hat = constellation.index_of(x_hat).expect("demapper emits constellation symbols");
        tally.symbol_counts[index] += 1;
        tally.energy += f64::from(x) * f64::from(x);
        tally.symbol_errors += (x != x_hat) as u64;

        // the receiver un-flips with its own decoded prefix
        let sent = select_source_for_value(index % half, profile).source_bit(index >= half);
        let got = select_source_for_value(index_hat % half, profile).source_bit(index_hat >= half);
        tally.shaping_bit_errors += (sent != got) as u64;

        if let Some(bins) = bins {
            *tally.joint.entry((index, bins.index(y))).or_default() += 1;
        }
    }
    tally.overflow_sum = block.overflow_count as u64;
    tally.overflow_max = block.overflow_count;
    tally.block_errors = match config.shaper.mode {
        ShaperMode::IdealSources => (decided != block.symbols) as usize,
        ShaperMode::BlockDm => match shaper.decode_block(&decided) {
            Ok(bits) => (bits != info) as usize,
            Err(_) => 1,
        },
    };
    Ok(tally)
}

fn entropy_bits(counts: impl Iterator<Item = u64>, total: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

fn plug_in_mi(joint: &BTreeMap<(usize, i64), u64>, total: f64) -> f64 {
    let mut x_marginal: BTreeMap<usize, u64> = BTreeMap::new();
    let mut y_marginal: BTreeMap<i64, u64> = BTreeMap::new();
    for (&(x, b), &c) in joint {
        *x_marginal.entry(x).or_default() += c;
        *y_marginal.entry(b).or_default() += c;
    }
    joint
        .iter()
        .map(|(&(x, b), &c)| {
            let c = c as f64;
            c / total * (c * total / (x_marginal[&x] as f64 * y_marginal[&b] as f64)).log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Runs `num_blocks` blocks through encoder, channel, demapper and decoder.
/// Blocks are independent and use per-block generator streams, so the
/// report does not depend on scheduling.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    if !(config.noise_std >= 0.0 && config.noise_std.is_finite()) {
        return Err(Error::param(format!("noise std {} must be >= 0", config.noise_std)));
    }
    if config.num_blocks == 0 {
        return Err(Error::param("need at least one block"));
    }
    let shaper = Shaper::new(config.shaper.clone())?;
    let bins = (config.noise_std > 0.0)
        .then(|| Bins::new(f64::from(shaper.constellation().max_symbol()), config.noise_std));

    let tally = (0..config.num_blocks as u64)
        .into_par_iter()
        .map(|b| simulate_block(&shaper, config, bins.as_ref(), b))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let symbols = (config.num_blocks * config.shaper.n) as u64;
    let total = symbols as f64;
    let empirical_energy = tally.energy / total;
    let mi_estimate = match bins {
        Some(_) => plug_in_mi(&tally.joint, total),
        None => entropy_bits(tally.symbol_counts.iter().copied(), total),
    };
    Ok(SimReport {
        symbols,
        empirical_distribution: tally.symbol_counts.iter().map(|&c| c as f64 / total).collect(),
        empirical_energy,
        snr_db: if config.noise_std > 0.0 {
            10.0 * (empirical_energy / config.noise_std.powi(2)).log10()
        } else {
            f64::INFINITY
        },
        symbol_error_rate: tally.symbol_errors as f64 / total,
        shaping_bit_error_rate: tally.shaping_bit_errors as f64 / total,
        mi_estimate,
        overflow_stats: OverflowStats {
            mean: tally.overflow_sum as f64 / config.num_blocks as f64,
            max: tally.overflow_max,
        },
        block_errors: tally.block_errors,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub noise_std: f64,
    pub ser: f64,
    pub mi_estimate: f64,
}

/// Runs the simulation at each SNR, with the noise level set from the
/// target distribution's energy.
pub fn sweep(base: &SimConfig, snrs_db: &[f64]) -> Result<Vec<SweepPoint>> {
    let energy = induced_distribution(&base.shaper.profile).average_energy();
    snrs_db
        .iter()
        .map(|&snr| {
            let noise_std = noise_std_for_snr(energy, snr);
            let report = run(&SimConfig { noise_std, ..base.clone() })?;
            Ok(SweepPoint {
                snr_db: snr,
                noise_std,
                ser: report.symbol_error_rate,
                mi_estimate: report.mi_estimate,
            })
        })
        .collect()
}

pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("snr_db,ser,mi_estimate\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.snr_db, p.ser, p.mi_estimate));
    }
    out
}
