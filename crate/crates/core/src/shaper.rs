//! Shaping encoder and decoder built around the source switch, plus the
//! analysis of the switch's overflow rule.
//!
//! Each symbol takes `m - 1` uniform prefix bits; the prefix selects a
//! source through [`select_source_for_value`], one source bit is drawn and
//! (possibly flipped) becomes the sign bit. Two modes are supported:
//!
//! - ideal sources: every source is an i.i.d. Bernoulli generator;
//! - block matchers: each source is a fixed-weight [`DmCode`] word of
//!   length `n / P`. When a requested word is used up the switch serves the
//!   next word that still has bits and counts an overflow.
//!
//! The decoder replays the same switch from the decoded prefixes to put
//! every sign bit back into the word it came from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::{
    induced_distribution, select_source_for_value, Constellation, ShapingProfile,
};
use crate::enumdm::{weight_for, DmCode, FixedWeightWord};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShaperMode {
    IdealSources,
    BlockDm,
}

impl std::str::FromStr for ShaperMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal-sources" | "ideal" => Ok(ShaperMode::IdealSources),
            "block-dm" | "dm" => Ok(ShaperMode::BlockDm),
            other => Err(Error::param(format!("unknown shaper mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShaperConfig {
    pub profile: ShapingProfile,
    /// Symbols per block.
    pub n: usize,
    pub rng_seed: u64,
    pub mode: ShaperMode,
}

impl ShaperConfig {
    pub fn new(profile: ShapingProfile, n: usize, rng_seed: u64, mode: ShaperMode) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::param(format!("block length {n} must be even and positive")));
        }
        if mode == ShaperMode::BlockDm && n % profile.num_distinct() != 0 {
            return Err(Error::param(format!(
                "block length {n} is not divisible by P = {}",
                profile.num_distinct()
            )));
        }
        Ok(Self { profile, n, rng_seed, mode })
    }

    /// Output length of each matcher in block mode.
    pub fn dm_length(&self) -> usize {
        self.n / self.profile.num_distinct()
    }
}

/// One encoded block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapedBlock {
    pub symbols: Vec<i32>,
    /// `(m - 1) n` unshaped bits, `m - 1` per symbol.
    pub prefix_bits: Vec<bool>,
    /// Matcher inputs in source order (block mode only).
    pub shaping_info_bits: Vec<bool>,
    /// Requests served by a source other than the one selected.
    pub overflow_count: usize,
}

/// Per-symbol view of the switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwitchEvent {
    /// Source chosen by the prefix (1-based).
    pub requested: usize,
    /// Source that supplied the bit (1-based).
    pub served: usize,
    /// The supplied bit; `true` marks the outer symbol of the pair.
    pub outer: bool,
}

/// Consumption state of the per-source reservoirs in block mode.
#[derive(Clone, Debug)]
pub struct Switch {
    capacity: Vec<usize>,
    used: Vec<usize>,
    overflow_count: usize,
}

impl Switch {
    pub fn new(capacity: Vec<usize>) -> Self {
        let used = vec![0; capacity.len()];
        Self { capacity, used, overflow_count: 0 }
    }

    /// Serves a request for `source` (1-based), falling back to the next
    /// source in cyclic order that still has bits. Returns the serving
    /// source and the position consumed in its reservoir.
    pub fn serve(&mut self, source: usize) -> Result<(usize, usize)> {
        let count = self.capacity.len();
        for offset in 0..count {
            let s = (source - 1 + offset) % count;
            if self.used[s] < self.capacity[s] {
                let position = self.used[s];
                self.used[s] += 1;
                if offset > 0 {
                    self.overflow_count += 1;
                }
                return Ok((s + 1, position));
            }
        }
        Err(Error::integrity("every reservoir is exhausted"))
    }

    pub fn overflow_count(&self) -> usize {
        self.overflow_count
    }
}

/// Block encoder/decoder for a fixed configuration.
#[derive(Clone, Debug)]
pub struct Shaper {
    config: ShaperConfig,
    constellation: Constellation,
    codes: Vec<DmCode>,
}

impl Shaper {
    pub fn new(config: ShaperConfig) -> Result<Self> {
        let constellation = Constellation::build_ask(config.profile.bits_per_symbol())?;
        let codes = match config.mode {
            ShaperMode::IdealSources => Vec::new(),
            ShaperMode::BlockDm => {
                let len = config.dm_length();
                config
                    .profile
                    .probs()
                    .iter()
                    .map(|&p| DmCode::new(len, weight_for(len, p)))
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self { config, constellation, codes })
    }

    pub fn config(&self) -> &ShaperConfig {
        &self.config
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn dm_codes(&self) -> &[DmCode] {
        &self.codes
    }

    fn prefix_len(&self) -> usize {
        self.constellation.bits_per_symbol() as usize - 1
    }

    fn half(&self) -> usize {
        self.constellation.size() / 2
    }

    /// Number of input bits per block in block mode: all matcher inputs
    /// followed by the prefix bits.
    pub fn info_len(&self) -> usize {
        self.codes.iter().map(DmCode::k).sum::<usize>() + self.prefix_len() * self.config.n
    }

    fn symbol_for(&self, d: usize, sign: bool) -> i32 {
        self.constellation.symbol(d + self.half() * sign as usize)
    }

    fn prefix_value(bits: &[bool]) -> usize {
        bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    /// Encodes one block with i.i.d. sources. Prefix bits come from
    /// `prefix_source`; each Bernoulli source draws from its own stream
    /// derived from the configured seed and `block_index`.
    pub fn encode_block_ideal<R: Rng + ?Sized>(&self, prefix_source: &mut R, block_index: u64) -> Result<ShapedBlock> {
        if self.config.mode != ShaperMode::IdealSources {
            return Err(Error::param("shaper is not configured for ideal sources"));
        }
        let probs = self.config.profile.probs();
        let streams = probs.len() as u64;
        let mut sources: Vec<ChaCha8Rng> = (0..streams)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
                rng.set_stream(block_index * streams + s);
                rng
            })
            .collect();

        let n = self.config.n;
        let mut symbols = Vec::with_capacity(n);
        let mut prefix_bits = Vec::with_capacity(n * self.prefix_len());
        for _ in 0..n {
            let start = prefix_bits.len();
            prefix_bits.extend((0..self.prefix_len()).map(|_| prefix_source.random::<bool>()));
            let d = Self::prefix_value(&prefix_bits[start..]);
            let choice = select_source_for_value(d, &self.config.profile);
            let outer = sources[choice.source - 1].random_bool(probs[choice.source - 1]);
            symbols.push(self.symbol_for(d, choice.sign_bit(outer)));
        }
        Ok(ShapedBlock { symbols, prefix_bits, shaping_info_bits: Vec::new(), overflow_count: 0 })
    }

    /// Encodes one block through the fixed-weight matchers.
    pub fn encode_block_dm(&self, info_bits: &[bool]) -> Result<ShapedBlock> {
        if self.config.mode != ShaperMode::BlockDm {
            return Err(Error::param("shaper is not configured for block matchers"));
        }
        if info_bits.len() != self.info_len() {
            return Err(Error::param(format!(
                "block takes {} info bits, got {}",
                self.info_len(),
                info_bits.len()
            )));
        }
        let mut offset = 0;
        let mut words = Vec::with_capacity(self.codes.len());
        for code in &self.codes {
            words.push(code.encode(&info_bits[offset..offset + code.k()])?);
            offset += code.k();
        }
        let shaping_info_bits = info_bits[..offset].to_vec();
        let prefix_bits = info_bits[offset..].to_vec();

        let mut switch = Switch::new(words.iter().map(FixedWeightWord::len).collect());
        let symbols = prefix_bits
            .chunks(self.prefix_len())
            .map(|prefix| {
                let d = Self::prefix_value(prefix);
                let choice = select_source_for_value(d, &self.config.profile);
                let (served, position) = switch.serve(choice.source)?;
                let outer = words[served - 1].bits()[position];
                Ok(self.symbol_for(d, choice.sign_bit(outer)))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(ShapedBlock {
            symbols,
            prefix_bits,
            shaping_info_bits,
            overflow_count: switch.overflow_count(),
        })
    }

    /// Replays the switch over received symbols.
    pub fn switch_trace(&self, symbols: &[i32]) -> Result<Vec<SwitchEvent>> {
        let mut switch = Switch::new(vec![self.config.dm_length(); self.config.profile.num_distinct()]);
        symbols
            .iter()
            .map(|&x| {
                let index = self
                    .constellation
                    .index_of(x)
                    .ok_or_else(|| Error::integrity(format!("{x} is not a constellation symbol")))?;
                let d = index % self.half();
                let sign = index >= self.half();
                let choice = select_source_for_value(d, &self.config.profile);
                let (served, _) = switch.serve(choice.source)?;
                Ok(SwitchEvent { requested: choice.source, served, outer: choice.source_bit(sign) })
            })
            .collect()
    }

    /// Recovers the info bits of a block produced by
    /// [`Shaper::encode_block_dm`] from noiseless symbols.
    pub fn decode_block(&self, symbols: &[i32]) -> Result<Vec<bool>> {
        if self.config.mode != ShaperMode::BlockDm {
            return Err(Error::Unsupported("decoding is defined for block-matcher mode".into()));
        }
        if symbols.len() != self.config.n {
            return Err(Error::integrity(format!(
                "block has {} symbols, expected {}",
                symbols.len(),
                self.config.n
            )));
        }
        let half = self.half();
        let prefix_len = self.prefix_len();
        let mut prefix_bits = Vec::with_capacity(prefix_len * symbols.len());
        let mut words: Vec<Vec<bool>> = self.codes.iter().map(|c| Vec::with_capacity(c.n())).collect();

        let trace = self.switch_trace(symbols)?;
        for (&x, event) in symbols.iter().zip(&trace) {
            let d = self.constellation.index_of(x).expect("checked by the trace") % half;
            prefix_bits.extend((0..prefix_len).map(|i| (d >> i) & 1 == 1));
            words[event.served - 1].push(event.outer);
        }

        let mut info = Vec::with_capacity(self.info_len());
        for (j, (code, bits)) in self.codes.iter().zip(words).enumerate() {
            let word = FixedWeightWord::from_bits(bits);
            match code.decode(&word) {
                Ok(bits) => info.extend(bits),
                Err(Error::Weight { expected, found }) => {
                    return Err(Error::integrity(format!(
                        "source {} word has weight {found}, expected {expected}",
                        j + 1
                    )))
                }
                Err(Error::OutOfCodebook { .. }) => {
                    return Err(Error::integrity(format!(
                        "source {} word is outside the matcher codebook",
                        j + 1
                    )))
                }
                Err(e) => return Err(e),
            }
        }
        info.extend(prefix_bits);
        Ok(info)
    }
}

/// Header of a serialized block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub m: u32,
    #[serde(rename = "P")]
    pub num_distinct: usize,
    pub probs: Vec<f64>,
    pub n: usize,
    pub mode: ShaperMode,
    pub seed: u64,
}

/// A block as written to disk: header plus the symbols as signed integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockFile {
    pub header: BlockHeader,
    pub symbols: Vec<i32>,
}

impl BlockFile {
    pub fn new(config: &ShaperConfig, block: &ShapedBlock) -> Self {
        let header = BlockHeader {
            m: config.profile.bits_per_symbol(),
            num_distinct: config.profile.num_distinct(),
            probs: config.profile.probs().to_vec(),
            n: config.n,
            mode: config.mode,
            seed: config.rng_seed,
        };
        Self { header, symbols: block.symbols.clone() }
    }

    pub fn config(&self) -> Result<ShaperConfig> {
        let h = &self.header;
        if h.probs.len() != h.num_distinct {
            return Err(Error::integrity("header P does not match its probability list"));
        }
        let profile = ShapingProfile::new(h.m, h.probs.clone())?;
        ShaperConfig::new(profile, h.n, h.seed, h.mode)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::integrity(format!("malformed block file: {e}")))
    }
}

/// `epsilon = sum_{k > n/2} (k - n/2) C(n, k) 2^-n`, the expected number of
/// requests one source cannot serve when `n` requests are split evenly at
/// random between two sources.
pub fn switch_excess_expectation(n: usize) -> Result<f64> {
    if n == 0 || n % 2 != 0 || n > 1 << 20 {
        return Err(Error::param(format!("n = {n} must be even and at most 2^20")));
    }
    let half = n / 2;
    // C(n, n/2) 2^-n as a product of ratios stays in range for any n
    let mut term = (1..=half).fold(1.0f64, |acc, i| acc * (2 * i - 1) as f64 / (2 * i) as f64);
    let mut sum = 0.0;
    for k in half + 1..=n {
        term *= (n - k + 1) as f64 / k as f64;
        if term == 0.0 {
            break;
        }
        sum += (k - half) as f64 * term;
    }
    Ok(sum)
}

/// Source probabilities seen through the overflow rule:
/// `p1' = p1 + (2 eps / n)(p2 - p1)` and symmetrically for `p2'`.
pub fn effective_probabilities(p1: f64, p2: f64, n: usize) -> Result<(f64, f64)> {
    let eps = switch_excess_expectation(n)?;
    let mix = 2.0 * eps / n as f64;
    Ok((p1 + mix * (p2 - p1), p2 + mix * (p1 - p2)))
}

/// Energy penalty of the overflow rule, `10 log10(Es' / Es)` in dB.
pub fn switch_energy_loss(profile: &ShapingProfile, n: usize) -> Result<f64> {
    Ok(analyze_switch(profile, n)?.delta_db)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchAnalysis {
    pub m: u32,
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub epsilon: f64,
    pub p_eff: (f64, f64),
    pub delta_db: f64,
}

pub fn analyze_switch(profile: &ShapingProfile, n: usize) -> Result<SwitchAnalysis> {
    if profile.num_distinct() != 2 {
        return Err(Error::Unsupported(format!(
            "switch analysis needs exactly two sources, profile has {}",
            profile.num_distinct()
        )));
    }
    let (p1, p2) = (profile.probs()[0], profile.probs()[1]);
    let epsilon = switch_excess_expectation(n)?;
    let p_eff = effective_probabilities(p1, p2, n)?;
    let base = induced_distribution(profile).average_energy();
    let mixed = induced_distribution(&profile.with_probs(vec![p_eff.0, p_eff.1])?).average_energy();
    Ok(SwitchAnalysis {
        m: profile.bits_per_symbol(),
        n,
        p1,
        p2,
        epsilon,
        p_eff,
        delta_db: 10.0 * (mixed / base).log10(),
    })
}
