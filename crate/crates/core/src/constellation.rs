//! ASK alphabets with natural labelling and stepwise sign-bit-shaped
//! symbol distributions.
//!
//! Labels are written least significant bit first: `bits[0]` is `b_1` and
//! `bits[m - 1]` is the sign (shaping) bit `b_m`. The decimal value of a
//! label is the rank of its symbol in ascending order, so the sign bit
//! selects the negative (`b_m = 0`) or positive (`b_m = 1`) half.
//!
//! A profile parameter `p_j` is the probability that the sign bit places the
//! symbol on the *outer* side of its pair. For prefixes in the first quarter
//! the outer symbol is the negative one, so `p_j = p(b_m = 0 | prefix)`
//! there; the mirrored quarter reuses the same source with the bit flipped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// An `M = 2^m` point ASK alphabet `{-(M-1), ..., -1, +1, ..., +(M-1)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constellation {
    m: u32,
    symbols: Vec<i32>,
}

impl Constellation {
    /// Builds a shaping-capable constellation, `2 <= m <= 16`.
    pub fn build_ask(m: u32) -> Result<Self> {
        if !(2..=16).contains(&m) {
            return Err(Error::param(format!("bit levels m = {m} must lie in 2..=16")));
        }
        Ok(Self::alphabet(m))
    }

    /// Plain ASK alphabet for reference computations; unlike
    /// [`Constellation::build_ask`] this also accepts `m = 1` (2-ASK).
    pub fn ask_alphabet(m: u32) -> Result<Self> {
        if !(1..=16).contains(&m) {
            return Err(Error::param(format!("bit levels m = {m} must lie in 1..=16")));
        }
        Ok(Self::alphabet(m))
    }

    fn alphabet(m: u32) -> Self {
        let size = 1i32 << m;
        let symbols = (0..size).map(|i| 2 * i - (size - 1)).collect();
        Self { m, symbols }
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    /// Symbols in ascending order.
    pub fn symbols(&self) -> &[i32] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> i32 {
        self.symbols[index]
    }

    pub fn max_symbol(&self) -> i32 {
        *self.symbols.last().unwrap()
    }

    /// Rank of a symbol, or `None` if it is not in the alphabet.
    pub fn index_of(&self, symbol: i32) -> Option<usize> {
        let offset = symbol + (self.size() as i32 - 1);
        if offset < 0 || offset % 2 != 0 {
            return None;
        }
        let index = (offset / 2) as usize;
        (index < self.size()).then_some(index)
    }

    /// Natural label of the symbol with the given rank, LSB first.
    pub fn label(&self, index: usize) -> Vec<bool> {
        (0..self.m).map(|i| (index >> i) & 1 == 1).collect()
    }

    pub fn symbol_for_label(&self, bits: &[bool]) -> Result<i32> {
        if bits.len() != self.m as usize {
            return Err(Error::param(format!(
                "label has {} bits, constellation uses {}",
                bits.len(),
                self.m
            )));
        }
        Ok(self.symbols[decimal_value(bits) as usize])
    }
}

/// `sum_i 2^(i-1) * b_i` with `b_1` first.
pub fn decimal_value(bits: &[bool]) -> u64 {
    debug_assert!(bits.len() <= 64);
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
}

/// The distinct sign-bit probabilities of a stepwise shaped distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct ShapingProfile {
    m: u32,
    num_distinct: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    m: u32,
    #[serde(rename = "P")]
    num_distinct: usize,
    probs: Vec<f64>,
}

impl TryFrom<RawProfile> for ShapingProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        if raw.probs.len() != raw.num_distinct {
            return Err(Error::param(format!(
                "profile declares P = {} but lists {} probabilities",
                raw.num_distinct,
                raw.probs.len()
            )));
        }
        ShapingProfile::new(raw.m, raw.probs)
    }
}

impl From<ShapingProfile> for RawProfile {
    fn from(p: ShapingProfile) -> Self {
        RawProfile { m: p.m, num_distinct: p.num_distinct, probs: p.probs }
    }
}

impl ShapingProfile {
    /// `probs[j]` is the outer-side probability shared by group `j + 1`,
    /// group 1 being the outermost.
    pub fn new(m: u32, probs: Vec<f64>) -> Result<Self> {
        if !(2..=16).contains(&m) {
            return Err(Error::param(format!("bit levels m = {m} must lie in 2..=16")));
        }
        let quarter = 1usize << (m - 2);
        let num_distinct = probs.len();
        if num_distinct == 0 || num_distinct > quarter || quarter % num_distinct != 0 {
            return Err(Error::param(format!(
                "P = {num_distinct} must divide M/4 = {quarter}"
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::param(format!("probability {bad} is outside [0, 1]")));
        }
        Ok(Self { m, num_distinct, probs })
    }

    /// Every sign bit equiprobable: the unshaped case.
    pub fn uniform(m: u32, num_distinct: usize) -> Result<Self> {
        Self::new(m, vec![0.5; num_distinct])
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m
    }

    pub fn num_distinct(&self) -> usize {
        self.num_distinct
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn constellation_size(&self) -> usize {
        1 << self.m
    }

    /// Number of adjacent per-symbol parameters sharing one source,
    /// `M / (4P)`.
    pub fn group_size(&self) -> usize {
        self.constellation_size() / (4 * self.num_distinct)
    }

    /// Source (1-based) serving the per-symbol index `j` in `1..=M/4`.
    fn source_for(&self, j: usize) -> usize {
        (j - 1) / self.group_size() + 1
    }

    pub fn with_probs(&self, probs: Vec<f64>) -> Result<Self> {
        Self::new(self.m, probs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Probabilities over the constellation together with the average energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolDistribution {
    probabilities: Vec<f64>,
    average_energy: f64,
}

impl SymbolDistribution {
    pub fn new(probabilities: Vec<f64>, constellation: &Constellation) -> Result<Self> {
        if probabilities.len() != constellation.size() {
            return Err(Error::param(format!(
                "{} probabilities for a {}-point constellation",
                probabilities.len(),
                constellation.size()
            )));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::param("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::param(format!("probabilities sum to {total}, not 1")));
        }
        let average_energy = probabilities
            .iter()
            .zip(constellation.symbols())
            .map(|(p, &x)| p * f64::from(x) * f64::from(x))
            .sum();
        Ok(Self { probabilities, average_energy })
    }

    pub fn uniform(constellation: &Constellation) -> Self {
        let size = constellation.size();
        Self::new(vec![1.0 / size as f64; size], constellation).expect("uniform is normalized")
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `E[X^2]` in squared symbol units.
    pub fn average_energy(&self) -> f64 {
        self.average_energy
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Symbol distribution induced by a profile. The negative half is filled
/// from the profile and the positive half is its exact mirror image.
pub fn induced_distribution(profile: &ShapingProfile) -> SymbolDistribution {
    let size = profile.constellation_size();
    let half = size / 2;
    let quarter = size / 4;
    let scale = 0.5f64.powi(profile.m as i32 - 1);

    let negative: Vec<f64> = (1..=half)
        .map(|i| {
            if i <= quarter {
                profile.probs[profile.source_for(i) - 1]
            } else {
                1.0 - profile.probs[profile.source_for(half - i + 1) - 1]
            }
        })
        .map(|p| p * scale)
        .collect();

    let mut probabilities = negative.clone();
    probabilities.extend(negative.iter().rev());

    let constellation = Constellation::alphabet(profile.m);
    SymbolDistribution::new(probabilities, &constellation)
        .expect("profile distributions are normalized by construction")
}

/// Output of the switch for one symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceChoice {
    /// 1-based source index.
    pub source: usize,
    pub flip: bool,
}

impl SourceChoice {
    /// Sign bit `b_m` for a source bit, where `true` marks the outer symbol.
    pub fn sign_bit(self, outer: bool) -> bool {
        // the raw source bit is 0 with probability p, i.e. raw = !outer
        !outer ^ self.flip
    }

    /// Inverse of [`SourceChoice::sign_bit`].
    pub fn source_bit(self, sign_bit: bool) -> bool {
        !(sign_bit ^ self.flip)
    }
}

/// Switch rule for the `m - 1` unshaped prefix bits of one symbol.
pub fn select_source(prefix_bits: &[bool], profile: &ShapingProfile) -> Result<SourceChoice> {
    let expected = profile.m as usize - 1;
    if prefix_bits.len() != expected {
        return Err(Error::param(format!(
            "prefix has {} bits, expected {expected}",
            prefix_bits.len()
        )));
    }
    Ok(select_source_for_value(decimal_value(prefix_bits) as usize, profile))
}

/// Switch rule keyed by the prefix's decimal value `d` in `0..M/2`.
pub fn select_source_for_value(d: usize, profile: &ShapingProfile) -> SourceChoice {
    let size = profile.constellation_size();
    let quarter = size / 4;
    debug_assert!(d < size / 2);
    let (j, flip) = if d < quarter { (d + 1, false) } else { (size / 2 - d, true) };
    SourceChoice { source: profile.source_for(j), flip }
}
