//! Enumerative fixed-weight binary distribution matcher.
//!
//! A length-`n` word `c` of weight `w` is indexed by
//! `i(c) = sum_k c_k * C(n - k, w_k)`, where `w_k` is the weight of the
//! suffix `(c_k, ..., c_n)`. Decoding an index walks Pascal's triangle in
//! `w` steps, each locating the next one with a binary search over cached
//! binomials. All arithmetic is exact.
//!
//! Bit value `1` is the rare symbol: a matcher for parameter `p` emits words
//! with `w = round(n p)` ones.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

static ZERO: BigUint = BigUint::ZERO;

/// Exact binomial coefficient, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// `floor(log2(x))` for `x > 0`.
fn floor_log2(x: &BigUint) -> usize {
    debug_assert!(!x.is_zero());
    x.bits() as usize - 1
}

/// `round(n p)` with ties rounded up.
pub fn weight_for(n: usize, p: f64) -> usize {
    (n as f64 * p + 0.5).floor() as usize
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Pascal's triangle restricted to the band visited by rank and unrank.
///
/// Row `t` (remaining weight, `1..=w`) stores `C(t - 1 + i, t)` for
/// `i in 0..=n - w + 1`.
#[derive(Clone, Debug)]
struct BinomialTable {
    rows: Vec<Vec<BigUint>>,
}

impl BinomialTable {
    fn new(n: usize, w: usize) -> Self {
        let width = n - w + 2;
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(w);
        for t in 1..=w {
            let mut row = Vec::with_capacity(width);
            row.push(BigUint::zero());
            for i in 1..width {
                // C(j, t) = C(j - 1, t) + C(j - 1, t - 1)
                let above = if t == 1 { BigUint::one() } else { rows[t - 2][i].clone() };
                let next = &row[i - 1] + above;
                row.push(next);
            }
            rows.push(row);
        }
        Self { rows }
    }

    fn get(&self, j: usize, t: usize) -> &BigUint {
        if t == 0 {
            unreachable!("weight-zero binomials are never looked up");
        }
        if j + 1 < t {
            return &ZERO;
        }
        &self.rows[t - 1][j + 1 - t]
    }

    fn heap_bytes(&self) -> usize {
        self.rows
            .iter()
            .flatten()
            .map(|v| v.bits().div_ceil(8) as usize)
            .sum()
    }
}

/// Parameters of one fixed-weight matcher with its cached binomials.
#[derive(Clone, Debug)]
pub struct DmCode {
    n: usize,
    w: usize,
    k: usize,
    total: BigUint,
    table: BinomialTable,
}

impl DmCode {
    pub fn new(n: usize, w: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("block length must be at least 1"));
        }
        if w > n {
            return Err(Error::param(format!("weight {w} exceeds block length {n}")));
        }
        let table = BinomialTable::new(n, w);
        let total = if w == 0 { BigUint::one() } else { table.get(n, w).clone() };
        let k = floor_log2(&total);
        Ok(Self { n, w, k, total, table })
    }

    /// Matcher for a target one-probability `p`, with `w = round(n p)`.
    pub fn for_probability(n: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("probability {p} outside [0, 1]")));
        }
        Self::new(n, weight_for(n, p))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> usize {
        self.w
    }

    /// Number of uniform input bits, `floor(log2 C(n, w))`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `C(n, w)`.
    pub fn num_words(&self) -> &BigUint {
        &self.total
    }

    /// Achieved rate `k / n` in bits per output bit.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Approximate heap footprint of the binomial cache.
    pub fn table_bytes(&self) -> usize {
        self.table.heap_bytes()
    }

    pub fn rank(&self, word: &FixedWeightWord) -> Result<Index> {
        self.check_word(word)?;
        let mut remaining = self.w;
        let mut index = BigUint::zero();
        for (pos, &bit) in word.bits.iter().enumerate() {
            if bit {
                index += self.table.get(self.n - pos - 1, remaining);
                remaining -= 1;
            }
        }
        Ok(Index(index))
    }

    pub fn unrank(&self, index: &Index) -> Result<FixedWeightWord> {
        self.unrank_counted(index).map(|(word, _)| word)
    }

    /// Unrank while counting the walk's steps and binary-search comparisons.
    pub fn unrank_counted(&self, index: &Index) -> Result<(FixedWeightWord, UnrankStats)> {
        if index.0 >= self.total {
            return Err(Error::IndexOutOfRange { n: self.n, w: self.w });
        }
        let mut bits = vec![false; self.n];
        let mut stats = UnrankStats::default();
        let mut remainder = index.0.clone();
        let mut upper = self.n;
        for t in (1..=self.w).rev() {
            // largest j < upper with C(j, t) <= remainder; C(t - 1, t) = 0
            let mut lo = t - 1;
            let mut hi = upper - 1;
            while lo < hi {
                let mid = lo + (hi - lo).div_ceil(2);
                stats.comparisons += 1;
                if *self.table.get(mid, t) <= remainder {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            remainder -= self.table.get(lo, t);
            bits[self.n - lo - 1] = true;
            upper = lo;
            stats.steps += 1;
        }
        debug_assert!(remainder.is_zero());
        Ok((FixedWeightWord { bits }, stats))
    }

    /// Maps `k` uniform bits (most significant first) to a codeword.
    pub fn encode(&self, info_bits: &[bool]) -> Result<FixedWeightWord> {
        if info_bits.len() != self.k {
            return Err(Error::param(format!(
                "matcher takes {} input bits, got {}",
                self.k,
                info_bits.len()
            )));
        }
        self.unrank(&Index(bits_to_biguint(info_bits)))
    }

    /// Inverse of [`DmCode::encode`].
    pub fn decode(&self, word: &FixedWeightWord) -> Result<Vec<bool>> {
        let index = self.rank(word)?;
        if index.0.bits() as usize > self.k {
            return Err(Error::OutOfCodebook { k: self.k });
        }
        Ok(biguint_to_bits(&index.0, self.k))
    }

    fn check_word(&self, word: &FixedWeightWord) -> Result<()> {
        if word.len() != self.n {
            return Err(Error::param(format!(
                "word has length {}, code length is {}",
                word.len(),
                self.n
            )));
        }
        let found = word.weight();
        if found != self.w {
            return Err(Error::Weight { expected: self.w, found });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct UnrankStats {
    /// One-locating steps, always equal to the weight.
    pub steps: usize,
    pub comparisons: usize,
}

/// Position of a word in the enumeration, `0 <= value < C(n, w)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Index(pub BigUint);

impl Index {
    /// Reads `bits` most significant first.
    pub fn from_bits(bits: &[bool]) -> Self {
        Index(bits_to_biguint(bits))
    }
}

impl From<u64> for Index {
    fn from(v: u64) -> Self {
        Index(BigUint::from(v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FixedWeightWord {
    bits: Vec<bool>,
}

impl FixedWeightWord {
    /// Wraps raw bits; the weight is checked against a code on use.
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

fn bits_to_biguint(bits: &[bool]) -> BigUint {
    if bits.is_empty() {
        return BigUint::zero();
    }
    let digits: Vec<u8> = bits.iter().map(|&b| b as u8).collect();
    BigUint::from_radix_be(&digits, 2).expect("binary digits")
}

fn biguint_to_bits(value: &BigUint, len: usize) -> Vec<bool> {
    let mut bits = vec![false; len];
    let used = value.bits() as usize;
    debug_assert!(used <= len);
    for i in 0..used {
        bits[len - 1 - i] = value.bit(i as u64);
    }
    bits
}

fn check_rate_args(n: usize, p: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::param("block length must be at least 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("p = {p} must lie strictly between 0 and 1")));
    }
    let w = weight_for(n, p);
    if w == 0 {
        return Err(Error::param(format!("round(n p) = 0 for n = {n}, p = {p}")));
    }
    Ok(w)
}

/// Finite-length rate loss `H(p) - floor(log2 C(n, w)) / n` in bits per
/// output bit.
pub fn rate_loss(n: usize, p: f64) -> Result<f64> {
    let w = check_rate_args(n, p)?;
    let k = floor_log2(&binomial(n, w));
    Ok(binary_entropy(p) - k as f64 / n as f64)
}

/// Worst-case comparisons per output bit, `p log2(n)`.
pub fn dm_complexity_bound(n: usize, p: f64) -> f64 {
    if p <= 0.0 || n <= 1 {
        return 0.0;
    }
    p * (n as f64).log2()
}

/// Per-symbol cost of two length-`n/2` matchers used alternately:
/// `(p1/2 + p2/2) log2(n/2)`.
pub fn pair_complexity_bound(n: usize, p1: f64, p2: f64) -> f64 {
    0.5 * (dm_complexity_bound(n / 2, p1) + dm_complexity_bound(n / 2, p2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(bits: &[u8]) -> FixedWeightWord {
        FixedWeightWord::from_bits(bits.iter().map(|&b| b == 1).collect())
    }

    /// All weight-`w` words of length `n` in lexicographic order of bits.
    fn all_words(n: usize, w: usize) -> Vec<FixedWeightWord> {
        (0u32..(1 << n))
            .filter(|v| v.count_ones() as usize == w)
            .map(|v| FixedWeightWord::from_bits((0..n).rev().map(|i| (v >> i) & 1 == 1).collect()))
            .collect()
    }

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        for n in 0..=64 {
            assert_eq!(binomial(n, 0), BigUint::one());
            assert_eq!(binomial(n, n), BigUint::one());
        }
    }

    #[test]
    fn table_agrees_with_direct_binomials() {
        let code = DmCode::new(40, 9).unwrap();
        for t in 1..=9 {
            for j in (t - 1)..=(40 - 9 + t) {
                assert_eq!(code.table.get(j, t), &binomial(j, t), "C({j},{t})");
            }
        }
        assert_eq!(code.num_words(), &binomial(40, 9));
    }

    #[test]
    fn k_bounds() {
        for (n, w) in [(4, 2), (16, 4), (1024, 41), (1024, 246), (7, 0), (5, 5)] {
            let code = DmCode::new(n, w).unwrap();
            let two_k = BigUint::one() << code.k();
            assert!(two_k <= *code.num_words());
            assert!(*code.num_words() < two_k << 1);
        }
    }

    #[test]
    fn rank_examples() {
        let code = DmCode::new(4, 2).unwrap();
        assert_eq!(code.rank(&word(&[0, 0, 1, 1])).unwrap(), Index::from(0));
        assert_eq!(code.rank(&word(&[1, 1, 0, 0])).unwrap(), Index::from(5));
        let mut ranks: Vec<u64> = all_words(4, 2)
            .iter()
            .map(|c| u64::try_from(&code.rank(c).unwrap().0).unwrap())
            .collect();
        ranks.sort();
        assert_eq!(ranks, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn rank_rejects_wrong_weight() {
        let code = DmCode::new(4, 2).unwrap();
        assert!(matches!(
            code.rank(&word(&[1, 1, 1, 0])),
            Err(Error::Weight { expected: 2, found: 3 })
        ));
        assert!(matches!(code.rank(&word(&[1, 1, 0])), Err(Error::Parameter(_))));
    }

    #[test]
    fn unrank_extremes() {
        for (n, w) in [(6, 3), (10, 1), (9, 4)] {
            let code = DmCode::new(n, w).unwrap();
            let low = code.unrank(&Index::from(0)).unwrap();
            assert!(low.bits()[..n - w].iter().all(|&b| !b));
            assert!(low.bits()[n - w..].iter().all(|&b| b));
        }
        let code = DmCode::new(6, 3).unwrap();
        let top = Index(code.num_words() - 1u32);
        assert_eq!(code.unrank(&top).unwrap(), word(&[1, 1, 1, 0, 0, 0]));
        // the enumeration oracle agrees on which word is last
        let last = all_words(6, 3)
            .into_iter()
            .max_by_key(|c| code.rank(c).unwrap())
            .unwrap();
        assert_eq!(last, word(&[1, 1, 1, 0, 0, 0]));
    }

    #[test]
    fn unrank_rejects_out_of_range() {
        let code = DmCode::new(4, 2).unwrap();
        assert!(matches!(
            code.unrank(&Index::from(6)),
            Err(Error::IndexOutOfRange { n: 4, w: 2 })
        ));
    }

    #[test]
    fn exhaustive_round_trip_small() {
        for n in 1..=12 {
            for w in 0..=n {
                let code = DmCode::new(n, w).unwrap();
                let count = u64::try_from(code.num_words()).unwrap();
                for i in 0..count {
                    let (c, stats) = code.unrank_counted(&Index::from(i)).unwrap();
                    assert_eq!(c.weight(), w);
                    assert_eq!(stats.steps, w);
                    assert_eq!(code.rank(&c).unwrap(), Index::from(i));
                }
            }
        }
    }

    #[test]
    fn rank_order_is_lexicographic() {
        // reading the word as a binary number, first bit most significant,
        // orders it the same way as its index
        for n in 1..=12 {
            for w in 0..=n {
                let code = DmCode::new(n, w).unwrap();
                let mut words = all_words(n, w);
                words.sort_by_key(|c| {
                    c.bits().iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << (n - 1 - i)))
                });
                let ranks: Vec<Index> = words.iter().map(|c| code.rank(c).unwrap()).collect();
                assert!(ranks.windows(2).all(|p| p[0] < p[1]), "n={n} w={w}");
            }
        }
    }

    #[test]
    fn encode_extremes_and_decode_codebook() {
        let code = DmCode::new(4, 2).unwrap();
        assert_eq!(code.k(), 2);
        assert_eq!(code.encode(&[false, false]).unwrap(), code.unrank(&Index::from(0)).unwrap());
        let top = code.encode(&[true, true]).unwrap();
        assert_eq!(top, code.unrank(&Index::from(3)).unwrap());
        assert_eq!(top.weight(), 2);
        assert_eq!(code.decode(&top).unwrap(), vec![true, true]);
        assert!(matches!(code.decode(&word(&[1, 1, 0, 0])), Err(Error::OutOfCodebook { k: 2 })));
        assert!(code.encode(&[true]).is_err());
    }

    #[test]
    fn decode_defined_exactly_on_lowest_ranks() {
        let code = DmCode::new(16, 4).unwrap();
        let limit = 1u64 << code.k();
        let mut accepted = 0u64;
        for c in all_words(16, 4) {
            let r = u64::try_from(&code.rank(&c).unwrap().0).unwrap();
            match code.decode(&c) {
                Ok(bits) => {
                    assert!(r < limit);
                    assert_eq!(code.encode(&bits).unwrap(), c);
                    accepted += 1;
                }
                Err(Error::OutOfCodebook { .. }) => assert!(r >= limit),
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(accepted, limit);
    }

    #[test]
    fn zero_weight_code() {
        let code = DmCode::new(8, 0).unwrap();
        assert_eq!(code.k(), 0);
        let c = code.encode(&[]).unwrap();
        assert_eq!(c.weight(), 0);
        assert_eq!(code.decode(&c).unwrap(), Vec::<bool>::new());
    }

    #[test]
    fn weight_rounding_ties_up() {
        assert_eq!(weight_for(10, 0.25), 3);
        assert_eq!(weight_for(1024, 0.04), 41);
        assert_eq!(weight_for(1024, 0.24), 246);
        assert_eq!(weight_for(800, 0.14), 112);
    }

    #[test]
    fn rate_loss_behaviour() {
        let small = rate_loss(100, 0.5).unwrap();
        let large = rate_loss(4000, 0.5).unwrap();
        assert!(large < small && large > 0.0);
        // Stirling residual (log2 n)/(2n) sets the scale
        let residual = (4000f64).log2() / (2.0 * 4000.0);
        assert!(large < 2.0 * residual);
        assert!(rate_loss(10, 0.01).is_err());
        assert!(rate_loss(10, 0.0).is_err());
        assert!(rate_loss(0, 0.5).is_err());
    }

    #[test]
    fn complexity_bounds() {
        assert_eq!(dm_complexity_bound(1024, 0.0), 0.0);
        assert!((dm_complexity_bound(1024, 0.04) - 0.4).abs() < 1e-12);
        let pair = pair_complexity_bound(2048, 0.04, 0.24);
        assert!((pair - 0.14 * 1024f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn table_footprint_is_reported() {
        let code = DmCode::new(1024, 41).unwrap();
        assert!(code.table_bytes() > 0);
    }
}
