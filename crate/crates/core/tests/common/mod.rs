//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use num_bigint::BigUint;

/// Orthonormal Hermite value `p_n(z)` and its derivative.
fn hermite(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j - 1) as f64 / j as f64).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Gauss-Hermite nodes and weights for `int exp(-t^2) f(t) dt`. Roots are
/// bracketed on a fine grid, then polished by Newton steps.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let reach = (2.0 * n as f64 + 1.0).sqrt();
    let step = 1e-3;
    let mut positive = Vec::new();
    let mut a = if n % 2 == 1 { step / 2.0 } else { 0.0 };
    let mut fa = hermite(n, a).0;
    while a < reach {
        let b = a + step;
        let fb = hermite(n, b).0;
        if fa * fb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hermite(n, lo).0 * hermite(n, mid).0 <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut z = 0.5 * (lo + hi);
            for _ in 0..3 {
                let (p, dp) = hermite(n, z);
                z -= p / dp;
            }
            positive.push(z);
        }
        a = b;
        fa = fb;
    }
    let mut nodes: Vec<f64> = positive.iter().map(|z| -z).collect();
    if n % 2 == 1 {
        nodes.push(0.0);
    }
    nodes.extend(&positive);
    nodes.sort_by(f64::total_cmp);
    assert_eq!(nodes.len(), n, "missed Hermite roots");
    let weights = nodes
        .iter()
        .map(|&z| {
            let dp = hermite(n, z).1;
            2.0 / (dp * dp)
        })
        .collect();
    (nodes, weights)
}

/// Mutual information of a discrete input on the real AWGN channel by
/// Gauss-Hermite quadrature of each conditional output density.
pub fn mi_gauss_hermite(probs: &[f64], symbols: &[f64], sigma: f64, nodes: usize) -> f64 {
    let (t, w) = gauss_hermite(nodes);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut total = 0.0;
    for (i, &px) in probs.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let mut expectation = 0.0;
        for (tk, wk) in t.iter().zip(&w) {
            let z = std::f64::consts::SQRT_2 * sigma * tk;
            let exponents: Vec<f64> = symbols
                .iter()
                .zip(probs)
                .filter(|(_, &q)| q > 0.0)
                .map(|(&xj, &q)| {
                    let d = symbols[i] - xj;
                    q.ln() - (d * d + 2.0 * d * z) / (2.0 * sigma * sigma)
                })
                .collect();
            let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + exponents.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
            expectation += wk * lse;
        }
        total -= px * expectation / sqrt_pi;
    }
    total / std::f64::consts::LN_2
}

/// Binomial coefficient by building Pascal's triangle row by row.
pub fn pascal_binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut row = vec![BigUint::from(1u32)];
    for r in 1..=n {
        let width = (r + 1).min(k + 1);
        let mut next = Vec::with_capacity(width);
        for j in 0..width {
            let left = if j > 0 { row[j - 1].clone() } else { BigUint::from(0u32) };
            let right = row.get(j).cloned().unwrap_or_default();
            next.push(left + right);
        }
        row = next;
    }
    row[k].clone()
}

/// Rank of a fixed-weight word by counting, for each one, the words that
/// agree on the prefix and carry a zero there.
pub fn brute_rank(bits: &[bool]) -> BigUint {
    let n = bits.len();
    let mut remaining: usize = bits.iter().filter(|&&b| b).count();
    let mut rank = BigUint::from(0u32);
    for (k, &b) in bits.iter().enumerate() {
        if b {
            rank += pascal_binomial(n - k - 1, remaining);
            remaining -= 1;
        }
    }
    rank
}
