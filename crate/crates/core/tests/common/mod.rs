//! Brute-force enumeration oracles shared by the integration tests.
//!
//! Everything here is deliberately independent of the library's recursion
//! machinery: plain linear-domain arithmetic over explicitly enumerated
//! compositions and set partitions, exact integer arithmetic for Stirling
//! numbers. Feasible only for small `N`, which is the point.

#![allow(dead_code)]

use mixprior_core::priors::{ModelClass, ModelSpec};

/// All ordered compositions of `n` into `k` positive parts.
pub fn compositions(n: u32, k: u32) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, parts_left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts_left == 1 {
            let mut c = prefix.clone();
            c.push(remaining);
            out.push(c);
            return;
        }
        for first in 1..=(remaining - parts_left + 1) {
            prefix.push(first);
            rec(remaining - first, parts_left - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k >= 1 && k <= n {
        rec(n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Block sizes (in first-appearance order) of every set partition of
/// `{0, …, n-1}`, enumerated through restricted growth strings.
pub fn set_partition_sizes(n: u32) -> Vec<Vec<u32>> {
    fn rec(i: u32, n: u32, sizes: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n {
            out.push(sizes.clone());
            return;
        }
        for b in 0..sizes.len() {
            sizes[b] += 1;
            rec(i + 1, n, sizes, out);
            sizes[b] -= 1;
        }
        sizes.push(1);
        rec(i + 1, n, sizes, out);
        sizes.pop();
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

/// Unsigned Stirling numbers of the first kind `|s(n, k)|` for
/// `0 <= k <= n <= n_max`, by the exact integer triangular recurrence
/// `|s(n+1, k)| = |s(n, k-1)| + n·|s(n, k)|`.
pub fn stirling_first_triangle(n_max: u32) -> Vec<Vec<u128>> {
    let mut tri: Vec<Vec<u128>> = vec![vec![1]];
    for n in 1..=n_max {
        let prev = &tri[(n - 1) as usize];
        let mut row = vec![0u128; (n + 1) as usize];
        for k in 1..=n {
            let carry = if k < n { prev[k as usize] } else { 0 };
            row[k as usize] = prev[(k - 1) as usize] + (n as u128 - 1) * carry;
        }
        tri.push(row);
    }
    tri
}

/// Linear-domain per-size weight for a given Dirichlet parameter, or the
/// Dirichlet process harmonic weight.
#[derive(Clone, Copy)]
pub enum OracleWeight {
    Gamma(f64),
    Dpm,
}

impl OracleWeight {
    pub fn w(self, n: u32) -> f64 {
        match self {
            OracleWeight::Gamma(g) => {
                libm::exp(libm::lgamma(n as f64 + g) - libm::lgamma(n as f64 + 1.0))
            }
            OracleWeight::Dpm => 1.0 / n as f64,
        }
    }
}

/// `C[n, k]` by direct enumeration: `Σ Π w(n_j)` over compositions.
pub fn brute_c(n: u32, k: u32, weight: OracleWeight) -> f64 {
    compositions(n, k)
        .iter()
        .map(|c| c.iter().map(|&p| weight.w(p)).product::<f64>())
        .sum()
}

/// The conditional prior of the labelled cluster sizes given `K+ = k`, as an
/// explicit (composition, probability) list summing to one.
///
/// The mixture over `K` for dynamic specs is summed directly to `k_big`,
/// chosen large enough that the BNB tail is far below the oracle tolerance.
pub fn oracle_conditional_distribution(spec: &ModelSpec, k: u32) -> Vec<(Vec<u32>, f64)> {
    let n = spec.n();
    let comps = compositions(n, k);
    let raw: Vec<f64> = match spec.class() {
        ModelClass::Dpm { .. } => comps
            .iter()
            .map(|c| c.iter().map(|&p| OracleWeight::Dpm.w(p)).product())
            .collect(),
        ModelClass::StaticMfm { gamma } => comps
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&p| OracleWeight::Gamma(gamma).w(p))
                    .product()
            })
            .collect(),
        ModelClass::DynamicMfm { alpha } => {
            // Direct summation to a depth where any admissible prior tail is
            // negligible against the 1e-9 oracle tolerances.
            let k_big = 3000u32;
            let mut acc = vec![0.0f64; comps.len()];
            for big_k in k..=k_big {
                let log_p = spec.prior_k().log_pmf(big_k);
                if log_p == f64::NEG_INFINITY {
                    continue;
                }
                let gamma_k = alpha / big_k as f64;
                // w̃ in the published dynamic form: p(K)·K!/((K-k)!·K^k·Γ(1+γ_K)^k)
                let ln_w = log_p + libm::lgamma(big_k as f64 + 1.0)
                    - libm::lgamma((big_k - k) as f64 + 1.0)
                    - k as f64 * libm::log(big_k as f64)
                    - k as f64 * libm::lgamma(1.0 + gamma_k);
                let w = libm::exp(ln_w);
                let w_table: Vec<f64> = (1..=n).map(|m| OracleWeight::Gamma(gamma_k).w(m)).collect();
                for (i, c) in comps.iter().enumerate() {
                    let prod: f64 = c.iter().map(|&p| w_table[(p - 1) as usize]).product();
                    acc[i] += w * prod;
                }
            }
            acc
        }
    };
    let total: f64 = raw.iter().sum();
    comps
        .into_iter()
        .zip(raw.into_iter().map(|v| v / total))
        .collect()
}

/// Mean and variance of `Ψ = Σ ψ(N_j)` under an explicit conditional
/// distribution.
pub fn oracle_functional_mean_var(
    dist: &[(Vec<u32>, f64)],
    psi: impl Fn(u32) -> f64,
) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (comp, p) in dist {
        let v: f64 = comp.iter().map(|&s| psi(s)).sum();
        mean += p * v;
        second += p * v * v;
    }
    (mean, second - mean * mean)
}

/// Marginal pmf of the last cluster size under an explicit conditional
/// distribution (exchangeable, so any coordinate works).
pub fn oracle_marginal(dist: &[(Vec<u32>, f64)], n: u32, k: u32) -> Vec<f64> {
    let mut probs = vec![0.0f64; (n - k + 1) as usize];
    for (comp, p) in dist {
        probs[(comp[comp.len() - 1] - 1) as usize] += p;
    }
    probs
}

/// Relative entropy of a composition, with the one-cluster convention 0.
pub fn oracle_relative_entropy(comp: &[u32]) -> f64 {
    let k = comp.len();
    if k <= 1 {
        return 0.0;
    }
    let n: u32 = comp.iter().sum();
    let nf = n as f64;
    let sum_psi: f64 = comp
        .iter()
        .map(|&s| s as f64 * libm::log(s as f64))
        .sum();
    (libm::log(nf) - sum_psi / nf) / libm::log(k as f64)
}

/// Mean and variance of the relative entropy under an explicit conditional
/// distribution.
pub fn oracle_entropy_mean_var(dist: &[(Vec<u32>, f64)]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (comp, p) in dist {
        let v = oracle_relative_entropy(comp);
        mean += p * v;
        second += p * v * v;
    }
    (mean, second - mean * mean)
}
