//! The induced prior on the number of data clusters `K+`.
//!
//! For a mixture with prior `p(K)` and Dirichlet sequence `γ_K`, the number
//! of *filled* components among `N` observations has prior
//!
//! ```text
//! P(K+ = k) = N!/k! · Σ_{K ≥ k} p(K) · V[N,k|K,γ_K]/Γ(γ_K)^k · C[N,k|γ_K]
//! ```
//!
//! evaluated in the log domain with the sum over `K` truncated under the
//! spec's policy. The missing mass is reported, never hidden: the pmf is
//! returned unrenormalized and summaries renormalize explicitly.

use alloc::vec;
use alloc::vec::Vec;

use crate::logspace::{exp, ln, ln_gamma, sqrt, LogSumAcc, LOG_ZERO};
use crate::priors::{ModelClass, ModelSpec};
use crate::recursion::{log_v_from_base, neg_k_ln_gamma_gamma, CTable, SizeWeighting};
use crate::{Coverage, Error, Result};

/// The (possibly truncated) prior pmf of the number of data clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct KPlusPmf {
    n: u32,
    probs: Vec<f64>,
    covered_mass: f64,
    coverage: Coverage,
}

impl KPlusPmf {
    /// `P(K+ = k)`, `1 <= k <= N`.
    pub fn prob(&self, k: u32) -> f64 {
        self.probs[(k - 1) as usize]
    }

    /// The raw pmf values for `k = 1..=N`, unrenormalized.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Total mass captured by the truncated computation, `Σ_k P(K+ = k)`.
    /// Equals the covered mass of the prior on `K` up to rounding.
    pub fn covered_mass(&self) -> f64 {
        self.covered_mass
    }

    pub fn coverage(&self) -> Coverage {
        self.coverage
    }

    /// True when the covered mass fell below the policy's warn threshold.
    pub fn truncation_warning(&self) -> bool {
        self.coverage.warned
    }

    /// Mean, standard deviation, `q`-quantile and homogeneity probability of
    /// the pmf, renormalized by the covered mass.
    ///
    /// The quantile is the left-continuous generalized inverse: the smallest
    /// `k` whose renormalized CDF reaches `q`. Errors when less than half the
    /// mass was covered — summaries of the remainder would be meaningless.
    pub fn summaries(&self, q: f64) -> Result<KPlusSummary> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(alloc::format!(
                "quantile level {q} outside (0, 1)"
            )));
        }
        let total = self.covered_mass;
        if total < 0.5 {
            return Err(Error::InsufficientCoverage { covered: total });
        }
        let mut mean = 0.0;
        let mut second = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            let k = (i + 1) as f64;
            mean += k * p;
            second += k * k * p;
        }
        mean /= total;
        second /= total;
        let sd = sqrt((second - mean * mean).max(0.0));
        let mut quantile = self.n;
        let mut cum = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            cum += p;
            if cum / total >= q {
                quantile = (i + 1) as u32;
                break;
            }
        }
        Ok(KPlusSummary {
            mean,
            sd,
            quantile,
            p_homogeneity: self.probs[0] / total,
        })
    }
}

/// Summary statistics of a [`KPlusPmf`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KPlusSummary {
    pub mean: f64,
    pub sd: f64,
    pub quantile: u32,
    /// `P(K+ = 1)`: the prior weight on "no cluster structure".
    pub p_homogeneity: f64,
}

/// Prior of the number of data clusters for any model spec.
pub fn kplus_pmf(spec: &ModelSpec) -> Result<KPlusPmf> {
    match spec.class() {
        ModelClass::Dpm { alpha } => kplus_pmf_dpm(spec.n(), alpha),
        ModelClass::StaticMfm { gamma } => kplus_pmf_static(spec, gamma),
        ModelClass::DynamicMfm { alpha } => kplus_pmf_dynamic(spec, alpha),
    }
}

/// Dirichlet process case: `P(K+ = k) = N!/k! · α^k Γ(α)/Γ(α+N) · C∞[N,k]`.
/// No truncation over `K` is involved.
pub fn kplus_pmf_dpm(n: u32, alpha: f64) -> Result<KPlusPmf> {
    if n < 1 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain("alpha must be positive".into()));
    }
    let table = CTable::build(n, SizeWeighting::Dpm, n)?;
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    let ln_alpha = ln(alpha);
    let ewens_norm = ln_gamma(alpha) - ln_gamma(alpha + n as f64);
    let probs: Vec<f64> = (1..=n)
        .map(|k| {
            exp(ln_n_fact - ln_gamma(k as f64 + 1.0)
                + k as f64 * ln_alpha
                + ewens_norm
                + table.log_c_top(k))
        })
        .collect();
    let covered: f64 = probs.iter().sum();
    Ok(KPlusPmf {
        n,
        probs,
        covered_mass: covered.min(1.0),
        coverage: Coverage::exact(),
    })
}

fn kplus_pmf_static(spec: &ModelSpec, gamma: f64) -> Result<KPlusPmf> {
    let n = spec.n();
    let policy = spec.truncation();
    let (k_max, prior_mass) = spec.prior_k().truncation_bound(1, policy)?;
    let k_top = n.min(k_max);
    // One table serves every K: the composition sums do not depend on K for
    // a constant Dirichlet parameter.
    let table = CTable::build(n, SizeWeighting::Mfm { gamma }, k_top)?;
    let bases = v_bases_static(spec, gamma, k_max);
    let ln_n_fact = ln_gamma(n as f64 + 1.0);

    let mut probs = vec![0.0f64; n as usize];
    for k in 1..=k_top {
        let mut acc = LogSumAcc::new();
        for &(big_k, log_p, base) in &bases {
            if big_k >= k {
                acc.add(log_p + log_v_from_base(base, big_k, k));
            }
        }
        let log_sum_v = acc.total();
        if log_sum_v == LOG_ZERO {
            continue;
        }
        probs[(k - 1) as usize] = exp(ln_n_fact - ln_gamma(k as f64 + 1.0)
            + log_sum_v
            + neg_k_ln_gamma_gamma(k, gamma)
            + table.log_c_top(k));
    }
    finish_mfm_pmf(n, probs, k_max, prior_mass, policy.min_covered_mass_warn())
}

fn kplus_pmf_dynamic(spec: &ModelSpec, alpha: f64) -> Result<KPlusPmf> {
    let n = spec.n();
    let policy = spec.truncation();
    let (k_max, prior_mass) = spec.prior_k().truncation_bound(1, policy)?;
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    let ln_gamma_alpha = ln_gamma(alpha);
    let ln_gamma_alpha_n = ln_gamma(alpha + n as f64);

    // One table per K (γ_K varies), accumulated in ascending K order so the
    // reduction is deterministic.
    let mut accs = vec![LogSumAcc::new(); n as usize];
    for big_k in 1..=k_max {
        let log_p = spec.prior_k().log_pmf(big_k);
        if log_p == LOG_ZERO {
            continue;
        }
        let gamma_k = spec.gammas().gamma_at(big_k);
        // γ_K·K = α exactly for the dynamic sequence.
        let base = ln_gamma_alpha + ln_gamma(big_k as f64 + 1.0) - ln_gamma_alpha_n;
        let k_top = n.min(big_k);
        let table = CTable::build(n, SizeWeighting::Mfm { gamma: gamma_k }, k_top)?;
        let per_k = neg_k_ln_gamma_gamma(1, gamma_k);
        for k in 1..=k_top {
            accs[(k - 1) as usize].add(
                log_p
                    + log_v_from_base(base, big_k, k)
                    + k as f64 * per_k
                    + table.log_c_top(k),
            );
        }
    }
    let probs: Vec<f64> = accs
        .iter()
        .enumerate()
        .map(|(i, acc)| {
            let k = (i + 1) as f64;
            let s = acc.total();
            if s == LOG_ZERO {
                0.0
            } else {
                exp(ln_n_fact - ln_gamma(k + 1.0) + s)
            }
        })
        .collect();
    finish_mfm_pmf(n, probs, k_max, prior_mass, policy.min_covered_mass_warn())
}

fn finish_mfm_pmf(
    n: u32,
    probs: Vec<f64>,
    k_max: u32,
    prior_mass: f64,
    warn_below: f64,
) -> Result<KPlusPmf> {
    let covered: f64 = probs.iter().sum();
    let mut coverage = Coverage::truncated(k_max, prior_mass, warn_below);
    coverage.warned = covered < warn_below;
    Ok(KPlusPmf {
        n,
        probs,
        covered_mass: covered.min(1.0),
        coverage,
    })
}

/// Precompute `(K, ln p(K), base(K))` for a static mixture, where `base` is
/// the `k`-independent part of `ln V`.
fn v_bases_static(spec: &ModelSpec, gamma: f64, k_max: u32) -> Vec<(u32, f64, f64)> {
    let n = spec.n() as f64;
    (1..=k_max)
        .filter_map(|big_k| {
            let log_p = spec.prior_k().log_pmf(big_k);
            if log_p == LOG_ZERO {
                return None;
            }
            let gk = gamma * big_k as f64;
            let base = ln_gamma(gk) + ln_gamma(big_k as f64 + 1.0) - ln_gamma(gk + n);
            Some((big_k, log_p, base))
        })
        .collect()
}
