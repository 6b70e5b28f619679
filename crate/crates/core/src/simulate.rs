//! Seeded Monte Carlo oracle.
//!
//! Everything analytic in this crate can be checked by simulating partitions
//! from the generative model itself: draw `K` from its prior, component
//! weights from the symmetric Dirichlet, class assignments from the
//! resulting multinomial — or, for the Dirichlet process, seat observations
//! sequentially (exact; no truncation error).
//!
//! Reproducibility contract: the generator is ChaCha12 (`rand_chacha`),
//! seeded with `seed_from_u64`. Draw `d` of an estimation run uses stream
//! `d` of the master seed, so a run can be split across workers by draw
//! index and merged estimates never depend on the worker count.
//!
//! Dirichlet variates come from normalized Gamma draws. Dynamic mixtures
//! routinely need shapes `γ_K ≪ 1`, where plain Gamma samplers underflow to
//! zero; instead we use the boost identity `G(a) = G(a+1)·U^(1/a)` and keep
//! `ln G` — the shape+1 draw comes from `rand_distr` (Marsaglia–Tsang, valid
//! for shape ≥ 1) and the log never underflows.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Open01};

use crate::functionals::{Functional, StatTarget};
use crate::logspace::{exp, ln, sqrt};
use crate::priors::{ModelClass, ModelSpec};
use crate::{Error, Result};

/// Hard limit on rejection-sampling attempts.
pub const DEFAULT_DRAW_BUDGET: u64 = 100_000_000;

/// One simulated partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSample {
    /// Cluster label of each observation, relabelled in order of first
    /// appearance (labels `0..k_plus`).
    pub assignments: Vec<u32>,
    /// Number of data clusters (distinct labels).
    pub k_plus: u32,
    /// Cluster sizes, in label order.
    pub sizes: Vec<u32>,
}

impl PartitionSample {
    fn from_raw_labels(labels: &[u32]) -> Self {
        let mut map: Vec<(u32, u32)> = Vec::new(); // (raw label, compact label)
        let mut assignments = Vec::with_capacity(labels.len());
        let mut sizes: Vec<u32> = Vec::new();
        for &raw in labels {
            let compact = match map.iter().find(|(r, _)| *r == raw) {
                Some(&(_, c)) => c,
                None => {
                    let c = map.len() as u32;
                    map.push((raw, c));
                    sizes.push(0);
                    c
                }
            };
            assignments.push(compact);
            sizes[compact as usize] += 1;
        }
        PartitionSample {
            assignments,
            k_plus: sizes.len() as u32,
            sizes,
        }
    }

    /// Value of `Σ_j ψ(N_j)` on this partition.
    pub fn functional_value(&self, f: &Functional) -> f64 {
        self.sizes.iter().map(|&s| f.eval(s)).sum()
    }

    /// Relative entropy of the partition, with the one-cluster convention 0.
    pub fn relative_entropy(&self) -> f64 {
        let k = self.k_plus;
        if k <= 1 {
            return 0.0;
        }
        let n = self.assignments.len() as f64;
        let sum_psi: f64 = self.sizes.iter().map(|&s| s as f64 * ln(s as f64)).sum();
        (ln(n) - sum_psi / n) / ln(k as f64)
    }

    fn statistic(&self, target: StatTarget<'_>) -> f64 {
        match target {
            StatTarget::Functional(f) => self.functional_value(f),
            StatTarget::RelativeEntropy => self.relative_entropy(),
        }
    }
}

fn rng_for_draw(seed: u64, draw: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng
}

/// Simulate one partition (draw index 0 of the seed's stream family).
pub fn simulate_partition(spec: &ModelSpec, rng_seed: u64) -> PartitionSample {
    simulate_partition_at(spec, rng_seed, 0)
}

/// Simulate the partition with a given draw index; see the module docs for
/// the seed/stream contract.
pub fn simulate_partition_at(spec: &ModelSpec, rng_seed: u64, draw: u64) -> PartitionSample {
    let mut rng = rng_for_draw(rng_seed, draw);
    match spec.class() {
        ModelClass::Dpm { alpha } => simulate_crp(spec.n(), alpha, &mut rng),
        ModelClass::StaticMfm { .. } | ModelClass::DynamicMfm { .. } => {
            let big_k = sample_component_count(spec, &mut rng);
            let gamma_k = spec.gammas().gamma_at(big_k);
            simulate_finite(spec.n(), big_k, gamma_k, &mut rng)
        }
    }
}

/// Inverse-CDF walk over the prior on `K`.
fn sample_component_count(spec: &ModelSpec, rng: &mut ChaCha12Rng) -> u32 {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut k = 0u32;
    loop {
        k += 1;
        let p = exp(spec.prior_k().log_pmf(k));
        cum += p;
        if u < cum {
            return k;
        }
        // Deep-tail guard: once the pmf has numerically vanished past any
        // realistic support, stop walking.
        if p < 1e-300 && k > 10_000 {
            return k;
        }
        if let Some(hi) = spec.prior_k().upper_support() {
            if k >= hi {
                return hi;
            }
        }
    }
}

/// Finite mixture: symmetric Dirichlet weights (in the log domain) followed
/// by `N` categorical assignments.
fn simulate_finite(n: u32, big_k: u32, gamma_k: f64, rng: &mut ChaCha12Rng) -> PartitionSample {
    let boost = Gamma::new(gamma_k + 1.0, 1.0).expect("validated shape");
    let mut log_weights = Vec::with_capacity(big_k as usize);
    let mut max = f64::NEG_INFINITY;
    for _ in 0..big_k {
        let g: f64 = boost.sample(rng);
        let u: f64 = Open01.sample(rng);
        let lw = ln(g) + ln(u) / gamma_k;
        if lw > max {
            max = lw;
        }
        log_weights.push(lw);
    }
    // Normalize and build the cumulative distribution once.
    let mut cum = Vec::with_capacity(big_k as usize);
    let mut total = 0.0;
    for &lw in &log_weights {
        total += exp(lw - max);
        cum.push(total);
    }
    let labels: Vec<u32> = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            match cum.binary_search_by(|c| c.partial_cmp(&u).expect("finite")) {
                Ok(i) | Err(i) => (i as u32).min(big_k - 1),
            }
        })
        .collect();
    PartitionSample::from_raw_labels(&labels)
}

/// Dirichlet process: sequential seating, exact for any `α`.
fn simulate_crp(n: u32, alpha: f64, rng: &mut ChaCha12Rng) -> PartitionSample {
    let mut labels = Vec::with_capacity(n as usize);
    let mut sizes: Vec<u32> = Vec::new();
    for i in 0..n {
        let u: f64 = rng.random::<f64>() * (i as f64 + alpha);
        let mut cum = 0.0;
        let mut chosen = sizes.len() as u32;
        for (j, &s) in sizes.iter().enumerate() {
            cum += s as f64;
            if u < cum {
                chosen = j as u32;
                break;
            }
        }
        if chosen == sizes.len() as u32 {
            sizes.push(1);
        } else {
            sizes[chosen as usize] += 1;
        }
        labels.push(chosen);
    }
    PartitionSample::from_raw_labels(&labels)
}

/// Empirical pmf of `K+` with per-bin binomial standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPmf {
    n: u32,
    draws: u64,
    counts: Vec<u64>,
}

impl EmpiricalPmf {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn count(&self, k: u32) -> u64 {
        self.counts[(k - 1) as usize]
    }

    /// Relative frequency of `K+ = k`.
    pub fn freq(&self, k: u32) -> f64 {
        self.count(k) as f64 / self.draws as f64
    }

    /// Binomial standard error `sqrt(p̂(1-p̂)/draws)` of [`freq`](Self::freq).
    pub fn se(&self, k: u32) -> f64 {
        let p = self.freq(k);
        sqrt(p * (1.0 - p) / self.draws as f64)
    }
}

/// Estimate the `K+` pmf from `n_draws` simulated partitions. Deterministic
/// given the seed, regardless of how draws are split across workers.
pub fn estimate_kplus_pmf(spec: &ModelSpec, n_draws: u64, rng_seed: u64) -> Result<EmpiricalPmf> {
    if n_draws < 1 {
        return Err(Error::Domain("need at least one draw".into()));
    }
    let mut counts = vec![0u64; spec.n() as usize];
    for d in 0..n_draws {
        let s = simulate_partition_at(spec, rng_seed, d);
        counts[(s.k_plus - 1) as usize] += 1;
    }
    Ok(EmpiricalPmf {
        n: spec.n(),
        draws: n_draws,
        counts,
    })
}

/// Empirical moments of a statistic with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMoments {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub se_mean: f64,
    pub accepted: u64,
    pub attempted: u64,
}

/// Conditional moments of a partition statistic given `K+ = k`, by rejection
/// sampling: keep simulated partitions with exactly `k` data clusters until
/// `n_accepted` have been collected. [`DEFAULT_DRAW_BUDGET`] caps the total
/// attempts.
pub fn estimate_conditional_functional(
    spec: &ModelSpec,
    k: u32,
    target: StatTarget<'_>,
    n_accepted: u64,
    rng_seed: u64,
) -> Result<EmpiricalMoments> {
    estimate_conditional_with_budget(spec, k, target, n_accepted, rng_seed, DEFAULT_DRAW_BUDGET)
}

/// [`estimate_conditional_functional`] with an explicit attempt budget.
pub fn estimate_conditional_with_budget(
    spec: &ModelSpec,
    k: u32,
    target: StatTarget<'_>,
    n_accepted: u64,
    rng_seed: u64,
    budget: u64,
) -> Result<EmpiricalMoments> {
    if k < 1 || k > spec.n() {
        return Err(Error::KPlusTooLarge { k, n: spec.n() });
    }
    if n_accepted < 2 {
        return Err(Error::Domain("need at least two accepted draws".into()));
    }
    let mut accepted = 0u64;
    let mut attempted = 0u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    while accepted < n_accepted {
        if attempted >= budget {
            return Err(Error::BudgetExhausted { budget, accepted });
        }
        let s = simulate_partition_at(spec, rng_seed, attempted);
        attempted += 1;
        if s.k_plus != k {
            continue;
        }
        let x = s.statistic(target);
        sum += x;
        sum_sq += x * x;
        accepted += 1;
    }
    let nf = accepted as f64;
    let mean = sum / nf;
    let variance = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    Ok(EmpiricalMoments {
        mean,
        variance,
        se_mean: sqrt(variance / nf),
        accepted,
        attempted,
    })
}

/// Unconditional moments of a statistic over the full partition prior (no
/// rejection). For the relative entropy this estimates the law-of-total-
/// variance quantity, which upper-bounds the weighted-variance summary that
/// averages conditional variances only.
pub fn estimate_unconditional(
    spec: &ModelSpec,
    target: StatTarget<'_>,
    n_draws: u64,
    rng_seed: u64,
) -> Result<EmpiricalMoments> {
    if n_draws < 2 {
        return Err(Error::Domain("need at least two draws".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for d in 0..n_draws {
        let x = simulate_partition_at(spec, rng_seed, d).statistic(target);
        sum += x;
        sum_sq += x * x;
    }
    let nf = n_draws as f64;
    let mean = sum / nf;
    let variance = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    Ok(EmpiricalMoments {
        mean,
        variance,
        se_mean: sqrt(variance / nf),
        accepted: n_draws,
        attempted: n_draws,
    })
}
