//! Priors on partition functionals `Ψ(N_1, …, N_k) = Σ_j ψ(N_j)`.
//!
//! Conditional on the number of data clusters `K+ = k`, the labelled cluster
//! sizes have an exchangeable prior whose single- and pairwise marginals are
//! expressible through tails of the composition-sum table. That turns the
//! mean and variance of any symmetric additive functional into a handful of
//! weighted inner products:
//!
//! ```text
//! E[ψ(N_j)]        = Σ_K w_K · Σ_n ψ̃(n) · C[N-n, k-1]
//! E[ψ(N_1)ψ(N_2)]  = Σ_K w_K · Σ_n C[N-n, k-2] · Σ_m ψ̃(m)ψ̃(n-m)
//! ```
//!
//! with `ψ̃(n) = ψ(n)·w(n)` folding the kernel into the per-size weights.
//! The inner convolution is the action of a lower-triangular Toeplitz matrix
//! built from `ψ̃`; for `k = 2` only the `n = N` entry survives, which is the
//! cheap `N_2 = N - N_1` shortcut.
//!
//! Two kernels cover the measures of interest: `ψ(n) = n·ln n` (relative
//! entropy of the partition) and the singleton indicator. Custom tabulated
//! kernels may be negative, so accumulation is sign-tracked; nonnegative
//! kernels simply never touch the negative lane.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::kplus::kplus_pmf;
use crate::logspace::{exp, ln, ln_gamma, sqrt, LogSumAcc, SignedLog, SignedLogAcc, LOG_ZERO};
use crate::priors::{ModelClass, ModelSpec};
use crate::recursion::{CTable, SizeWeighting};
use crate::{Coverage, Error, Result, Truncated};

/// A per-cluster-size kernel `ψ(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    name: String,
    kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq)]
enum Kernel {
    /// `ψ(n) = n·ln n`, the building block of the partition entropy.
    Entropy,
    /// `ψ(n) = 1` iff `n = 1`: counts singleton clusters.
    Singleton,
    /// Tabulated values for `n = 1..=len`.
    Table(Vec<f64>),
}

impl Functional {
    pub fn entropy() -> Self {
        Functional {
            name: "entropy".to_string(),
            kernel: Kernel::Entropy,
        }
    }

    pub fn singleton() -> Self {
        Functional {
            name: "singletons".to_string(),
            kernel: Kernel::Singleton,
        }
    }

    /// Kernel given by a value table for `n = 1..=values.len()`.
    pub fn from_table(name: &str, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("kernel table must be nonempty".to_string()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("kernel values must be finite".to_string()));
        }
        Ok(Functional {
            name: name.to_string(),
            kernel: Kernel::Table(values),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `ψ(n)`, `n >= 1`.
    pub fn eval(&self, n: u32) -> f64 {
        match &self.kernel {
            Kernel::Entropy => {
                let x = n as f64;
                x * ln(x)
            }
            Kernel::Singleton => {
                if n == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Table(values) => values[(n - 1) as usize],
        }
    }

    fn check_domain(&self, n: u32) -> Result<()> {
        if let Kernel::Table(values) = &self.kernel {
            if (values.len() as u32) < n {
                return Err(Error::Domain(alloc::format!(
                    "kernel table covers n <= {}, but n = 1..={n} is required",
                    values.len()
                )));
            }
        }
        Ok(())
    }
}

/// What a [`FunctionalStats`] value is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatScope {
    /// Conditional on `K+ = k`.
    Conditional(u32),
    /// Weighted over the prior of `K+`.
    Weighted,
}

/// Prior mean and variance of a partition functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalStats {
    pub scope: StatScope,
    pub mean: f64,
    /// Variance clamped at zero.
    pub variance: f64,
    /// Variance before clamping; cancellation may leave it a hair negative.
    pub raw_variance: f64,
    pub sd: f64,
}

impl FunctionalStats {
    fn new(scope: StatScope, mean: f64, raw_variance: f64) -> Self {
        let variance = raw_variance.max(0.0);
        FunctionalStats {
            scope,
            mean,
            variance,
            raw_variance,
            sd: sqrt(variance),
        }
    }
}

/// Single- and pairwise conditional moments of a kernel.
#[derive(Debug, Clone, Copy)]
struct Moments {
    e_psi: f64,
    e_psi_sq: f64,
    /// `E[ψ(N_1)ψ(N_2)]`; only computed for `k >= 2`.
    e_prod: Option<f64>,
}

/// Marginal prior `P(N_j = n | N, K+ = k)` of one labelled cluster size,
/// for `n = 1..=N-k+1` (identical for every `j`).
pub fn marginal_size_pmf(spec: &ModelSpec, k: u32) -> Result<Truncated<Vec<f64>>> {
    check_k(spec, k)?;
    let n = spec.n();
    let width = (n - k + 1) as usize;
    let mut num = vec![LogSumAcc::new(); width];
    let mut den = LogSumAcc::new();
    let coverage = for_each_term(spec, k, |term| {
        let lw = term.log_w_tilde(k);
        if lw == LOG_ZERO {
            return;
        }
        den.add(lw + term.table.log_c_top(k));
        for (i, acc) in num.iter_mut().enumerate() {
            let size = (i + 1) as u32;
            acc.add(lw + term.table.log_weight(size) + term.table.log_c(n - size, k - 1));
        }
    })?;
    if den.is_empty() {
        return Err(Error::ImpossibleKPlus { k });
    }
    let log_den = den.total();
    let probs = num.iter().map(|acc| exp(acc.total() - log_den)).collect();
    Ok(Truncated::new(probs, coverage))
}

/// Conditional prior expectation `E[ψ(N_j) | N, K+ = k]` of the kernel at a
/// single labelled cluster (the same for every `j`).
pub fn expected_psi(spec: &ModelSpec, k: u32, f: &Functional) -> Result<Truncated<f64>> {
    let m = conditional_moments(spec, k, f, false)?;
    Ok(Truncated::new(m.value.e_psi, m.coverage))
}

/// Conditional cross moment `E[ψ(N_1)ψ(N_2) | N, K+ = k]` of two distinct
/// labelled clusters; requires `k >= 2`.
pub fn expected_psi_product(spec: &ModelSpec, k: u32, f: &Functional) -> Result<Truncated<f64>> {
    if k < 2 {
        return Err(Error::Domain(
            "a cross moment needs at least two clusters".to_string(),
        ));
    }
    let m = conditional_moments(spec, k, f, true)?;
    Ok(Truncated::new(
        m.value.e_prod.expect("requested product moment"),
        m.coverage,
    ))
}

/// Mean and variance of `Ψ = Σ_j ψ(N_j)` conditional on `K+ = k`:
/// `E = k·E[ψ]` and `V = k·E[ψ²] + k(k-1)·E[ψψ'] - k²·E[ψ]²` (the cross
/// term vanishes for `k = 1`).
pub fn functional_stats(
    spec: &ModelSpec,
    k: u32,
    f: &Functional,
) -> Result<Truncated<FunctionalStats>> {
    let m = conditional_moments(spec, k, f, k >= 2)?;
    Ok(Truncated::new(stats_from_moments(k, &m.value), m.coverage))
}

/// [`functional_stats`] for several `k` at once, sharing the table builds.
pub fn functional_stats_multi(
    spec: &ModelSpec,
    ks: &[u32],
    f: &Functional,
) -> Result<Truncated<Vec<FunctionalStats>>> {
    let want_product = ks.iter().any(|&k| k >= 2);
    let m = conditional_moments_multi(spec, ks, f, want_product)?;
    let stats = ks
        .iter()
        .zip(m.value.iter())
        .map(|(&k, mk)| stats_from_moments(k, mk))
        .collect();
    Ok(Truncated::new(stats, m.coverage))
}

/// Prior mean and variance of the relative entropy
/// `-Σ (N_j/N)·ln(N_j/N) / ln k` conditional on `K+ = k`.
///
/// By convention the relative entropy of a one-cluster partition is 0 with
/// variance 0. For `k = N` it is exactly 1 with variance 0 (all clusters are
/// singletons).
pub fn relative_entropy_stats(spec: &ModelSpec, k: u32) -> Result<Truncated<FunctionalStats>> {
    check_k(spec, k)?;
    if k == 1 {
        return Ok(Truncated::exact(FunctionalStats::new(
            StatScope::Conditional(1),
            0.0,
            0.0,
        )));
    }
    let m = conditional_moments(spec, k, &Functional::entropy(), true)?;
    Ok(Truncated::new(
        entropy_stats_from_moments(spec.n(), k, &m.value),
        m.coverage,
    ))
}

/// [`relative_entropy_stats`] for several `k` at once.
pub fn relative_entropy_stats_multi(
    spec: &ModelSpec,
    ks: &[u32],
) -> Result<Truncated<Vec<FunctionalStats>>> {
    let m = conditional_moments_multi(spec, ks, &Functional::entropy(), true)?;
    let stats = ks
        .iter()
        .zip(m.value.iter())
        .map(|(&k, mk)| {
            if k == 1 {
                FunctionalStats::new(StatScope::Conditional(1), 0.0, 0.0)
            } else {
                entropy_stats_from_moments(spec.n(), k, mk)
            }
        })
        .collect();
    Ok(Truncated::new(stats, m.coverage))
}

/// Mean and variance of the number of singletons conditional on `K+ = k`.
pub fn singleton_stats(spec: &ModelSpec, k: u32) -> Result<Truncated<FunctionalStats>> {
    functional_stats(spec, k, &Functional::singleton())
}

/// A partition statistic: a plain additive functional or the relative
/// entropy (which rescales the entropy kernel by cluster count).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatTarget<'a> {
    Functional(&'a Functional),
    RelativeEntropy,
}

/// Conditional means and variances weighted by the prior of the number of
/// data clusters: `Σ_k E_k·P(K+ = k)` and `Σ_k V_k·P(K+ = k)`.
///
/// The sum runs over `k = 1..=k_cut` where `k_cut` captures all but `1e-8`
/// of the (covered) `K+` mass, and is renormalized by the mass actually
/// included. This is a mixture of conditional variances only; the spread of
/// the conditional means across `k` is deliberately not added in.
pub fn weighted_stats(
    spec: &ModelSpec,
    target: StatTarget<'_>,
) -> Result<Truncated<FunctionalStats>> {
    let pmf = kplus_pmf(spec)?;
    let total = pmf.covered_mass();
    let mut k_cut = spec.n();
    let mut cum = 0.0;
    for k in 1..=spec.n() {
        cum += pmf.prob(k);
        if cum >= total * (1.0 - 1e-8) {
            k_cut = k;
            break;
        }
    }
    let ks: Vec<u32> = (1..=k_cut).filter(|&k| pmf.prob(k) > 0.0).collect();
    let entropy_kernel = Functional::entropy();
    let (kernel, relative) = match target {
        StatTarget::Functional(f) => (f, false),
        StatTarget::RelativeEntropy => (&entropy_kernel, true),
    };
    let m = conditional_moments_multi(spec, &ks, kernel, true)?;
    let mut mean = 0.0;
    let mut variance = 0.0;
    let mut mass = 0.0;
    for (&k, mk) in ks.iter().zip(m.value.iter()) {
        let stats = if relative {
            if k == 1 {
                FunctionalStats::new(StatScope::Conditional(1), 0.0, 0.0)
            } else {
                entropy_stats_from_moments(spec.n(), k, mk)
            }
        } else {
            stats_from_moments(k, mk)
        };
        let p = pmf.prob(k);
        mean += p * stats.mean;
        variance += p * stats.variance;
        mass += p;
    }
    mean /= mass;
    variance /= mass;
    let coverage = merge_coverage(pmf.coverage(), m.coverage);
    Ok(Truncated::new(
        FunctionalStats::new(StatScope::Weighted, mean, variance),
        coverage,
    ))
}

fn check_k(spec: &ModelSpec, k: u32) -> Result<()> {
    if k < 1 || k > spec.n() {
        return Err(Error::KPlusTooLarge { k, n: spec.n() });
    }
    Ok(())
}

fn merge_coverage(a: Coverage, b: Coverage) -> Coverage {
    Coverage {
        k_max: match (a.k_max, b.k_max) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        },
        prior_mass: a.prior_mass.min(b.prior_mass),
        warned: a.warned || b.warned,
    }
}

fn stats_from_moments(k: u32, m: &Moments) -> FunctionalStats {
    let kf = k as f64;
    let mean = kf * m.e_psi;
    let cross = match m.e_prod {
        Some(p) => kf * (kf - 1.0) * p,
        None => 0.0,
    };
    let raw = kf * m.e_psi_sq + cross - mean * mean;
    FunctionalStats::new(StatScope::Conditional(k), mean, raw)
}

/// Relative-entropy mean and variance from the moments of `ψ(n) = n·ln n`:
/// `E = (ln N - k/N·E[ψ]) / ln k`, `V = V[Ψ] / (N·ln k)²`.
fn entropy_stats_from_moments(n: u32, k: u32, m: &Moments) -> FunctionalStats {
    let nf = n as f64;
    let kf = k as f64;
    let log_k = ln(kf);
    let mean = (ln(nf) - kf / nf * m.e_psi) / log_k;
    let cross = m.e_prod.map(|p| kf * (kf - 1.0) * p).unwrap_or(0.0);
    let raw_psi_var = kf * m.e_psi_sq + cross - (kf * m.e_psi) * (kf * m.e_psi);
    let raw = raw_psi_var / (nf * nf * log_k * log_k);
    FunctionalStats::new(StatScope::Conditional(k), mean, raw)
}

fn conditional_moments(
    spec: &ModelSpec,
    k: u32,
    f: &Functional,
    want_product: bool,
) -> Result<Truncated<Moments>> {
    let multi = conditional_moments_multi(spec, &[k], f, want_product)?;
    Ok(Truncated::new(multi.value[0], multi.coverage))
}

/// One pass over the mixture terms computing the moments for every `k` in
/// `ks`. For dynamic mixtures this shares the per-`K` table between all `k`,
/// which is what makes sweeps over `K+` affordable.
fn conditional_moments_multi(
    spec: &ModelSpec,
    ks: &[u32],
    f: &Functional,
    want_product: bool,
) -> Result<Truncated<Vec<Moments>>> {
    for &k in ks {
        check_k(spec, k)?;
    }
    f.check_domain(spec.n())?;
    if ks.is_empty() {
        return Ok(Truncated::exact(Vec::new()));
    }
    let mut acc: Vec<MomentAcc> = ks
        .iter()
        .map(|&k| MomentAcc::new(k, want_product && k >= 2))
        .collect();
    let coverage = for_each_term(spec, *ks.iter().max().unwrap(), |term| {
        let psi = PsiTilde::build(f, term.table);
        for a in acc.iter_mut() {
            a.absorb(term, &psi);
        }
    })?;
    for a in &acc {
        if a.den.is_empty() {
            return Err(Error::ImpossibleKPlus { k: a.k });
        }
    }
    Ok(Truncated::new(
        acc.iter().map(MomentAcc::finish).collect(),
        coverage,
    ))
}

/// The kernel folded into the per-size weights: `ψ̃(n) = ψ(n)·w(n)` (signed
/// log) and `ψ(n)²·w(n)` (plain log; squares are never negative).
struct PsiTilde {
    signed: Vec<SignedLog>,
    sq_log: Vec<f64>,
}

impl PsiTilde {
    fn build(f: &Functional, table: &CTable) -> Self {
        let n = table.n();
        let mut signed = Vec::with_capacity(n as usize);
        let mut sq_log = Vec::with_capacity(n as usize);
        for size in 1..=n {
            let v = SignedLog::from_f64(f.eval(size)).scale(table.log_weight(size));
            signed.push(v);
            sq_log.push(if v.is_zero() {
                LOG_ZERO
            } else {
                // ψ²·w = ψ̃² / w
                2.0 * v.ln_abs - table.log_weight(size)
            });
        }
        PsiTilde { signed, sq_log }
    }

    #[inline]
    fn at(&self, n: u32) -> SignedLog {
        self.signed[(n - 1) as usize]
    }

    #[inline]
    fn sq_at(&self, n: u32) -> f64 {
        self.sq_log[(n - 1) as usize]
    }
}

/// Accumulates numerator and denominator sums over the mixture terms for a
/// single `k`.
struct MomentAcc {
    k: u32,
    den: LogSumAcc,
    s1: SignedLogAcc,
    s2: SignedLogAcc,
    sp: Option<SignedLogAcc>,
}

impl MomentAcc {
    fn new(k: u32, want_product: bool) -> Self {
        MomentAcc {
            k,
            den: LogSumAcc::new(),
            s1: SignedLogAcc::new(),
            s2: SignedLogAcc::new(),
            sp: want_product.then(SignedLogAcc::new),
        }
    }

    fn absorb(&mut self, term: &MixtureTerm<'_>, psi: &PsiTilde) {
        let k = self.k;
        let lw = term.log_w_tilde(k);
        if lw == LOG_ZERO {
            return;
        }
        let table = term.table;
        let n = table.n();
        self.den.add(lw + table.log_c_top(k));

        // S1 = Σ_n ψ̃(n)·C[N-n, k-1], S2 the same with ψ²·w.
        if k == 1 {
            self.s1.add(psi.at(n).scale(lw));
            self.s2.add(SignedLog::new(1, psi.sq_at(n) + lw));
        } else {
            let mut s1 = SignedLogAcc::new();
            let mut s2 = LogSumAcc::new();
            for size in 1..=(n - k + 1) {
                let log_c = table.log_c(n - size, k - 1);
                s1.add(psi.at(size).scale(log_c));
                s2.add(psi.sq_at(size) + log_c);
            }
            self.s1.add(s1.total().scale(lw));
            self.s2.add(SignedLog::new(1, s2.total() + lw));
        }

        // SP = Σ_n C[N-n, k-2]·Σ_m ψ̃(m)ψ̃(n-m); for k = 2 only n = N
        // survives (C[m, 0] = 1 iff m = 0): the N_2 = N - N_1 shortcut.
        if let Some(sp) = &mut self.sp {
            if k == 2 {
                sp.add(convolution(psi, n).scale(lw));
            } else {
                let mut outer = SignedLogAcc::new();
                for m in 2..=(n - k + 2) {
                    let log_c = table.log_c(n - m, k - 2);
                    outer.add(convolution(psi, m).scale(log_c));
                }
                sp.add(outer.total().scale(lw));
            }
        }
    }

    fn finish(&self) -> Moments {
        let log_den = self.den.total();
        let ratio = |s: SignedLog| s.scale(-log_den).to_f64();
        Moments {
            e_psi: ratio(self.s1.total()),
            e_psi_sq: ratio(self.s2.total()),
            e_prod: self.sp.as_ref().map(|sp| ratio(sp.total())),
        }
    }
}

/// `Σ_{m=1}^{n-1} ψ̃(m)·ψ̃(n-m)` — one entry of the triangular Toeplitz
/// product of the `ψ̃` vector with itself.
fn convolution(psi: &PsiTilde, n: u32) -> SignedLog {
    let mut acc = SignedLogAcc::new();
    for m in 1..n {
        acc.add(psi.at(m).mul(psi.at(n - m)));
    }
    acc.total()
}

/// One term of the conditional mixture over `K`.
struct MixtureTerm<'t> {
    table: &'t CTable,
    weight: TermWeight,
}

enum TermWeight {
    /// Dirichlet process and static mixtures: the conditional prior is a
    /// plain ratio against `C[N, k]`, i.e. a single unit-weight term.
    Unit,
    /// Dynamic mixtures: `ln w̃_K(k) = ln p(K) + base - ln (K-k)! + k·g`,
    /// with `base = ln Γ(α) + ln K! - ln Γ(α+N)` and `g = -ln Γ(γ_K)`
    /// rewritten through `Γ(1+γ_K)`.
    Dynamic {
        big_k: u32,
        log_p_plus_base: f64,
        per_cluster: f64,
    },
}

impl MixtureTerm<'_> {
    /// Unnormalized weight at cluster count `k`; [`LOG_ZERO`] when `k`
    /// exceeds the component count of this term.
    fn log_w_tilde(&self, k: u32) -> f64 {
        match self.weight {
            TermWeight::Unit => 0.0,
            TermWeight::Dynamic {
                big_k,
                log_p_plus_base,
                per_cluster,
            } => {
                if k > big_k {
                    LOG_ZERO
                } else {
                    log_p_plus_base - ln_gamma((big_k - k) as f64 + 1.0)
                        + k as f64 * per_cluster
                }
            }
        }
    }
}

/// Drive the mixture-term loop: a single unit-weight term for model classes
/// whose conditional prior is `K`-free (Dirichlet process, static), one term
/// per `K` in ascending order for dynamic mixtures.
fn for_each_term(
    spec: &ModelSpec,
    k_rows: u32,
    mut visit: impl FnMut(&MixtureTerm<'_>),
) -> Result<Coverage> {
    let n = spec.n();
    match spec.class() {
        ModelClass::Dpm { .. } => {
            let table = CTable::build(n, SizeWeighting::Dpm, k_rows)?;
            visit(&MixtureTerm {
                table: &table,
                weight: TermWeight::Unit,
            });
            Ok(Coverage::exact())
        }
        ModelClass::StaticMfm { gamma } => {
            let table = CTable::build(n, SizeWeighting::Mfm { gamma }, k_rows)?;
            visit(&MixtureTerm {
                table: &table,
                weight: TermWeight::Unit,
            });
            Ok(Coverage::exact())
        }
        ModelClass::DynamicMfm { alpha } => {
            let policy = spec.truncation();
            let (k_max, covered) = spec.prior_k().truncation_bound(k_rows, policy)?;
            let ln_gamma_alpha = ln_gamma(alpha);
            let ln_gamma_alpha_n = ln_gamma(alpha + n as f64);
            for big_k in 1..=k_max {
                let log_p = spec.prior_k().log_pmf(big_k);
                if log_p == LOG_ZERO {
                    continue;
                }
                let gamma_k = spec.gammas().gamma_at(big_k);
                // γ_K·K = α exactly for the dynamic sequence.
                let base = ln_gamma_alpha + ln_gamma(big_k as f64 + 1.0) - ln_gamma_alpha_n;
                let table = CTable::build(
                    n,
                    SizeWeighting::Mfm { gamma: gamma_k },
                    k_rows.min(big_k).min(n),
                )?;
                visit(&MixtureTerm {
                    table: &table,
                    weight: TermWeight::Dynamic {
                        big_k,
                        log_p_plus_base: log_p + base,
                        per_cluster: ln(gamma_k) - ln_gamma(1.0 + gamma_k),
                    },
                });
            }
            Ok(Coverage::truncated(
                k_max,
                covered,
                policy.min_covered_mass_warn(),
            ))
        }
    }
}
