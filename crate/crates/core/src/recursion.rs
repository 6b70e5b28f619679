//! Log-domain recursion for the combinatorial sums behind every induced
//! prior.
//!
//! The quantity at the core of the crate is, for a fixed Dirichlet parameter,
//!
//! ```text
//! C[n, k] = Σ Π_{j=1..k} w(n_j)   over ordered (n_1,…,n_k), n_j ≥ 1, Σ n_j = n
//! ```
//!
//! with per-size weights `w(n) = Γ(n+γ)/Γ(n+1)` for a finite mixture and
//! `w(n) = 1/n` in the Dirichlet process limit. Peeling off one part gives
//! the triangular recursion `C[n, k] = Σ_m w(m)·C[n-m, k-1]`, evaluated here
//! entirely in the log domain: the linear values overflow `f64` well below
//! the sample sizes of interest.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::logspace::{exp, ln, ln_gamma, LogSumAcc, LOG_ZERO};
use crate::priors::{ModelClass, ModelSpec, GAMMA_MIN};
use crate::{Coverage, Error, Result, Truncated};

/// Which per-size weight sequence a table is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeWeighting {
    /// `w(n) = Γ(n+γ)/Γ(n+1)` for a finite mixture with Dirichlet
    /// parameter `γ`.
    Mfm { gamma: f64 },
    /// `w(n) = 1/n`, the Dirichlet process case.
    Dpm,
}

/// Log-domain per-size weights `ln w(n)`, `n = 1..=n_max`.
#[derive(Debug, Clone)]
pub struct WeightVector {
    log_w: Vec<f64>,
}

impl WeightVector {
    pub fn build(weighting: SizeWeighting, n_max: u32) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Domain("weight vector needs n_max >= 1".to_string()));
        }
        let log_w = match weighting {
            SizeWeighting::Mfm { gamma } => {
                if !(gamma.is_finite() && gamma >= GAMMA_MIN) {
                    return Err(Error::Domain(
                        "Dirichlet parameter below the 1e-8 guard".to_string(),
                    ));
                }
                (1..=n_max)
                    .map(|n| ln_gamma(n as f64 + gamma) - ln_gamma(n as f64 + 1.0))
                    .collect()
            }
            SizeWeighting::Dpm => (1..=n_max).map(|n| -ln(n as f64)).collect(),
        };
        Ok(Self { log_w })
    }

    /// `ln w(n)`, `1 <= n <= n_max`.
    #[inline]
    pub fn log_w(&self, n: u32) -> f64 {
        self.log_w[(n - 1) as usize]
    }

    pub fn n_max(&self) -> u32 {
        self.log_w.len() as u32
    }
}

/// Log-domain table of the composition sums `C[n, k]` for `k = 1..=k_max`
/// and `n = k..=N`.
///
/// Row `k` stores `(ln C[N,k], ln C[N-1,k], …, ln C[k,k])`; the tails of rows
/// `k-1` and `k-2` are exactly what the marginal-size and moment formulas
/// consume.
#[derive(Debug, Clone)]
pub struct CTable {
    n: u32,
    weighting: SizeWeighting,
    weights: WeightVector,
    rows: Vec<Vec<f64>>,
}

impl CTable {
    /// Run the triangular recursion up to `k_max` parts. Cost is `O(N²)` per
    /// row; every stored entry is finite because all terms are strictly
    /// positive.
    pub fn build(n: u32, weighting: SizeWeighting, k_max: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("table needs n >= 1".to_string()));
        }
        if k_max < 1 || k_max > n {
            return Err(Error::Domain("table needs 1 <= k_max <= n".to_string()));
        }
        let weights = WeightVector::build(weighting, n)?;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k_max as usize);
        // Row 1: C[m, 1] = w(m).
        rows.push((0..n).map(|i| weights.log_w(n - i)).collect());
        for k in 2..=k_max {
            let prev = &rows[(k - 2) as usize];
            let width = (n - k + 1) as usize;
            let mut row = vec![LOG_ZERO; width];
            for (i, slot) in row.iter_mut().enumerate() {
                // C[n-i, k] = Σ_{m=1..n-i-k+1} w(m) · C[n-i-m, k-1]
                let mut acc = LogSumAcc::new();
                for m in 1..=(width - i) {
                    acc.add(weights.log_w(m as u32) + prev[i + m]);
                }
                *slot = acc.total();
            }
            rows.push(row);
        }
        Ok(Self {
            n,
            weighting,
            weights,
            rows,
        })
    }

    /// `ln C[m, k]`. Conventions: `C[m, 0] = 1` iff `m = 0` (empty product),
    /// and `C[m, k] = 0` for `m < k` (no composition exists).
    #[inline]
    pub fn log_c(&self, m: u32, k: u32) -> f64 {
        if k == 0 {
            return if m == 0 { 0.0 } else { LOG_ZERO };
        }
        if m < k || m > self.n || k > self.k_max() {
            return LOG_ZERO;
        }
        self.rows[(k - 1) as usize][(self.n - m) as usize]
    }

    /// `ln C[N, k]` — the first element of row `k`.
    #[inline]
    pub fn log_c_top(&self, k: u32) -> f64 {
        self.log_c(self.n, k)
    }

    /// Row `k` as a slice: index `i` holds `ln C[N-i, k]`.
    pub fn row(&self, k: u32) -> &[f64] {
        &self.rows[(k - 1) as usize]
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k_max(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn weighting(&self) -> SizeWeighting {
        self.weighting
    }

    /// `ln w(n)` for the weighting this table was built from.
    #[inline]
    pub fn log_weight(&self, n: u32) -> f64 {
        self.weights.log_w(n)
    }
}

/// `ln V[N, k | K, γ_K]` where
/// `V = Γ(γ_K·K)·K! / (Γ(γ_K·K + N)·(K-k)!)` is the coefficient in front of
/// the product of gamma factors in the conditional partition prior.
///
/// Returns [`LOG_ZERO`] for `k > K`: one cannot fill more clusters than
/// there are components (the falling factorial vanishes).
pub fn log_v(n: u32, k: u32, num_components: u32, gamma_k: f64) -> f64 {
    if k > num_components {
        return LOG_ZERO;
    }
    let gk = gamma_k * num_components as f64;
    log_v_from_base(
        ln_gamma(gk) + ln_gamma(num_components as f64 + 1.0) - ln_gamma(gk + n as f64),
        num_components,
        k,
    )
}

/// `ln V` given the `k`-independent part
/// `base(K) = ln Γ(γ_K·K) + ln K! - ln Γ(γ_K·K + N)`; assembly loops hoist
/// this out of the sum over `K`.
#[inline]
pub(crate) fn log_v_from_base(base: f64, num_components: u32, k: u32) -> f64 {
    if k > num_components {
        return LOG_ZERO;
    }
    base - ln_gamma((num_components - k) as f64 + 1.0)
}

/// `-k·ln Γ(γ_K)` rewritten through `Γ(1+γ_K) = γ_K·Γ(γ_K)`, which stays
/// accurate when `γ_K` is tiny (dynamic mixtures with many components).
#[inline]
pub(crate) fn neg_k_ln_gamma_gamma(k: u32, gamma_k: f64) -> f64 {
    k as f64 * (ln(gamma_k) - ln_gamma(1.0 + gamma_k))
}

/// Marginal coefficients `V[n, k] = Σ_K p(K)·V[n, k | K, γ]` for a static
/// mixture, on the rectangle `n = 0..=N`, `k = 0..=k_max`.
///
/// Linear-domain values; a validation path against the per-`K` closed form,
/// not a production path — the values themselves leave `f64` range for `N`
/// in the low hundreds.
#[derive(Debug, Clone)]
pub struct StaticVTable {
    n: u32,
    v: Vec<Vec<f64>>,
}

impl StaticVTable {
    /// `V[n, k]`.
    pub fn v(&self, n: u32, k: u32) -> f64 {
        self.v[k as usize][n as usize]
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k_max(&self) -> u32 {
        self.v.len() as u32 - 1
    }
}

/// Build the marginal `V` rectangle for a static mixture via the forward
/// recursion `V[n+1, k+1] = V[n, k]/γ - (n/γ + k)·V[n+1, k]`, seeded by the
/// direct sums `V[n, 0] = Σ_K p(K)·Γ(γK)/Γ(γK + n)`.
///
/// The subtraction is violently ill-conditioned in floating point (the
/// relative error blows past 10³⁰ by `k = 30` at `N = 50`), so the whole
/// rectangle is evaluated in exact rational arithmetic — the seeds are
/// finite products `1/Π(γK + i)` and every coefficient is rational — and
/// only converted to `f64` on output.
pub fn static_v_table(spec: &ModelSpec, k_max: u32) -> Result<Truncated<StaticVTable>> {
    use crate::priors::BigRatio;
    use num_bigint::BigInt;
    use num_traits::{One, Zero};

    let gamma = match spec.class() {
        ModelClass::StaticMfm { gamma } => gamma,
        _ => {
            return Err(Error::InvalidSpec(
                "the marginal V recursion is only valid for a constant Dirichlet parameter"
                    .to_string(),
            ))
        }
    };
    let n = spec.n() as usize;
    let policy = spec.truncation();
    let (big_k_max, covered) = spec.prior_k().truncation_bound(k_max, policy)?;
    let coverage = Coverage::truncated(big_k_max, covered, policy.min_covered_mass_warn());

    let gamma_r = BigRatio::from_float(gamma).expect("gamma is finite");
    // Prior masses, exact where the family admits it and the dyadic value of
    // the f64 pmf otherwise.
    let masses: Vec<(u32, BigRatio)> = (1..=big_k_max)
        .filter_map(|big_k| {
            let p = spec
                .prior_k()
                .pmf_rational(big_k)
                .or_else(|| BigRatio::from_float(exp(spec.prior_k().log_pmf(big_k))))?;
            (!p.is_zero()).then_some((big_k, p))
        })
        .collect();

    // Seeds: V[0][m] = Σ_K p_K / Π_{i<m}(γK + i), accumulated per K.
    let mut rows: Vec<Vec<BigRatio>> = Vec::with_capacity(k_max as usize + 1);
    let mut seeds = vec![BigRatio::zero(); n + 1];
    for (big_k, p) in &masses {
        let gk = gamma_r.clone() * BigInt::from(*big_k);
        let mut cur = p.clone();
        for (m, slot) in seeds.iter_mut().enumerate() {
            *slot += cur.clone();
            if m < n {
                cur /= gk.clone() + BigInt::from(m);
            }
        }
    }
    rows.push(seeds);

    for k in 1..=k_max {
        let mut row = vec![BigRatio::zero(); n + 1];
        // n = 0 column directly: Σ_K p_K · K!/(K-k)!
        for (big_k, p) in &masses {
            if *big_k >= k {
                let mut falling = BigInt::one();
                for i in 0..k {
                    falling *= BigInt::from(big_k - i);
                }
                row[0] += p.clone() * BigRatio::from_integer(falling);
            }
        }
        let prev = rows.last().expect("seed row present");
        let k_part = BigRatio::from_integer(BigInt::from(k - 1));
        for m in 1..=n {
            let coeff =
                BigRatio::from_integer(BigInt::from(m - 1)) / gamma_r.clone() + k_part.clone();
            row[m] = prev[m - 1].clone() / gamma_r.clone() - coeff * prev[m].clone();
        }
        rows.push(row);
    }

    let v = rows
        .iter()
        .map(|row| row.iter().map(ratio_to_f64).collect())
        .collect();
    Ok(Truncated::new(
        StaticVTable { n: spec.n(), v },
        coverage,
    ))
}

/// Convert a big rational to the nearest `f64`, safely even when numerator
/// and denominator individually overflow the `f64` range.
fn ratio_to_f64(r: &crate::priors::BigRatio) -> f64 {
    use num_bigint::Sign;
    use num_traits::{ToPrimitive, Zero};

    if r.is_zero() {
        return 0.0;
    }
    let negative = (r.numer().sign() == Sign::Minus) != (r.denom().sign() == Sign::Minus);
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    // Scale so the integer quotient carries ~64 significant bits, then put
    // the binary exponent back with scalbn.
    let e = num.bits() as i64 - den.bits() as i64;
    let p = 64 - e;
    let m = if p >= 0 {
        (num << p as u64) / den
    } else {
        num / (den << (-p) as u64)
    };
    let value = libm::scalbn(m.to_f64().unwrap_or(f64::INFINITY), -p as i32);
    if negative {
        -value
    } else {
        value
    }
}

/// Unnormalized mixing weights over `K` for the conditional priors given
/// `K+ = k`, together with their normalizer.
///
/// `terms` holds `(K, ln w̃_K)` with
/// `w̃_K = p(K)·V[N, k | K, γ_K] / Γ(γ_K)^k` for every `K` in `k..=K_max`
/// with positive prior mass; `log_normalizer = ln Σ_K w̃_K·C[N, k | K]`, so
/// the normalized weights sum to one against the composition sums.
#[derive(Debug, Clone)]
pub struct MixingWeights {
    pub k: u32,
    pub terms: Vec<(u32, f64)>,
    pub log_normalizer: f64,
}

impl MixingWeights {
    /// Normalized weight `w_K = w̃_K / Σ w̃·C` for term index `i`.
    pub fn normalized(&self, i: usize) -> f64 {
        exp(self.terms[i].1 - self.log_normalizer)
    }
}

/// Compute the mixing weights for an MFM spec at a given number of data
/// clusters `k`.
///
/// Dirichlet process specs are rejected: their conditional prior has a
/// single trivial weight and a dedicated code path everywhere.
pub fn mixing_weights(spec: &ModelSpec, k: u32) -> Result<Truncated<MixingWeights>> {
    let n = spec.n();
    if k < 1 || k > n {
        return Err(Error::KPlusTooLarge { k, n });
    }
    let alpha = match spec.class() {
        ModelClass::Dpm { .. } => {
            return Err(Error::InvalidSpec(
                "mixing weights are trivial for a Dirichlet process".to_string(),
            ))
        }
        ModelClass::DynamicMfm { alpha } => Some(alpha),
        ModelClass::StaticMfm { .. } => None,
    };
    let policy = spec.truncation();
    let (k_max, covered) = spec.prior_k().truncation_bound(k, policy)?;
    let coverage = Coverage::truncated(k_max, covered, policy.min_covered_mass_warn());

    // Static tables are K-independent; dynamic ones are rebuilt per K.
    let static_table = match spec.class() {
        ModelClass::StaticMfm { gamma } => {
            Some(CTable::build(n, SizeWeighting::Mfm { gamma }, k)?)
        }
        _ => None,
    };

    let mut terms = Vec::new();
    let mut norm = LogSumAcc::new();
    for big_k in k..=k_max {
        let log_p = spec.prior_k().log_pmf(big_k);
        if log_p == LOG_ZERO {
            continue;
        }
        let gamma_k = spec.gammas().gamma_at(big_k);
        // For the dynamic sequence γ_K·K = α holds exactly; use α directly.
        let base = match alpha {
            Some(a) => ln_gamma(a) + ln_gamma(big_k as f64 + 1.0) - ln_gamma(a + n as f64),
            None => {
                let gk = gamma_k * big_k as f64;
                ln_gamma(gk) + ln_gamma(big_k as f64 + 1.0) - ln_gamma(gk + n as f64)
            }
        };
        let log_w_tilde =
            log_p + log_v_from_base(base, big_k, k) + neg_k_ln_gamma_gamma(k, gamma_k);
        let log_c_top = match &static_table {
            Some(t) => t.log_c_top(k),
            None => CTable::build(n, SizeWeighting::Mfm { gamma: gamma_k }, k)?.log_c_top(k),
        };
        terms.push((big_k, log_w_tilde));
        norm.add(log_w_tilde + log_c_top);
    }
    if terms.is_empty() {
        return Err(Error::ImpossibleKPlus { k });
    }
    Ok(Truncated::new(
        MixingWeights {
            k,
            terms,
            log_normalizer: norm.total(),
        },
        coverage,
    ))
}
