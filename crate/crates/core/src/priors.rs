//! Explicit prior specifications: the prior on the number of components `K`,
//! the Dirichlet parameter sequence `γ_K`, and the truncation policy that
//! turns infinite sums over `K` into finite ones.

use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use crate::logspace::{exp, ln, ln_gamma, LOG_ZERO};
use crate::{Error, Result};

/// Smallest admissible Dirichlet parameter. Below this, `Γ(γ)` terms make the
/// mixing weights numerically degenerate.
pub const GAMMA_MIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
enum PriorKind {
    Uniform { lo: u32, hi: u32 },
    /// Geometric on `K - 1` with success probability `p`.
    Geometric { p: f64 },
    /// Beta-negative-binomial on `K - 1`.
    BetaNegBinomial { r: f64, a: f64, b: f64 },
    PointMass { k: u32 },
    PointMassInfinity,
}

/// Prior on the number of mixture components `K`.
///
/// Supported families: uniform on an integer range, geometric and
/// beta-negative-binomial (both placed on `K - 1`, so the support of `K`
/// starts at 1), a point mass at a fixed `K`, and a point mass at infinity
/// (the Dirichlet process case).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentCountPrior {
    kind: PriorKind,
}

impl ComponentCountPrior {
    /// Uniform prior on `K ∈ {lo, …, hi}`.
    pub fn uniform(lo: u32, hi: u32) -> Result<Self> {
        if lo < 1 || hi < lo {
            return Err(Error::Domain(
                "uniform prior needs 1 <= lo <= hi".to_string(),
            ));
        }
        Ok(Self {
            kind: PriorKind::Uniform { lo, hi },
        })
    }

    /// Geometric prior on `K - 1` with success probability `p ∈ (0, 1)`.
    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(
                "geometric success probability must lie in (0, 1)".to_string(),
            ));
        }
        Ok(Self {
            kind: PriorKind::Geometric { p },
        })
    }

    /// Geometric prior on `K - 1` with the given mean, `p = 1 / (1 + mean)`.
    pub fn geometric_with_mean(mean: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::Domain("geometric mean must be positive".to_string()));
        }
        Self::geometric(1.0 / (1.0 + mean))
    }

    /// Beta-negative-binomial prior BNB(r, a, b) on `K - 1`.
    pub fn beta_neg_binomial(r: f64, a: f64, b: f64) -> Result<Self> {
        if !(r > 0.0 && a > 0.0 && b > 0.0) {
            return Err(Error::Domain(
                "beta-negative-binomial parameters must be positive".to_string(),
            ));
        }
        Ok(Self {
            kind: PriorKind::BetaNegBinomial { r, a, b },
        })
    }

    /// Degenerate prior with all mass at a fixed number of components.
    pub fn point_mass(k: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::Domain("point mass needs K >= 1".to_string()));
        }
        Ok(Self {
            kind: PriorKind::PointMass { k },
        })
    }

    /// Degenerate prior at `K = ∞` (Dirichlet process mixtures).
    pub fn point_mass_infinity() -> Self {
        Self {
            kind: PriorKind::PointMassInfinity,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.kind, PriorKind::PointMassInfinity)
    }

    /// Largest `K` with positive mass, when the support is bounded.
    pub fn upper_support(&self) -> Option<u32> {
        match self.kind {
            PriorKind::Uniform { hi, .. } => Some(hi),
            PriorKind::PointMass { k } => Some(k),
            _ => None,
        }
    }

    /// `ln p(K)`; [`LOG_ZERO`] outside the support.
    ///
    /// The beta-negative-binomial uses the standard Beta-function form
    /// `P(X = x) = Γ(r+x) / (x! Γ(r)) · B(a+r, b+x) / B(a, b)` on `X = K-1`.
    pub fn log_pmf(&self, k: u32) -> f64 {
        if k < 1 {
            return LOG_ZERO;
        }
        match self.kind {
            PriorKind::Uniform { lo, hi } => {
                if k >= lo && k <= hi {
                    -ln((hi - lo + 1) as f64)
                } else {
                    LOG_ZERO
                }
            }
            PriorKind::Geometric { p } => {
                let x = (k - 1) as f64;
                ln(p) + x * libm::log1p(-p)
            }
            PriorKind::BetaNegBinomial { r, a, b } => {
                let x = (k - 1) as f64;
                ln_gamma(r + x) - ln_gamma(x + 1.0) - ln_gamma(r) + ln_beta(a + r, b + x)
                    - ln_beta(a, b)
            }
            PriorKind::PointMass { k: k0 } => {
                if k == k0 {
                    0.0
                } else {
                    LOG_ZERO
                }
            }
            PriorKind::PointMassInfinity => LOG_ZERO,
        }
    }

    /// Smallest `K_max >= k_lower` whose tail mass is at most
    /// `policy.tail_mass_epsilon`, clamped to the policy's hard cap.
    ///
    /// Returns the bound together with the prior mass it covers. Errors for
    /// the point mass at infinity: Dirichlet process computations never
    /// truncate over `K`.
    pub fn truncation_bound(&self, k_lower: u32, policy: &TruncationPolicy) -> Result<(u32, f64)> {
        if self.is_infinite() {
            return Err(Error::InfiniteSupport);
        }
        let k_lower = k_lower.max(1);
        let scan_limit = match self.upper_support() {
            Some(hi) => hi.min(policy.hard_cap),
            None => policy.hard_cap,
        };
        let mut cum = 0.0;
        let mut k_eps = scan_limit;
        let mut reached_eps = false;
        let mut k = 1;
        while k <= scan_limit {
            cum += exp(self.log_pmf(k));
            if !reached_eps && 1.0 - cum <= policy.tail_mass_epsilon {
                k_eps = k;
                reached_eps = true;
            }
            k += 1;
        }
        let k_max = k_eps.max(k_lower).min(policy.hard_cap);
        // Re-derive the mass actually covered by k_max (it may differ from
        // the scan endpoint when k_lower pushed the bound up or the cap cut
        // it down).
        let covered = self.cdf(k_max);
        Ok((k_max, covered))
    }

    /// `p(K)` as an exact rational, for the families that admit one: the
    /// closed forms of the uniform, point-mass and geometric priors, and the
    /// beta-negative-binomial with integer parameters. `None` when the mass
    /// is irrational (callers fall back to the dyadic value of the `f64`
    /// pmf). Used by the exact-arithmetic validation recursion.
    pub(crate) fn pmf_rational(&self, k: u32) -> Option<BigRatio> {
        use num_traits::{One, Zero};
        if k < 1 {
            return Some(BigRatio::zero());
        }
        match self.kind {
            PriorKind::Uniform { lo, hi } => Some(if k >= lo && k <= hi {
                BigRatio::new(BigInt::one(), BigInt::from(hi - lo + 1))
            } else {
                BigRatio::zero()
            }),
            PriorKind::PointMass { k: k0 } => Some(if k == k0 {
                BigRatio::one()
            } else {
                BigRatio::zero()
            }),
            PriorKind::Geometric { p } => {
                // the stored f64 is itself a dyadic rational
                let pr = BigRatio::from_float(p)?;
                let q = BigRatio::one() - pr.clone();
                Some(pr * pow_ratio(q, k - 1))
            }
            PriorKind::BetaNegBinomial { r, a, b } => {
                let (ri, ai, bi) = (as_positive_int(r)?, as_positive_int(a)?, as_positive_int(b)?);
                let x = k - 1;
                // Γ(r+x)/(x!·Γ(r)) = C(r+x-1, x), and the Beta functions are
                // factorial ratios for integer arguments.
                let choose = factorial_ratio(ri + x - 1, ri - 1) / factorial_big(x);
                let beta_num = beta_int(ai + ri, bi + x);
                let beta_den = beta_int(ai, bi);
                Some(BigRatio::from_integer(choose) * beta_num / beta_den)
            }
            PriorKind::PointMassInfinity => Some(BigRatio::zero()),
        }
    }

    /// `P(K <= k_max)` by direct summation.
    pub fn cdf(&self, k_max: u32) -> f64 {
        if self.is_infinite() {
            return 0.0;
        }
        let stop = match self.upper_support() {
            Some(hi) => hi.min(k_max),
            None => k_max,
        };
        let mut cum = 0.0;
        for k in 1..=stop {
            cum += exp(self.log_pmf(k));
        }
        cum
    }
}

#[inline]
fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub(crate) type BigRatio = num_rational::Ratio<BigInt>;
use num_bigint::BigInt;

fn as_positive_int(x: f64) -> Option<u32> {
    if x == libm::floor(x) && x >= 1.0 && x <= u32::MAX as f64 {
        Some(x as u32)
    } else {
        None
    }
}

fn pow_ratio(base: BigRatio, mut e: u32) -> BigRatio {
    use num_traits::One;
    let mut acc = BigRatio::one();
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= sq.clone();
        }
        sq = sq.clone() * sq;
        e >>= 1;
    }
    acc
}

fn factorial_big(n: u32) -> BigInt {
    let mut acc = BigInt::from(1u32);
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// `hi! / lo!` as an exact integer.
fn factorial_ratio(hi: u32, lo: u32) -> BigInt {
    let mut acc = BigInt::from(1u32);
    for i in (lo + 1)..=hi {
        acc *= i;
    }
    acc
}

/// `B(a, b) = (a-1)!(b-1)!/(a+b-1)!` for positive integers.
fn beta_int(a: u32, b: u32) -> BigRatio {
    BigRatio::new(factorial_big(a - 1), factorial_ratio(a + b - 1, b - 1))
}

impl fmt::Display for ComponentCountPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PriorKind::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            PriorKind::Geometric { p } => write!(f, "geometric:{p}"),
            PriorKind::BetaNegBinomial { r, a, b } => write!(f, "bnb:{r}:{a}:{b}"),
            PriorKind::PointMass { k } => write!(f, "fixed:{k}"),
            PriorKind::PointMassInfinity => write!(f, "infinity"),
        }
    }
}

impl FromStr for ComponentCountPrior {
    type Err = Error;

    /// Grammar: `uniform:LO:HI`, `geometric:P`, `bnb:R:A:B`, `fixed:K`,
    /// `infinity`.
    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Parse {
            what: "component count prior",
            input: s.to_string(),
        };
        let mut parts = s.split(':');
        let head = parts.next().ok_or_else(err)?;
        let rest: alloc::vec::Vec<&str> = parts.collect();
        match (head, rest.as_slice()) {
            ("uniform", [lo, hi]) => Self::uniform(
                lo.parse().map_err(|_| err())?,
                hi.parse().map_err(|_| err())?,
            ),
            ("geometric", [p]) => Self::geometric(p.parse().map_err(|_| err())?),
            ("bnb", [r, a, b]) => Self::beta_neg_binomial(
                r.parse().map_err(|_| err())?,
                a.parse().map_err(|_| err())?,
                b.parse().map_err(|_| err())?,
            ),
            ("fixed", [k]) => Self::point_mass(k.parse().map_err(|_| err())?),
            ("infinity", []) => Ok(Self::point_mass_infinity()),
            _ => Err(err()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SequenceKind {
    Static { gamma: f64 },
    Dynamic { alpha: f64 },
}

/// The Dirichlet parameter sequence `γ_K`.
///
/// Static mixtures keep `γ_K ≡ γ` fixed; dynamic mixtures divide a
/// hyperparameter by the number of components, `γ_K = α/K`, which makes the
/// Dirichlet process the limiting case as all prior mass on `K` moves to
/// infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletSequence {
    kind: SequenceKind,
}

impl DirichletSequence {
    pub fn static_gamma(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Domain("gamma must be positive".to_string()));
        }
        if gamma < GAMMA_MIN {
            return Err(Error::Domain("gamma below 1e-8 is rejected".to_string()));
        }
        Ok(Self {
            kind: SequenceKind::Static { gamma },
        })
    }

    pub fn dynamic(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Domain("alpha must be positive".to_string()));
        }
        Ok(Self {
            kind: SequenceKind::Dynamic { alpha },
        })
    }

    /// `γ_K` for a given number of components.
    pub fn gamma_at(&self, k: u32) -> f64 {
        debug_assert!(k >= 1);
        match self.kind {
            SequenceKind::Static { gamma } => gamma,
            SequenceKind::Dynamic { alpha } => alpha / k as f64,
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self.kind, SequenceKind::Static { .. })
    }

    pub fn static_gamma_value(&self) -> Option<f64> {
        match self.kind {
            SequenceKind::Static { gamma } => Some(gamma),
            _ => None,
        }
    }

    pub fn dynamic_alpha(&self) -> Option<f64> {
        match self.kind {
            SequenceKind::Dynamic { alpha } => Some(alpha),
            _ => None,
        }
    }
}

impl fmt::Display for DirichletSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SequenceKind::Static { gamma } => write!(f, "static:{gamma}"),
            SequenceKind::Dynamic { alpha } => write!(f, "dynamic:{alpha}"),
        }
    }
}

impl FromStr for DirichletSequence {
    type Err = Error;

    /// Grammar: `static:GAMMA`, `dynamic:ALPHA`.
    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Parse {
            what: "Dirichlet sequence",
            input: s.to_string(),
        };
        match s.split_once(':') {
            Some(("static", g)) => Self::static_gamma(g.parse().map_err(|_| err())?),
            Some(("dynamic", a)) => Self::dynamic(a.parse().map_err(|_| err())?),
            _ => Err(err()),
        }
    }
}

/// How to truncate infinite sums over the number of components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    tail_mass_epsilon: f64,
    hard_cap: u32,
    min_covered_mass_warn: f64,
}

impl TruncationPolicy {
    pub fn new(tail_mass_epsilon: f64, hard_cap: u32, min_covered_mass_warn: f64) -> Result<Self> {
        if !(tail_mass_epsilon > 0.0 && tail_mass_epsilon < 1.0) {
            return Err(Error::Domain(
                "tail mass epsilon must lie in (0, 1)".to_string(),
            ));
        }
        if hard_cap < 1 {
            return Err(Error::Domain("hard cap must be at least 1".to_string()));
        }
        if !(min_covered_mass_warn > 0.0 && min_covered_mass_warn < 1.0) {
            return Err(Error::Domain(
                "warn threshold must lie in (0, 1)".to_string(),
            ));
        }
        Ok(Self {
            tail_mass_epsilon,
            hard_cap,
            min_covered_mass_warn,
        })
    }

    pub fn tail_mass_epsilon(&self) -> f64 {
        self.tail_mass_epsilon
    }

    pub fn hard_cap(&self) -> u32 {
        self.hard_cap
    }

    pub fn min_covered_mass_warn(&self) -> f64 {
        self.min_covered_mass_warn
    }
}

impl Default for TruncationPolicy {
    /// Tail mass 1e-10, hard cap 500, warn when coverage drops below 0.999.
    fn default() -> Self {
        Self {
            tail_mass_epsilon: 1e-10,
            hard_cap: 500,
            min_covered_mass_warn: 0.999,
        }
    }
}

/// Which of the three model classes a [`ModelSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelClass {
    /// Dirichlet process mixture with concentration `alpha`.
    Dpm { alpha: f64 },
    /// Mixture of finite mixtures with constant Dirichlet parameter.
    StaticMfm { gamma: f64 },
    /// Mixture of finite mixtures with `γ_K = α/K`.
    DynamicMfm { alpha: f64 },
}

/// A fully specified mixture model prior: sample size, prior on `K`,
/// Dirichlet sequence and truncation policy. This is the single input to
/// every induced-prior computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    n: u32,
    prior_k: ComponentCountPrior,
    gammas: DirichletSequence,
    trunc: TruncationPolicy,
}

impl ModelSpec {
    pub fn new(
        n: u32,
        prior_k: ComponentCountPrior,
        gammas: DirichletSequence,
        trunc: TruncationPolicy,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidSpec("sample size must be positive".to_string()));
        }
        if prior_k.is_infinite() && gammas.is_static() {
            return Err(Error::InvalidSpec(
                "a static Dirichlet parameter with K = infinity is undefined; \
                 the Dirichlet process arises only as the dynamic limit"
                    .to_string(),
            ));
        }
        if let Some(alpha) = gammas.dynamic_alpha() {
            // gamma_K = alpha/K shrinks with K; make sure it cannot fall
            // below the numeric guard within the truncation cap.
            if alpha / (trunc.hard_cap() as f64) < GAMMA_MIN && !prior_k.is_infinite() {
                return Err(Error::InvalidSpec(
                    "alpha / hard_cap falls below the 1e-8 Dirichlet parameter guard".to_string(),
                ));
            }
        }
        Ok(Self {
            n,
            prior_k,
            gammas,
            trunc,
        })
    }

    /// Dirichlet process mixture with concentration `alpha`.
    pub fn dpm(n: u32, alpha: f64) -> Result<Self> {
        Self::new(
            n,
            ComponentCountPrior::point_mass_infinity(),
            DirichletSequence::dynamic(alpha)?,
            TruncationPolicy::default(),
        )
    }

    /// Static MFM with Dirichlet parameter `gamma` and the given prior on `K`.
    pub fn static_mfm(n: u32, gamma: f64, prior_k: ComponentCountPrior) -> Result<Self> {
        Self::new(
            n,
            prior_k,
            DirichletSequence::static_gamma(gamma)?,
            TruncationPolicy::default(),
        )
    }

    /// Dynamic MFM with hyperparameter `alpha` and the given prior on `K`.
    pub fn dynamic_mfm(n: u32, alpha: f64, prior_k: ComponentCountPrior) -> Result<Self> {
        Self::new(
            n,
            prior_k,
            DirichletSequence::dynamic(alpha)?,
            TruncationPolicy::default(),
        )
    }

    /// Replace the truncation policy.
    pub fn with_truncation(mut self, trunc: TruncationPolicy) -> Result<Self> {
        self.trunc = trunc;
        Self::new(self.n, self.prior_k, self.gammas, self.trunc)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn prior_k(&self) -> &ComponentCountPrior {
        &self.prior_k
    }

    pub fn gammas(&self) -> &DirichletSequence {
        &self.gammas
    }

    pub fn truncation(&self) -> &TruncationPolicy {
        &self.trunc
    }

    pub fn class(&self) -> ModelClass {
        if self.prior_k.is_infinite() {
            ModelClass::Dpm {
                alpha: self.gammas.dynamic_alpha().expect("validated at construction"),
            }
        } else if let Some(gamma) = self.gammas.static_gamma_value() {
            ModelClass::StaticMfm { gamma }
        } else {
            ModelClass::DynamicMfm {
                alpha: self.gammas.dynamic_alpha().expect("two sequence kinds"),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logspace::exp;

    #[test]
    fn uniform_log_pmf() {
        let p = ComponentCountPrior::uniform(1, 30).unwrap();
        assert!((p.log_pmf(7) - (1.0f64 / 30.0).ln()).abs() < 1e-15);
        assert_eq!(p.log_pmf(31), LOG_ZERO);
        assert_eq!(p.log_pmf(0), LOG_ZERO);
    }

    #[test]
    fn point_mass_log_pmf() {
        let p = ComponentCountPrior::point_mass(5).unwrap();
        assert_eq!(p.log_pmf(5), 0.0);
        assert_eq!(p.log_pmf(4), LOG_ZERO);
    }

    #[test]
    fn geometric_mean_ten_parameterization() {
        // mean of K-1 is (1-p)/p = 10  =>  p = 1/11
        let p = ComponentCountPrior::geometric_with_mean(10.0).unwrap();
        assert!((exp(p.log_pmf(1)) - 1.0 / 11.0).abs() < 1e-15);
        let mean: f64 = (1..100_000u32)
            .map(|k| (k - 1) as f64 * exp(p.log_pmf(k)))
            .sum();
        assert!((mean - 10.0).abs() < 1e-9);
    }

    #[test]
    fn bnb_143_has_mean_one() {
        let p = ComponentCountPrior::beta_neg_binomial(1.0, 4.0, 3.0).unwrap();
        let mean: f64 = (1..=100_000u32)
            .map(|k| (k - 1) as f64 * exp(p.log_pmf(k)))
            .sum();
        assert!((mean - 1.0).abs() < 1e-6, "mean {mean}");
    }

    #[test]
    fn bnb_143_monotonically_decreasing() {
        let p = ComponentCountPrior::beta_neg_binomial(1.0, 4.0, 3.0).unwrap();
        for k in 1..=100u32 {
            assert!(p.log_pmf(k + 1) <= p.log_pmf(k));
        }
    }

    #[test]
    fn finite_support_priors_sum_to_one() {
        let cases = [
            ComponentCountPrior::uniform(1, 30).unwrap(),
            ComponentCountPrior::uniform(3, 3).unwrap(),
            ComponentCountPrior::point_mass(12).unwrap(),
        ];
        for p in cases {
            let total: f64 = (1..=40u32).map(|k| exp(p.log_pmf(k))).sum();
            assert!((total - 1.0).abs() < 1e-12, "{p} sums to {total}");
        }
    }

    #[test]
    fn infinite_support_priors_sum_to_one_up_to_tail() {
        let cases = [
            ComponentCountPrior::geometric(1.0 / 11.0).unwrap(),
            ComponentCountPrior::beta_neg_binomial(1.0, 4.0, 3.0).unwrap(),
        ];
        for p in cases {
            let total = p.cdf(2_000_000);
            assert!(total < 1.0 + 1e-12);
            assert!(total > 1.0 - 1e-9, "{p} covers {total}");
        }
    }

    #[test]
    fn infinity_prior_has_no_finite_mass() {
        let p = ComponentCountPrior::point_mass_infinity();
        for k in [1u32, 10, 1000] {
            assert_eq!(p.log_pmf(k), LOG_ZERO);
        }
    }

    #[test]
    fn gamma_at_static_and_dynamic() {
        let s = DirichletSequence::static_gamma(1.0).unwrap();
        assert_eq!(s.gamma_at(17), 1.0);
        let d = DirichletSequence::dynamic(0.4).unwrap();
        assert_eq!(d.gamma_at(4), 0.1);
        assert_eq!(d.gamma_at(1), 0.4);
    }

    #[test]
    fn dynamic_gamma_recovers_alpha_to_one_ulp() {
        // Binary floating point cannot guarantee (alpha/K)*K == alpha bit for
        // bit; code paths that need gamma_K * K use alpha directly instead.
        for alpha in [0.4, 1.0, 2.5] {
            let d = DirichletSequence::dynamic(alpha).unwrap();
            for k in 1..=2000u32 {
                let back = d.gamma_at(k) * k as f64;
                assert!((back - alpha).abs() <= alpha * f64::EPSILON);
            }
        }
    }

    #[test]
    fn truncation_bound_finite_supports() {
        let policy = TruncationPolicy::new(1e-12, 500, 0.999).unwrap();
        let u = ComponentCountPrior::uniform(1, 30).unwrap();
        let (k_max, covered) = u.truncation_bound(1, &policy).unwrap();
        assert_eq!(k_max, 30);
        assert!((covered - 1.0).abs() < 1e-12);

        let pm = ComponentCountPrior::point_mass(5).unwrap();
        let (k_max, covered) = pm.truncation_bound(1, &policy).unwrap();
        assert_eq!(k_max, 5);
        assert!((covered - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncation_bound_bnb_tail() {
        // Frozen from an independent cumulative scan of the closed-form pmf
        // 1440 / ((x+3)(x+4)(x+5)(x+6)(x+7)): the survival function first
        // drops below 1e-10 at K = 1373.
        let policy = TruncationPolicy::new(1e-10, 5000, 0.999).unwrap();
        let p = ComponentCountPrior::beta_neg_binomial(1.0, 4.0, 3.0).unwrap();
        let (k_max, covered) = p.truncation_bound(1, &policy).unwrap();
        assert_eq!(k_max, 1373);
        assert!(covered >= 1.0 - 1e-10);
    }

    #[test]
    fn truncation_bound_respects_lower_and_cap() {
        let policy = TruncationPolicy::new(1e-10, 500, 0.999).unwrap();
        let p = ComponentCountPrior::beta_neg_binomial(1.0, 4.0, 3.0).unwrap();
        let (k_max, covered) = p.truncation_bound(1, &policy).unwrap();
        assert_eq!(k_max, 500, "cap binds before the 1e-10 tail");
        assert!(covered < 1.0 - 1e-10);
        assert!(covered > 0.999);

        let pm = ComponentCountPrior::point_mass(5).unwrap();
        let (k_max, _) = pm.truncation_bound(9, &policy).unwrap();
        assert_eq!(k_max, 9, "lower bound pushes past the support");
    }

    #[test]
    fn truncation_bound_rejects_infinity() {
        let policy = TruncationPolicy::default();
        let p = ComponentCountPrior::point_mass_infinity();
        assert!(matches!(
            p.truncation_bound(1, &policy),
            Err(Error::InfiniteSupport)
        ));
    }

    #[test]
    fn spec_rejects_static_with_infinite_k() {
        let err = ModelSpec::new(
            10,
            ComponentCountPrior::point_mass_infinity(),
            DirichletSequence::static_gamma(1.0).unwrap(),
            TruncationPolicy::default(),
        );
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn spec_classification() {
        let dpm = ModelSpec::dpm(10, 0.5).unwrap();
        assert_eq!(dpm.class(), ModelClass::Dpm { alpha: 0.5 });
        let prior = ComponentCountPrior::uniform(1, 30).unwrap();
        let st = ModelSpec::static_mfm(10, 1.0, prior).unwrap();
        assert_eq!(st.class(), ModelClass::StaticMfm { gamma: 1.0 });
        let dy = ModelSpec::dynamic_mfm(10, 0.4, prior).unwrap();
        assert_eq!(dy.class(), ModelClass::DynamicMfm { alpha: 0.4 });
    }

    #[test]
    fn parse_grammar_roundtrip() {
        for s in ["uniform:1:30", "geometric:0.25", "bnb:1:4:3", "fixed:5", "infinity"] {
            let p: ComponentCountPrior = s.parse().unwrap();
            assert_eq!(alloc::format!("{p}"), s);
        }
        for s in ["static:1", "dynamic:0.4"] {
            let g: DirichletSequence = s.parse().unwrap();
            assert_eq!(alloc::format!("{g}"), s);
        }
        assert!("uniform:30".parse::<ComponentCountPrior>().is_err());
        assert!("nope:1".parse::<ComponentCountPrior>().is_err());
        assert!("static:-1".parse::<DirichletSequence>().is_err());
        assert!("geometric:1.5".parse::<ComponentCountPrior>().is_err());
    }

    #[test]
    fn gamma_guard_rejected() {
        assert!(DirichletSequence::static_gamma(1e-9).is_err());
        // dynamic alpha small enough that alpha/cap violates the guard
        let prior = ComponentCountPrior::uniform(1, 30).unwrap();
        let spec = ModelSpec::new(
            10,
            prior,
            DirichletSequence::dynamic(1e-6).unwrap(),
            TruncationPolicy::default(),
        );
        assert!(spec.is_err());
    }
}
