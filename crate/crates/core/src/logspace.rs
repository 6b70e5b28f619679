//! Log-domain arithmetic helpers.
//!
//! Everything downstream works with logarithms of strictly positive
//! quantities (gamma-function ratios, partition probabilities) whose linear
//! values overflow or underflow an `f64` long before the sample sizes of
//! interest. Zero probability is represented by `f64::NEG_INFINITY`.

/// Log-domain representation of zero.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Natural log of the gamma function, `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln n!` via the gamma function.
#[inline]
pub fn ln_factorial(n: u32) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln(exp(a) + exp(b))` without leaving the log domain.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == LOG_ZERO {
        return b;
    }
    if b == LOG_ZERO {
        return a;
    }
    if a >= b {
        a + ln_1p(exp(b - a))
    } else {
        b + ln_1p(exp(a - b))
    }
}

/// `ln(exp(a) - exp(b))` for `a >= b`; returns [`LOG_ZERO`] when they cancel.
#[inline]
pub fn log_sub(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b || a == LOG_ZERO);
    if b == LOG_ZERO {
        return a;
    }
    let d = exp(b - a);
    if d >= 1.0 {
        LOG_ZERO
    } else {
        a + ln_1p(-d)
    }
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps a running maximum and a Kahan-compensated sum of rescaled
/// exponentials, so a sum over thousands of terms loses only a few ulps.
/// Terms are added in caller order, which keeps reductions deterministic.
#[derive(Debug, Clone, Copy)]
pub struct LogSumAcc {
    max: f64,
    sum: f64,
    comp: f64,
}

impl LogSumAcc {
    pub fn new() -> Self {
        LogSumAcc {
            max: LOG_ZERO,
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    fn kahan_add(&mut self, term: f64) {
        let y = term - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    /// Add `exp(x)` to the accumulated total.
    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == LOG_ZERO {
            return;
        }
        if x <= self.max {
            self.kahan_add(exp(x - self.max));
        } else {
            if self.sum != 0.0 {
                let scale = exp(self.max - x);
                self.sum *= scale;
                self.comp *= scale;
            }
            self.max = x;
            self.kahan_add(1.0);
        }
    }

    /// `ln` of the accumulated sum.
    pub fn total(&self) -> f64 {
        if self.sum <= 0.0 || self.max == LOG_ZERO {
            LOG_ZERO
        } else {
            self.max + ln(self.sum)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.max == LOG_ZERO
    }
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self::new()
    }
}

/// A real number stored as a sign and the log of its magnitude.
///
/// Partition functionals may have kernels with negative values, so moment
/// accumulations cannot stay in the plain log domain. Magnitude zero is
/// `sign == 0` with `ln_abs == LOG_ZERO`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        ln_abs: LOG_ZERO,
    };

    pub fn new(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == LOG_ZERO {
            SignedLog::ZERO
        } else {
            SignedLog { sign, ln_abs }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            SignedLog::ZERO
        } else if x > 0.0 {
            SignedLog { sign: 1, ln_abs: ln(x) }
        } else {
            SignedLog { sign: -1, ln_abs: ln(-x) }
        }
    }

    /// Multiply by a strictly positive factor given in the log domain.
    pub fn scale(self, ln_factor: f64) -> Self {
        SignedLog::new(self.sign, self.ln_abs + ln_factor)
    }

    pub fn mul(self, other: SignedLog) -> Self {
        SignedLog::new(self.sign * other.sign, self.ln_abs + other.ln_abs)
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            1 => exp(self.ln_abs),
            _ => -exp(self.ln_abs),
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }
}

/// Sign-tracked log-sum-exp: positive and negative parts accumulate
/// separately and are combined once at the end.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignedLogAcc {
    pos: LogSumAcc,
    neg: LogSumAcc,
}

impl SignedLogAcc {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, term: SignedLog) {
        match term.sign {
            1 => self.pos.add(term.ln_abs),
            -1 => self.neg.add(term.ln_abs),
            _ => {}
        }
    }

    pub fn total(&self) -> SignedLog {
        let p = self.pos.total();
        let n = self.neg.total();
        if p >= n {
            SignedLog::new(1, log_sub(p, n))
        } else {
            SignedLog::new(-1, log_sub(n, p))
        }
    }
}
