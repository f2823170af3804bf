//! Log-domain arithmetic and the small numerical kernels everything else
//! leans on.
//!
//! All weights, partition sums and measure values in this crate live in the
//! log domain: a nonnegative quantity `v` is stored as `ln v`, with
//! `f64::NEG_INFINITY` representing exact zero. Signed quantities (function
//! coefficients) carry an explicit sign next to the log of the magnitude.

/// ln(x + y) given ln x and ln y, for nonnegative x, y.
///
/// Handles the zero (`-inf`) cases exactly and never overflows for finite
/// inputs: the sum is anchored at the larger operand.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(Σ e^{x_i}) over a slice, tolerant of `-inf` entries.
pub fn log_sum(xs: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &x in xs {
        if x > m {
            m = x;
        }
    }
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    for &x in xs {
        if x != f64::NEG_INFINITY {
            acc += (x - m).exp();
        }
    }
    m + acc.ln()
}

/// A signed quantity in the log domain: `sign * e^{log_abs}`.
///
/// `sign` is -1, 0 or +1; zero is canonically `(0, -inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub log_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0, log_abs: f64::NEG_INFINITY };

    pub fn from_value(v: f64) -> SignedLog {
        if v == 0.0 {
            SignedLog::ZERO
        } else if v > 0.0 {
            SignedLog { sign: 1, log_abs: v.ln() }
        } else {
            SignedLog { sign: -1, log_abs: (-v).ln() }
        }
    }

    pub fn from_log(log_abs: f64) -> SignedLog {
        if log_abs == f64::NEG_INFINITY {
            SignedLog::ZERO
        } else {
            SignedLog { sign: 1, log_abs }
        }
    }

    pub fn value(self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Multiply by a nonnegative log-domain factor.
    pub fn scale_log(self, log_factor: f64) -> SignedLog {
        if self.sign == 0 || log_factor == f64::NEG_INFINITY {
            SignedLog::ZERO
        } else {
            SignedLog { sign: self.sign, log_abs: self.log_abs + log_factor }
        }
    }

    pub fn neg(self) -> SignedLog {
        SignedLog { sign: -self.sign, log_abs: self.log_abs }
    }
}

/// Two-accumulator signed log-sum: positive and negative parts are summed
/// separately in the log domain and only combined at the very end, so
/// cancellation happens once instead of term by term.
#[derive(Debug, Clone, Copy)]
pub struct SignedAccumulator {
    pos: f64,
    neg: f64,
}

impl SignedAccumulator {
    pub fn new() -> SignedAccumulator {
        SignedAccumulator { pos: f64::NEG_INFINITY, neg: f64::NEG_INFINITY }
    }

    pub fn add(&mut self, term: SignedLog) {
        match term.sign {
            1 => self.pos = log_add(self.pos, term.log_abs),
            -1 => self.neg = log_add(self.neg, term.log_abs),
            _ => {}
        }
    }

    pub fn total(&self) -> SignedLog {
        if self.pos == f64::NEG_INFINITY && self.neg == f64::NEG_INFINITY {
            return SignedLog::ZERO;
        }
        if self.neg == f64::NEG_INFINITY {
            return SignedLog { sign: 1, log_abs: self.pos };
        }
        if self.pos == f64::NEG_INFINITY {
            return SignedLog { sign: -1, log_abs: self.neg };
        }
        // ln|e^p - e^n| anchored at the larger part.
        let (hi, lo, sign) =
            if self.pos >= self.neg { (self.pos, self.neg, 1i8) } else { (self.neg, self.pos, -1i8) };
        let diff = -(lo - hi).exp_m1(); // 1 - e^{lo-hi} in (0, 1]
        if diff == 0.0 {
            SignedLog::ZERO
        } else {
            SignedLog { sign, log_abs: hi + diff.ln() }
        }
    }
}

impl Default for SignedAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

/// Bisection for a continuous function with a sign change on `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must have opposite (non-zero) signs unless one of
/// them is already within `f_tol` of zero. Returns the midpoint of the final
/// bracket, which has width at most `x_tol`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..max_iter {
        if (hi - lo).abs() <= x_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Polynomial extrapolation to zero through the points `(xs[i], ys[i])`
/// (Neville's scheme). Used for the Richardson step of the epsilon-schedule:
/// with three points it removes the first- and second-order terms in x.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let n = xs.len();
    let mut t = ys.to_vec();
    for level in 1..n {
        for i in 0..n - level {
            let xi = xs[i];
            let xj = xs[i + level];
            // value at 0 of the interpolant through columns i..=i+level
            t[i] = (xi * t[i + 1] - xj * t[i]) / (xi - xj);
        }
    }
    t[0]
}

/// Least-squares line `y = c + s x`; returns `(c, s, max |resid|)`.
/// `None` when fewer than two points or degenerate x spread.
pub fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 {
        return None;
    }
    let s = (n * sxy - sx * sy) / det;
    let c = (sy - s * sx) / n;
    let mut rmax = 0.0f64;
    for &(x, y) in pts {
        rmax = rmax.max((y - c - s * x).abs());
    }
    Some((c, s, rmax))
}

/// FNV-1a 64-bit hash, used for the deterministic parameter fingerprint in
/// reports. Not cryptographic; stability across runs is all that matters.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
