//! Count-truncated polynomials with block-floating-point coefficients.
//!
//! Coefficients are stored as `f64` mantissas sharing one binary exponent per
//! chunk of [`CHUNK`] consecutive degrees. This keeps the inner convolution
//! loops in plain `f64` arithmetic while the representable range across the
//! whole polynomial is that of the log domain. Within a chunk the usual `f64`
//! dynamic range (about 700 nats) applies.
//!
//! Degrees above `cap` are lumped into a single overflow cell held in the log
//! domain, so the polynomial always carries its full mass.

use super::LogReal;

pub const CHUNK: usize = 16;
const EMPTY: i32 = i32::MIN;

/// `2^k` for any `k`, flushing to zero below the subnormal range.
#[inline]
fn pow2(k: i32) -> f64 {
    if k > 1023 {
        f64::INFINITY
    } else if k >= -1022 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else if k >= -1074 {
        f64::from_bits(1u64 << (k + 1074))
    } else {
        0.0
    }
}

/// Exponent `e` with `x / 2^e` in `[0.5, 1)`, for finite `x > 0`.
#[inline]
fn binary_exponent(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_finite());
    if x >= f64::MIN_POSITIVE {
        (((x.to_bits() >> 52) & 0x7ff) as i32) - 1022
    } else {
        binary_exponent(x * pow2(64)) - 64
    }
}

/// Splits a positive log value into `(mantissa, exponent)` with the mantissa in `[0.5, 1)`.
#[inline]
fn split_log(l: LogReal) -> (f64, i32) {
    let e = (l.ln() / std::f64::consts::LN_2).floor() as i32 + 1;
    let m = (l.ln() - e as f64 * std::f64::consts::LN_2).exp();
    (m, e)
}

/// A positive scalar split as `mant * 2^exp`, also kept in the log domain.
///
/// Built from an `f64` the split is exact; built from a [`LogReal`] it carries
/// the rounding of one `exp`.
#[derive(Clone, Copy, Debug)]
pub struct Weight {
    mant: f64,
    exp: i32,
    log: LogReal,
}

impl Weight {
    pub fn exact(x: f64) -> Self {
        assert!(x >= 0.0 && x.is_finite(), "weight must be finite and non-negative, got {x}");
        if x == 0.0 {
            return Weight { mant: 0.0, exp: 0, log: LogReal::ZERO };
        }
        let e = binary_exponent(x);
        let mant = if e < -1000 { x * pow2(64) * pow2(-e - 64) } else { x * pow2(-e) };
        Weight { mant, exp: e, log: LogReal::from_linear(x) }
    }

    pub fn is_zero(&self) -> bool {
        self.log.is_zero()
    }
}

impl From<LogReal> for Weight {
    fn from(l: LogReal) -> Self {
        if l.is_zero() {
            return Weight { mant: 0.0, exp: 0, log: l };
        }
        let (mant, exp) = split_log(l);
        Weight { mant, exp, log: l }
    }
}

#[derive(Clone, Debug)]
pub struct ScaledPoly {
    mant: Vec<f64>,
    exps: Vec<i32>,
    /// Chunks at index `>= active` are all zero.
    active: usize,
    overflow: LogReal,
}

impl ScaledPoly {
    /// The zero polynomial holding degrees `0..=cap`.
    pub fn zeros(cap: usize) -> Self {
        let len = cap + 1;
        ScaledPoly { mant: vec![0.0; len], exps: vec![EMPTY; len.div_ceil(CHUNK)], active: 0, overflow: LogReal::ZERO }
    }

    /// `coef * x^degree`.
    pub fn monomial(cap: usize, degree: usize, coef: impl Into<Weight>) -> Self {
        let coef: Weight = coef.into();
        let mut p = Self::zeros(cap);
        if coef.is_zero() {
            return p;
        }
        if degree > cap {
            p.overflow = coef.log;
        } else {
            let (m, e) = (coef.mant, coef.exp);
            p.mant[degree] = m;
            p.exps[degree / CHUNK] = e;
            p.active = degree / CHUNK + 1;
        }
        p
    }

    pub fn from_coeffs(cap: usize, coeffs: &[LogReal]) -> Self {
        let mut p = Self::zeros(cap);
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_scaled(&Self::monomial(cap, k, c), 0, LogReal::ONE);
        }
        p
    }

    #[inline]
    pub fn cap(&self) -> usize {
        self.mant.len() - 1
    }

    #[inline]
    pub fn overflow(&self) -> LogReal {
        self.overflow
    }

    pub fn coeff(&self, k: usize) -> LogReal {
        let e = self.exps[k / CHUNK];
        let m = self.mant[k];
        if e == EMPTY || m == 0.0 {
            return LogReal::ZERO;
        }
        LogReal::from_ln(m.ln() + e as f64 * std::f64::consts::LN_2)
    }

    pub fn coeffs(&self) -> Vec<LogReal> {
        (0..=self.cap()).map(|k| self.coeff(k)).collect()
    }

    /// Sum of all coefficients including the overflow cell.
    pub fn total(&self) -> LogReal {
        let mut v = self.coeffs();
        v.push(self.overflow);
        super::log_sum_exp(&v)
    }

    fn chunk_range(&self, c: usize) -> std::ops::Range<usize> {
        let lo = c * CHUNK;
        lo..(lo + CHUNK).min(self.mant.len())
    }

    /// Rescales every chunk so its largest mantissa lies in `[0.5, 1)`.
    pub fn normalize(&mut self) {
        for c in 0..self.active {
            let r = self.chunk_range(c);
            let max = self.mant[r.clone()].iter().fold(0.0f64, |a, &b| a.max(b));
            if max == 0.0 || self.exps[c] == EMPTY {
                self.exps[c] = EMPTY;
                self.mant[r].iter_mut().for_each(|m| *m = 0.0);
                continue;
            }
            let e = binary_exponent(max);
            if e != 0 {
                let s = pow2(-e);
                self.mant[r].iter_mut().for_each(|m| *m *= s);
                self.exps[c] += e;
            }
        }
        while self.active > 0 && self.exps[self.active - 1] == EMPTY {
            self.active -= 1;
        }
    }

    /// Resets to the zero polynomial without reallocating.
    pub fn clear(&mut self) {
        let end = self.support_end();
        self.mant[..end].iter_mut().for_each(|m| *m = 0.0);
        self.exps[..self.active].iter_mut().for_each(|e| *e = EMPTY);
        self.active = 0;
        self.overflow = LogReal::ZERO;
    }

    /// One past the highest degree that may be non-zero.
    pub fn support_end(&self) -> usize {
        (self.active * CHUNK).min(self.mant.len())
    }

    /// Adds `vals[i]` (times `2^src_exp`) at degrees `start + i` within chunk `c`,
    /// aligning the chunk exponent first.
    #[inline]
    fn accumulate(&mut self, c: usize, start: usize, vals: &[f64], src_exp: i32) {
        let dst_exp = self.exps[c];
        self.active = self.active.max(c + 1);
        let scale = if dst_exp == EMPTY {
            self.exps[c] = src_exp;
            1.0
        } else if src_exp > dst_exp {
            let s = pow2(dst_exp - src_exp);
            let r = self.chunk_range(c);
            self.mant[r].iter_mut().for_each(|m| *m *= s);
            self.exps[c] = src_exp;
            1.0
        } else {
            pow2(src_exp - dst_exp)
        };
        if scale == 0.0 {
            return;
        }
        for (d, v) in self.mant[start..start + vals.len()].iter_mut().zip(vals) {
            *d += v * scale;
        }
    }

    /// `self += factor * x^shift * src`. Degrees pushed past `cap` go to overflow.
    pub fn add_scaled(&mut self, src: &ScaledPoly, shift: usize, factor: impl Into<Weight>) {
        debug_assert_eq!(self.cap(), src.cap());
        let w: Weight = factor.into();
        if w.is_zero() {
            return;
        }
        let cap = self.cap();
        let (fm, fe, factor) = (w.mant, w.exp, w.log);
        let mut spill: Vec<LogReal> = vec![self.overflow, src.overflow * factor];
        let mut buf = [0.0f64; CHUNK];
        for c in 0..src.active {
            let se = src.exps[c];
            if se == EMPTY {
                continue;
            }
            let r = src.chunk_range(c);
            let lo = r.start + shift;
            if lo > cap {
                for k in r {
                    let v = src.coeff(k);
                    if !v.is_zero() {
                        spill.push(v * factor);
                    }
                }
                continue;
            }
            let n = r.len();
            for (b, m) in buf.iter_mut().zip(&src.mant[r.clone()]) {
                *b = m * fm;
            }
            // Split the shifted run at destination chunk boundaries and at cap.
            let mut i = 0;
            while i < n {
                let deg = lo + i;
                if deg > cap {
                    for k in i..n {
                        let v = src.coeff(r.start + k);
                        if !v.is_zero() {
                            spill.push(v * factor);
                        }
                    }
                    break;
                }
                let dc = deg / CHUNK;
                let room = ((dc + 1) * CHUNK).min(cap + 1) - deg;
                let take = room.min(n - i);
                self.accumulate(dc, deg, &buf[i..i + take], se + fe);
                i += take;
            }
        }
        self.overflow = super::log_sum_exp(&spill);
        self.normalize();
    }

    /// `self += a * b`, truncated at `cap` with the excess lumped into overflow.
    pub fn add_product(&mut self, a: &ScaledPoly, b: &ScaledPoly) {
        let cap = self.cap();
        debug_assert!(a.cap() == cap && b.cap() == cap);
        let nchunks = self.exps.len();
        let mut part = [0.0f64; 2 * CHUNK];
        for ia in 0..a.active {
            let ea = a.exps[ia];
            if ea == EMPTY {
                continue;
            }
            let ra = a.chunk_range(ia);
            for ib in 0..b.active.min(nchunks - ia) {
                let eb = b.exps[ib];
                if eb == EMPTY {
                    continue;
                }
                let rb = b.chunk_range(ib);
                part.iter_mut().for_each(|p| *p = 0.0);
                let bs = &b.mant[rb.clone()];
                for (i, &av) in a.mant[ra.clone()].iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    for (p, &bv) in part[i..i + bs.len()].iter_mut().zip(bs) {
                        *p += av * bv;
                    }
                }
                let base = ra.start + rb.start;
                let e = ea + eb;
                // low half lands in chunk ia+ib, high half in the next one
                let oc = base / CHUNK;
                let low_end = ((oc + 1) * CHUNK).min(cap + 1);
                let low_len = low_end - base;
                self.accumulate(oc, base, &part[..low_len], e);
                let used = ra.len() + rb.len() - 1;
                if used > low_len && low_end <= cap {
                    let high_len = (used - low_len).min(cap + 1 - low_end);
                    self.accumulate(oc + 1, low_end, &part[low_len..low_len + high_len], e);
                }
            }
        }
        let spill = Self::product_overflow(a, b);
        self.overflow = self.overflow + spill;
        self.normalize();
    }

    /// Mass of `a * b` at degrees above `cap`, including both overflow cells.
    fn product_overflow(a: &ScaledPoly, b: &ScaledPoly) -> LogReal {
        let cap = a.cap();
        // suffix[m] = sum_{j >= m} b_j including overflow(b); constant past b's support
        let b_end = b.support_end();
        let mut suffix = vec![b.overflow; b_end + 1];
        for j in (0..b_end).rev() {
            suffix[j] = suffix[j + 1] + b.coeff(j);
        }
        let tail = |m: usize| if m >= b_end { b.overflow } else { suffix[m] };
        let mut terms = Vec::with_capacity(a.support_end() + 1);
        for i in 0..a.support_end() {
            let ai = a.coeff(i);
            if !ai.is_zero() {
                terms.push(ai * tail(cap + 1 - i));
            }
        }
        terms.push(a.overflow * suffix[0]);
        super::log_sum_exp(&terms)
    }
}
