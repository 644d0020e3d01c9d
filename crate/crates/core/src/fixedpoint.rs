//! Two's-complement fixed-point numbers with truncated multiplication and
//! its restoring-division inverse.
//!
//! A value in format `(n_int, n_frac)` is stored as a signed raw integer of
//! `n = n_int + n_frac` bits and represents `raw * 2^-n_frac`. Every circuit
//! register that holds a number uses these kernels, so the classical engine
//! and the simulator agree bit for bit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxFormat {
    pub n_int: u32,
    pub n_frac: u32,
}

impl FxFormat {
    pub fn new(n_int: u32, n_frac: u32) -> Result<Self> {
        if n_int < 1 {
            return Err(Error::InvalidFormat("n_int must be at least 1".into()));
        }
        if n_int + n_frac > 64 {
            return Err(Error::InvalidFormat(format!(
                "total width {} exceeds 64 bits",
                n_int + n_frac
            )));
        }
        Ok(Self { n_int, n_frac })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.n_int, self.n_frac).map(|_| ())
    }

    /// Total number of bits.
    pub fn bits(&self) -> u32 {
        self.n_int + self.n_frac
    }

    pub fn min_raw(&self) -> i64 {
        -(1i128 << (self.bits() - 1)) as i64
    }

    pub fn max_raw(&self) -> i64 {
        ((1i128 << (self.bits() - 1)) - 1) as i64
    }

    pub fn ulp(&self) -> f64 {
        (-(self.n_frac as f64)).exp2()
    }

    pub fn scale(&self) -> f64 {
        (self.n_frac as f64).exp2()
    }

    pub fn fits(&self, raw: i128) -> bool {
        raw >= self.min_raw() as i128 && raw <= self.max_raw() as i128
    }

    /// Reduces an integer modulo `2^n` into the signed range.
    pub fn wrap(&self, raw: i128) -> i64 {
        let n = self.bits();
        let shift = 128 - n;
        ((raw << shift) >> shift) as i64
    }

    /// Raw value as an unsigned `n`-bit pattern (register contents).
    pub fn to_bits(&self, raw: i64) -> u128 {
        (raw as i128 as u128) & mask(self.bits())
    }

    /// Sign-extends an `n`-bit pattern.
    pub fn from_bits(&self, bits: u128) -> i64 {
        self.wrap(bits as i128)
    }

    /// Floor encoding of a real value; errors when out of range.
    pub fn encode(&self, v: f64) -> Result<i64> {
        let scaled = (v * self.scale()).floor();
        if !scaled.is_finite() || scaled < self.min_raw() as f64 || scaled > self.max_raw() as f64 {
            return Err(Error::NotRepresentable {
                value: v,
                format: self.to_string(),
            });
        }
        Ok(scaled as i64)
    }

    pub fn decode(&self, raw: i64) -> f64 {
        raw as f64 * self.ulp()
    }
}

impl fmt::Display for FxFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.n_int, self.n_frac)
    }
}

pub(crate) fn mask(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxNum {
    raw: i64,
    format: FxFormat,
}

impl FxNum {
    pub fn from_raw(raw: i64, format: FxFormat) -> Result<Self> {
        if !format.fits(raw as i128) {
            return Err(Error::Overflow { op: "from_raw" });
        }
        Ok(Self { raw, format })
    }

    pub fn from_f64(v: f64, format: FxFormat) -> Result<Self> {
        Ok(Self {
            raw: format.encode(v)?,
            format,
        })
    }

    pub fn zero(format: FxFormat) -> Self {
        Self { raw: 0, format }
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> FxFormat {
        self.format
    }

    pub fn to_f64(&self) -> f64 {
        self.format.decode(self.raw)
    }

    fn same_format(&self, other: &FxNum) -> Result<FxFormat> {
        if self.format != other.format {
            return Err(Error::FormatMismatch {
                left: self.format.to_string(),
                right: other.format.to_string(),
            });
        }
        Ok(self.format)
    }
}

impl fmt::Display for FxNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.to_f64(), self.format)
    }
}

/// `x + y` modulo `2^n`, as an adder register computes it.
pub fn fx_add(x: FxNum, y: FxNum) -> Result<FxNum> {
    let fmt = x.same_format(&y)?;
    Ok(FxNum {
        raw: fmt.wrap(x.raw as i128 + y.raw as i128),
        format: fmt,
    })
}

/// `x - y` modulo `2^n`.
pub fn fx_sub(x: FxNum, y: FxNum) -> Result<FxNum> {
    let fmt = x.same_format(&y)?;
    Ok(FxNum {
        raw: fmt.wrap(x.raw as i128 - y.raw as i128),
        format: fmt,
    })
}

/// True iff `x > y`, read off the sign of `y - x` computed with one guard bit.
pub fn fx_compare(x: FxNum, y: FxNum) -> Result<bool> {
    x.same_format(&y)?;
    let diff = y.raw as i128 - x.raw as i128;
    Ok(diff < 0)
}

/// Contribution of bit `bit` of the multiplier: `y` shifted to the bit's
/// weight, dropping digits below the last fractional place.
#[inline]
pub(crate) fn partial_term(y_raw: i64, bit: u32, n_frac: u32) -> i128 {
    let y = y_raw as i128;
    if bit >= n_frac {
        y << (bit - n_frac)
    } else {
        y >> (n_frac - bit)
    }
}

/// Unchecked truncated product in raw units.
///
/// The sign bit of `x` carries weight `-2^(n_int-1)`; `y` is shifted
/// arithmetically, so truncation always rounds toward minus infinity.
pub(crate) fn trunc_mul_raw(x_raw: i64, y_raw: i64, fmt: FxFormat) -> i128 {
    let n = fmt.bits();
    let bits = fmt.to_bits(x_raw);
    let mut acc = 0i128;
    for b in 0..n {
        if bits >> b & 1 == 1 {
            let t = partial_term(y_raw, b, fmt.n_frac);
            if b == n - 1 {
                acc -= t;
            } else {
                acc += t;
            }
        }
    }
    acc
}

/// Truncated product of two same-format numbers.
pub fn trunc_mul(x: FxNum, y: FxNum) -> Result<FxNum> {
    let fmt = x.same_format(&y)?;
    let p = trunc_mul_raw(x.raw, y.raw, fmt);
    if !fmt.fits(p) {
        return Err(Error::Overflow { op: "trunc_mul" });
    }
    Ok(FxNum {
        raw: p as i64,
        format: fmt,
    })
}

/// Truncated product reduced modulo `2^n`, as an accumulating multiplier
/// register computes it.
pub fn trunc_mul_wrapping(x: FxNum, y: FxNum) -> Result<FxNum> {
    let fmt = x.same_format(&y)?;
    Ok(FxNum {
        raw: fmt.wrap(trunc_mul_raw(x.raw, y.raw, fmt)),
        format: fmt,
    })
}

/// Restoring division in raw units. Total: a non-positive divisor or a
/// negative dividend yields zero. Returns the quotient and whether it is an
/// exact preimage under [`trunc_mul`].
pub(crate) fn trunc_div_raw(z_raw: i64, y_raw: i64, fmt: FxFormat) -> (i64, bool) {
    if y_raw <= 0 {
        return (0, z_raw == 0);
    }
    let n = fmt.bits();
    let mut rem = z_raw as i128;
    let mut q = 0i64;
    // The sign bit is never set: quotients are non-negative.
    for b in (0..n - 1).rev() {
        let t = partial_term(y_raw, b, fmt.n_frac);
        if t > 0 && rem >= t {
            rem -= t;
            q |= 1 << b;
        }
    }
    (q, rem == 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quotient {
    pub value: FxNum,
    /// `trunc_mul(value, y) == z`.
    pub exact: bool,
}

/// Inverse of [`trunc_mul`] in its first argument.
///
/// When `z` has no preimage the largest-below quotient is returned with
/// `exact = false`.
pub fn trunc_div(z: FxNum, y: FxNum) -> Result<Quotient> {
    let fmt = z.same_format(&y)?;
    if y.raw <= 0 {
        return Err(Error::NonPositiveDivisor);
    }
    let (q, exact) = trunc_div_raw(z.raw, y.raw, fmt);
    Ok(Quotient {
        value: FxNum { raw: q, format: fmt },
        exact,
    })
}

/// Whether every set bit of `x` contributes a non-zero partial term for
/// multiplier `y`. When this holds (and the product does not overflow) the
/// restoring division recovers `x` exactly; otherwise `trunc_mul(., y)` is
/// not injective at `x`.
pub fn digits_determined(x: FxNum, y: FxNum) -> bool {
    if x.format != y.format || x.raw < 0 || y.raw <= 0 {
        return false;
    }
    let fmt = x.format;
    (0..fmt.bits() - 1)
        .filter(|b| x.raw >> b & 1 == 1)
        .all(|b| partial_term(y.raw, b, fmt.n_frac) > 0)
}

/// `⌊√x⌋` in raw units (zero for non-positive `x`), reduced modulo `2^n`.
pub(crate) fn sqrt_raw(x_raw: i64, fmt: FxFormat) -> i64 {
    let r = if x_raw <= 0 { 0 } else { ((x_raw as u128) << fmt.n_frac).isqrt() };
    fmt.wrap(r as i128)
}

/// `⌊arccos x⌋` in raw units with `x` clamped to `[−1, 1]`.
pub(crate) fn arccos_raw(x_raw: i64, fmt: FxFormat) -> Result<i64> {
    fmt.encode(fmt.decode(x_raw).clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n_int: u32, n_frac: u32) -> FxFormat {
        FxFormat::new(n_int, n_frac).unwrap()
    }

    fn num(v: f64, fmt: FxFormat) -> FxNum {
        FxNum::from_f64(v, fmt).unwrap()
    }

    #[test]
    fn format_invariants() {
        assert!(FxFormat::new(0, 4).is_err());
        assert!(FxFormat::new(40, 25).is_err());
        assert!(FxFormat::new(1, 63).is_ok());
        let q = f(2, 2);
        assert_eq!((q.min_raw(), q.max_raw()), (-8, 7));
        assert_eq!(q.from_bits(q.to_bits(-3)), -3);
    }

    #[test]
    fn encode_floors() {
        let q = f(4, 4);
        for k in -200..200 {
            let v = k as f64 * 0.013;
            let back = q.decode(q.encode(v).unwrap());
            assert_eq!(back, (v * 16.0).floor() / 16.0);
        }
        assert!(q.encode(8.0).is_err());
        assert!(q.encode(-8.0).is_ok());
    }

    #[test]
    fn add_small_cases() {
        let q = f(2, 2);
        // 2.75 needs a third integer bit; at 2.2 the sum wraps.
        assert_eq!(fx_add(num(1.5, q), num(1.25, q)).unwrap().to_f64(), -1.25);
        let q3 = f(3, 2);
        assert_eq!(fx_add(num(1.5, q3), num(1.25, q3)).unwrap().to_f64(), 2.75);
        assert_eq!(fx_add(num(1.75, q), num(-0.25, q)).unwrap().to_f64(), 1.5);
        let q8 = f(4, 4);
        for raw in q8.min_raw()..=q8.max_raw() {
            let x = FxNum::from_raw(raw, q8).unwrap();
            assert_eq!(fx_add(x, FxNum::zero(q8)).unwrap(), x);
        }
    }

    #[test]
    fn add_matches_twos_complement_oracle() {
        let q = f(2, 2);
        for a in q.min_raw()..=q.max_raw() {
            for b in q.min_raw()..=q.max_raw() {
                let want = ((a + b) & 0xf) as i64;
                let want = if want >= 8 { want - 16 } else { want };
                let got = fx_add(FxNum::from_raw(a, q).unwrap(), FxNum::from_raw(b, q).unwrap()).unwrap();
                assert_eq!(got.raw(), want);
            }
        }
    }

    #[test]
    fn format_mismatch_is_an_error() {
        let a = num(1.0, f(2, 2));
        let b = num(1.0, f(3, 2));
        assert!(matches!(fx_add(a, b), Err(Error::FormatMismatch { .. })));
        assert!(fx_compare(a, b).is_err());
        assert!(trunc_mul(a, b).is_err());
    }

    #[test]
    fn compare_matches_integers() {
        assert!(!fx_compare(num(3.0, f(4, 2)), num(5.0, f(4, 2))).unwrap());
        let q = f(3, 3);
        for a in q.min_raw()..=q.max_raw() {
            for b in q.min_raw()..=q.max_raw() {
                let x = FxNum::from_raw(a, q).unwrap();
                let y = FxNum::from_raw(b, q).unwrap();
                assert_eq!(fx_compare(x, y).unwrap(), a > b);
            }
        }
    }

    #[test]
    fn trunc_mul_hand_example() {
        let q = f(2, 2);
        // 1*1.25 + 0.5*trunc(1.25 -> 1 fractional bit) = 1.25 + 0.5
        assert_eq!(trunc_mul(num(1.5, q), num(1.25, q)).unwrap().to_f64(), 1.75);
        assert_eq!(trunc_mul(num(1.5, q), FxNum::zero(q)).unwrap().raw(), 0);
        assert_eq!(trunc_mul(FxNum::zero(q), num(1.25, q)).unwrap().raw(), 0);
    }

    #[test]
    fn trunc_mul_below_exact_product() {
        let q = f(4, 4);
        let n = q.bits() as f64;
        for a in 0..=q.max_raw() {
            for b in 0..=q.max_raw() {
                let x = FxNum::from_raw(a, q).unwrap();
                let y = FxNum::from_raw(b, q).unwrap();
                let exact = x.to_f64() * y.to_f64();
                match trunc_mul(x, y) {
                    Ok(p) => {
                        let d = exact - p.to_f64();
                        assert!(d >= 0.0 && d < n * q.ulp(), "{a} {b}");
                    }
                    Err(_) => assert!(exact >= 8.0 - n * q.ulp()),
                }
            }
        }
    }

    #[test]
    fn trunc_mul_overflow_is_reported() {
        let q = f(2, 2);
        assert!(matches!(
            trunc_mul(num(1.75, q), num(1.75, q)).and_then(|p| trunc_mul(p, num(1.75, q))),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn trunc_mul_signed_operands() {
        let q = f(4, 4);
        assert_eq!(trunc_mul(num(-1.0, q), num(2.5, q)).unwrap().to_f64(), -2.5);
        assert_eq!(trunc_mul(num(2.0, q), num(-1.5, q)).unwrap().to_f64(), -3.0);
        // Arithmetic shifts floor: -0.0625 * 0.5 -> -0.0625.
        assert_eq!(trunc_mul(num(0.5, q), num(-0.0625, q)).unwrap().to_f64(), -0.0625);
    }

    #[test]
    fn trunc_div_examples() {
        let q = f(2, 2);
        let d = trunc_div(num(1.75, q), num(1.25, q)).unwrap();
        assert_eq!(d.value.to_f64(), 1.5);
        assert!(d.exact);
        for b in 1..=q.max_raw() {
            let y = FxNum::from_raw(b, q).unwrap();
            assert_eq!(trunc_div(FxNum::zero(q), y).unwrap().value.raw(), 0);
        }
        assert_eq!(
            trunc_div(num(1.0, q), FxNum::zero(q)),
            Err(Error::NonPositiveDivisor)
        );
    }

    #[test]
    fn trunc_div_reports_missing_preimage() {
        let q = f(2, 2);
        // Products of 1.5 are multiples of 0.25 from {0, .25, .5, .75, 1.5, ...};
        // 1.25 is not among trunc_mul(x, 1.5)'s image.
        let y = num(1.5, q);
        let image: Vec<i64> = (0..=q.max_raw())
            .filter_map(|a| trunc_mul(FxNum::from_raw(a, q).unwrap(), y).ok())
            .map(|p| p.raw())
            .collect();
        let z = (0..=q.max_raw()).find(|r| !image.contains(r)).unwrap();
        let d = trunc_div(FxNum::from_raw(z, q).unwrap(), y).unwrap();
        assert!(!d.exact);
        assert!(trunc_mul(d.value, y).unwrap().raw() < z);
    }

    #[test]
    fn dominance_of_partial_terms() {
        // t_b > sum_{c<b} t_c whenever every term is positive.
        let q = f(4, 4);
        for y in 1..=q.max_raw() {
            let terms: Vec<i128> = (0..q.bits() - 1).map(|b| partial_term(y, b, q.n_frac)).collect();
            for b in 0..terms.len() {
                if terms[..=b].iter().all(|&t| t > 0) {
                    let lower: i128 = terms[..b].iter().sum();
                    assert!(terms[b] > lower, "y={y} b={b}");
                }
            }
        }
    }

    #[test]
    fn small_multiplier_loses_digits() {
        let q = f(4, 4);
        let y = FxNum::from_raw(1, q).unwrap();
        let x = num(0.5, q);
        assert!(!digits_determined(x, y));
        assert_eq!(trunc_mul(x, y).unwrap().raw(), 0);
    }
}
