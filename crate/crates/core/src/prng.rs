//! Jumpable linear congruential generator with an xorshift output
//! permutation.
//!
//! Words live in `n_prn ≤ 64` bits; arithmetic is carried in `u128` with
//! power-of-two masking so wrapping products are exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::mask;

/// Low-bit multiplier of the 64-bit reference generator.
pub const DEFAULT_MULTIPLIER: u64 = 6364136223846793005;
pub const DEFAULT_INCREMENT: u64 = 1442695040888963407;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LcgSpec", into = "LcgSpec")]
pub struct LcgParams {
    n_prn: u32,
    a: u128,
    c: u128,
    alpha: u128,
    beta: Option<u128>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct LcgSpec {
    n_prn: u32,
    a: u64,
    c: u64,
}

impl TryFrom<LcgSpec> for LcgParams {
    type Error = Error;
    fn try_from(s: LcgSpec) -> Result<Self> {
        LcgParams::new(s.n_prn, s.a, s.c)
    }
}

impl From<LcgParams> for LcgSpec {
    fn from(p: LcgParams) -> Self {
        LcgSpec {
            n_prn: p.n_prn,
            a: p.a as u64,
            c: p.c as u64,
        }
    }
}

impl Default for LcgParams {
    fn default() -> Self {
        Self::new(64, DEFAULT_MULTIPLIER, DEFAULT_INCREMENT).expect("reference constants")
    }
}

impl LcgParams {
    /// Generator `x -> a x + c mod 2^n_prn`. `a` must be odd.
    pub fn new(n_prn: u32, a: u64, c: u64) -> Result<Self> {
        if !(2..=64).contains(&n_prn) {
            return Err(Error::InvalidParameter {
                name: "n_prn",
                reason: format!("{n_prn} not in 2..=64"),
            });
        }
        let m = mask(n_prn);
        let (a, c) = (a as u128, c as u128);
        if a > m || c > m {
            return Err(Error::InvalidParameter {
                name: "a/c",
                reason: format!("must be below 2^{n_prn}"),
            });
        }
        if a & 1 == 0 {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: "multiplier must be odd to be invertible".into(),
            });
        }
        let alpha = inv_mod_pow2(a, n_prn);
        // a odd means a - 1 even, so this is None for every power-of-two modulus.
        let beta = (a.wrapping_sub(1) & 1 == 1).then(|| inv_mod_pow2(a - 1, n_prn));
        Ok(Self {
            n_prn,
            a,
            c,
            alpha,
            beta,
        })
    }

    pub fn n_prn(&self) -> u32 {
        self.n_prn
    }

    pub fn modulus_mask(&self) -> u128 {
        mask(self.n_prn)
    }

    pub fn a(&self) -> u128 {
        self.a
    }

    pub fn c(&self) -> u128 {
        self.c
    }

    /// Inverse of `a` modulo `N`.
    pub fn alpha(&self) -> u128 {
        self.alpha
    }

    /// Inverse of `a - 1` modulo `N`, when it exists.
    pub fn beta(&self) -> Option<u128> {
        self.beta
    }

    /// `a ≡ 1 mod 4` and `c` odd.
    pub fn is_full_period(&self) -> bool {
        self.a & 3 == 1 && self.c & 1 == 1
    }

    /// Splits `a - 1 = 2^v u` with `u` odd. `None` when `a = 1`.
    pub fn two_adic_split(&self) -> Option<(u32, u128)> {
        let d = self.a - 1;
        (d != 0).then(|| {
            let v = d.trailing_zeros();
            (v, d >> v)
        })
    }
}

pub fn mul_mod_pow2(x: u128, y: u128, bits: u32) -> u128 {
    x.wrapping_mul(y) & mask(bits)
}

pub fn pow_mod_pow2(base: u128, mut e: u128, bits: u32) -> u128 {
    let mut b = base & mask(bits);
    let mut r = 1u128 & mask(bits);
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod_pow2(r, b, bits);
        }
        b = mul_mod_pow2(b, b, bits);
        e >>= 1;
    }
    r
}

/// Inverse of an odd `x` modulo `2^bits` by Newton iteration.
pub fn inv_mod_pow2(x: u128, bits: u32) -> u128 {
    debug_assert!(x & 1 == 1);
    let mut y = x; // correct to 3 bits
    for _ in 0..7 {
        y = y.wrapping_mul(2u128.wrapping_sub(x.wrapping_mul(y)));
    }
    y & mask(bits)
}

pub fn lcg_step(p: &LcgParams, x: u128) -> u128 {
    (p.a.wrapping_mul(x).wrapping_add(p.c)) & p.modulus_mask()
}

pub fn lcg_step_inv(p: &LcgParams, y: u128) -> u128 {
    mul_mod_pow2(p.alpha, y.wrapping_sub(p.c), p.n_prn)
}

/// `(a^n, Σ_{k<n} a^k)` modulo `2^bits` by square-and-add.
pub fn power_and_geometric(a: u128, n: u128, bits: u32) -> (u128, u128) {
    let mut pw = 1u128;
    let mut geo = 0u128;
    for i in (0..128 - n.leading_zeros()).rev() {
        geo = mul_mod_pow2(geo, 1 + pw, bits);
        pw = mul_mod_pow2(pw, pw, bits);
        if n >> i & 1 == 1 {
            geo = (mul_mod_pow2(geo, a, bits) + 1) & mask(bits);
            pw = mul_mod_pow2(pw, a, bits);
        }
    }
    (pw & mask(bits), geo)
}

/// Element `x_n` of the sequence started at `x0`.
pub fn lcg_jump(p: &LcgParams, x0: u128, n: u128) -> u128 {
    let bits = p.n_prn;
    let (an, geo) = power_and_geometric(p.a, n, bits);
    let tail = match p.beta {
        Some(beta) => mul_mod_pow2(mul_mod_pow2(p.c, an.wrapping_sub(1), bits), beta, bits),
        None => mul_mod_pow2(p.c, geo, bits),
    };
    (mul_mod_pow2(an, x0, bits) + tail) & mask(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftDir {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct XorShift {
    pub dir: ShiftDir,
    pub shift: u32,
}

impl XorShift {
    pub fn apply(&self, x: u128, bits: u32) -> u128 {
        match self.dir {
            ShiftDir::Right => x ^ (x >> self.shift),
            ShiftDir::Left => (x ^ (x << self.shift)) & mask(bits),
        }
    }

    pub fn invert(&self, y: u128, bits: u32) -> u128 {
        let mut x = y;
        let mut k = self.shift;
        while k < bits {
            x ^= match self.dir {
                ShiftDir::Right => y >> k,
                ShiftDir::Left => (y << k) & mask(bits),
            };
            k += self.shift;
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PermutationSpec {
    pub steps: Vec<XorShift>,
}

impl PermutationSpec {
    /// Right shift then left shift, sized to the word width.
    pub fn default_for(bits: u32) -> Self {
        let r = ((bits as f64 * 0.28).ceil() as u32).clamp(1, bits - 1);
        let l = ((bits as f64 * 0.2).ceil() as u32).clamp(1, bits - 1);
        Self {
            steps: vec![
                XorShift {
                    dir: ShiftDir::Right,
                    shift: r,
                },
                XorShift {
                    dir: ShiftDir::Left,
                    shift: l,
                },
            ],
        }
    }

    pub fn validate(&self, bits: u32) -> Result<()> {
        for s in &self.steps {
            if s.shift == 0 || s.shift >= bits {
                return Err(Error::InvalidParameter {
                    name: "permutation",
                    reason: format!("shift {} outside 1..{}", s.shift, bits),
                });
            }
        }
        Ok(())
    }
}

pub fn permute(spec: &PermutationSpec, x: u128, bits: u32) -> u128 {
    spec.steps.iter().fold(x, |x, s| s.apply(x, bits))
}

pub fn permute_inv(spec: &PermutationSpec, y: u128, bits: u32) -> u128 {
    spec.steps.iter().rev().fold(y, |y, s| s.invert(y, bits))
}

/// Top `n_dig` bits of a permuted word, as an integer.
pub fn top_bits(y: u128, bits: u32, n_dig: u32) -> u128 {
    y >> (bits - n_dig.min(bits))
}

/// Top `n_dig` bits of a permuted word as a point of `[0, 1)`.
pub fn uniform_unit(y: u128, bits: u32, n_dig: u32) -> f64 {
    top_bits(y, bits, n_dig) as f64 * (-(n_dig.min(bits) as f64)).exp2()
}

/// Generator plus output permutation, seeded at `x0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrnSource {
    pub lcg: LcgParams,
    pub permutation: PermutationSpec,
    pub x0: u64,
}

impl PrnSource {
    pub fn new(lcg: LcgParams, permutation: PermutationSpec, x0: u64) -> Result<Self> {
        permutation.validate(lcg.n_prn())?;
        if x0 as u128 > lcg.modulus_mask() {
            return Err(Error::InvalidParameter {
                name: "x0",
                reason: "seed exceeds the modulus".into(),
            });
        }
        Ok(Self {
            lcg,
            permutation,
            x0,
        })
    }

    pub fn with_default_permutation(lcg: LcgParams, x0: u64) -> Result<Self> {
        Self::new(lcg, PermutationSpec::default_for(lcg.n_prn()), x0)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.lcg, self.permutation.clone(), self.x0).map(|_| ())
    }

    /// Raw element `x_k`.
    pub fn element(&self, k: u128) -> u128 {
        lcg_jump(&self.lcg, self.x0 as u128, k)
    }

    /// Top `n_dig` bits of the permuted element `x_k`.
    pub fn digits(&self, k: u128, n_dig: u32) -> u128 {
        let bits = self.lcg.n_prn();
        top_bits(permute(&self.permutation, self.element(k), bits), bits, n_dig)
    }

    /// The `n_t` uniform digit words driving path `path`: elements
    /// `x_{path·n_t+1} … x_{path·n_t+n_t}`.
    pub fn path_digits(&self, path: u128, n_t: usize, n_dig: u32) -> Vec<u128> {
        let bits = self.lcg.n_prn();
        let mut x = self.element(path * n_t as u128 + 1);
        let mut out = Vec::with_capacity(n_t);
        for j in 0..n_t {
            if j > 0 {
                x = lcg_step(&self.lcg, x);
            }
            out.push(top_bits(permute(&self.permutation, x, bits), bits, n_dig));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LcgParams {
        LcgParams::new(4, 5, 1).unwrap()
    }

    #[test]
    fn step_examples() {
        assert_eq!(lcg_step(&small(), 3), 0);
        let id = LcgParams::new(8, 1, 0).unwrap();
        for x in 0..256 {
            assert_eq!(lcg_step(&id, x), x);
        }
    }

    #[test]
    fn alpha_inverts_a() {
        let p = LcgParams::default();
        assert_eq!(mul_mod_pow2(p.a(), p.alpha(), 64), 1);
        assert!(p.beta().is_none());
        for x in [0u128, 1, 12345, u64::MAX as u128] {
            assert_eq!(lcg_step_inv(&p, lcg_step(&p, x)), x);
        }
    }

    #[test]
    fn jump_examples() {
        let p = small();
        assert_eq!(lcg_jump(&p, 3, 0), 3);
        assert_eq!(lcg_jump(&p, 3, 3), 6);
        let mut x = 3;
        for _ in 0..3 {
            x = lcg_step(&p, x);
        }
        assert_eq!(x, 6);
    }

    #[test]
    fn full_period_on_small_moduli() {
        for bits in 2..=10u32 {
            let n = 1u128 << bits;
            for a in (1..n as u64).filter(|a| a & 3 == 1) {
                let p = LcgParams::new(bits, a, 3 & (n as u64 - 1)).unwrap();
                assert!(p.is_full_period());
                let mut x = 0;
                let mut period = 0;
                loop {
                    x = lcg_step(&p, x);
                    period += 1;
                    if x == 0 {
                        break;
                    }
                }
                assert_eq!(period, n, "a={a} bits={bits}");
            }
        }
    }

    #[test]
    fn jump_at_64_bits() {
        let p = LcgParams::default();
        let mut x = 42u128;
        for n in 0..300u128 {
            assert_eq!(lcg_jump(&p, 42, n), x);
            x = lcg_step(&p, x);
        }
    }

    #[test]
    fn geometric_tail_identity() {
        // (a^k - 1) = (a - 1) G_k; after removing 2^v the odd part u gives G_k.
        let p = LcgParams::new(10, 21, 7).unwrap();
        let (v, u) = p.two_adic_split().unwrap();
        let ext = p.n_prn() + v;
        for k in 0..500u128 {
            let t = pow_mod_pow2(p.a(), k, ext);
            let (_, g) = power_and_geometric(p.a(), k, p.n_prn());
            let lhs = (t.wrapping_sub(1) & mask(ext)) >> v;
            assert_eq!(lhs, mul_mod_pow2(u, g, p.n_prn()));
        }
    }

    #[test]
    fn xorshift_bijective_8_bits() {
        let s = XorShift {
            dir: ShiftDir::Right,
            shift: 3,
        };
        let mut seen = [false; 256];
        for x in 0..256u128 {
            let y = s.apply(x, 8) as usize;
            assert!(!seen[y]);
            seen[y] = true;
        }
    }

    #[test]
    fn permutation_round_trip() {
        let spec = PermutationSpec::default_for(8);
        for x in 0..256u128 {
            assert_eq!(permute_inv(&spec, permute(&spec, x, 8), 8), x);
        }
        let empty = PermutationSpec::default();
        assert_eq!(permute(&empty, 77, 8), 77);
        assert_eq!(
            PermutationSpec::default_for(64).steps.iter().map(|s| s.shift).collect::<Vec<_>>(),
            vec![18, 13]
        );
    }

    #[test]
    fn uniform_grid() {
        assert_eq!(uniform_unit(0, 8, 4), 0.0);
        assert_eq!(uniform_unit(0xf0, 8, 4), 1.0 - 1.0 / 16.0);
        // Exact uniformity over a full period.
        let p = LcgParams::new(8, 5, 1).unwrap();
        let spec = PermutationSpec::default_for(8);
        let mut hist = [0u32; 16];
        let mut x = 0;
        for _ in 0..256 {
            hist[top_bits(permute(&spec, x, 8), 8, 4) as usize] += 1;
            x = lcg_step(&p, x);
        }
        assert!(hist.iter().all(|&h| h == 16));
    }

    #[test]
    fn path_digits_follow_subsequences() {
        let src = PrnSource::with_default_permutation(LcgParams::new(8, 5, 1).unwrap(), 11).unwrap();
        let d = src.path_digits(2, 3, 4);
        for j in 0..3 {
            assert_eq!(d[j], src.digits(2 * 3 + 1 + j as u128, 4));
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(LcgParams::new(8, 4, 1).is_err());
        assert!(LcgParams::new(8, 300, 1).is_err());
        assert!(LcgParams::new(1, 1, 0).is_err());
    }
}
