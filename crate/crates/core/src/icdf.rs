//! Piecewise-cubic approximation of the inverse standard normal CDF.
//!
//! Each interval carries a cubic in a local coordinate
//! `τ = (u − start)·2^shift`, where `shift` is the largest power of two that
//! keeps `τ` inside `[0, 1]`. The two outer sentinel intervals reuse the
//! neighbouring cubic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::{trunc_mul_raw, FxFormat, FxNum};
use crate::normal::inv_cdf;

/// Breakpoints are snapped down to multiples of `2^-BREAKPOINT_BITS`.
pub const BREAKPOINT_BITS: i32 = 24;
pub const DEFAULT_MAX_INTERVALS: usize = 128;
const NODES: usize = 48;
const CHECK_POINTS: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cubic {
    pub start: f64,
    pub shift: u32,
    /// `c0 + c1 τ + c2 τ² + c3 τ³`.
    pub coeffs: [f64; 4],
}

impl Cubic {
    pub fn eval(&self, u: f64) -> f64 {
        let t = (u - self.start) * (self.shift as f64).exp2();
        let c = &self.coeffs;
        ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcdfApprox {
    pub domain: (f64, f64),
    /// `x_0 < … < x_n`; `x_0` and `x_n` are the domain ends.
    pub breakpoints: Vec<f64>,
    /// `n + 2` cubics: interval `m` covers `[x_{m−1}, x_m)` with `x_{−1} = −∞`
    /// and `x_{n+1} = +∞`.
    pub intervals: Vec<Cubic>,
    pub target_err: f64,
    /// Largest deviation from the reference quantile seen on the check grid.
    pub max_err: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub target_err: f64,
    pub max_intervals: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            target_err: 1e-6,
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }
}

pub fn default_domain() -> (f64, f64) {
    let e = (-16f64).exp2();
    (e, 1.0 - e)
}

fn shift_for(width: f64) -> u32 {
    // Largest s with 2^s · width ≤ 1.
    let mut s = (-width.log2()).floor().max(0.0) as u32;
    while (s as f64).exp2() * width > 1.0 {
        s -= 1;
    }
    while ((s + 1) as f64).exp2() * width <= 1.0 {
        s += 1;
    }
    s
}

fn snap_down(u: f64) -> f64 {
    let g = (BREAKPOINT_BITS as f64).exp2();
    (u * g).floor() / g
}

/// Discrete least-squares cubic on Chebyshev nodes, returned in the local
/// coordinate of `[a, b]`.
fn fit_cubic(a: f64, b: f64) -> Cubic {
    let w = b - a;
    let mut d = [0.0; 4];
    for k in 0..NODES {
        let th = std::f64::consts::PI * (k as f64 + 0.5) / NODES as f64;
        let t = th.cos();
        let y = inv_cdf(a + 0.5 * w * (t + 1.0));
        for (i, di) in d.iter_mut().enumerate() {
            *di += y * (i as f64 * th).cos();
        }
    }
    d[0] /= NODES as f64;
    for di in d.iter_mut().skip(1) {
        *di *= 2.0 / NODES as f64;
    }
    // Chebyshev to monomial in t ∈ [−1, 1].
    let e = [d[0] - d[2], d[1] - 3.0 * d[3], 2.0 * d[2], 4.0 * d[3]];
    // Substitute t = kτ − 1.
    let shift = shift_for(w);
    let k = 2.0 / (w * (shift as f64).exp2());
    const BINOM: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0],
        [1.0, 3.0, 3.0, 1.0],
    ];
    let mut coeffs = [0.0; 4];
    for (j, cj) in coeffs.iter_mut().enumerate() {
        for i in j..4 {
            let sign = if (i - j) % 2 == 0 { 1.0 } else { -1.0 };
            *cj += e[i] * BINOM[i][j] * k.powi(j as i32) * sign;
        }
    }
    Cubic {
        start: a,
        shift,
        coeffs,
    }
}

fn interval_error(c: &Cubic, a: f64, b: f64) -> f64 {
    (0..=CHECK_POINTS)
        .map(|k| {
            let u = a + (b - a) * k as f64 / CHECK_POINTS as f64;
            let u = if k == CHECK_POINTS { b.min(f64::from_bits(b.to_bits() - 1)) } else { u };
            (c.eval(u) - inv_cdf(u)).abs()
        })
        .fold(0.0, f64::max)
}

/// Fits intervals left to right, extending each one as far as the target
/// error allows (binary search on the right endpoint).
pub fn fit_icdf(u_lo: f64, u_hi: f64, opts: FitOptions) -> Result<IcdfApprox> {
    if !(0.0 < u_lo && u_lo < u_hi && u_hi < 1.0) {
        return Err(Error::InvalidParameter {
            name: "domain",
            reason: format!("need 0 < u_lo < u_hi < 1, got [{u_lo}, {u_hi}]"),
        });
    }
    if opts.target_err <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "target_err",
            reason: "must be positive".into(),
        });
    }
    let grid = (-(BREAKPOINT_BITS as f64)).exp2();
    // Leave headroom for snapping and the final dense check.
    let tol = 0.95 * opts.target_err;
    let mut breakpoints = vec![u_lo];
    let mut cubics = Vec::new();
    let mut a = u_lo;
    while a < u_hi {
        if cubics.len() >= opts.max_intervals {
            return Err(Error::TooManyIntervals(opts.max_intervals));
        }
        let ok = |b: f64| interval_error(&fit_cubic(a, b), a, b) <= tol;
        let b = if ok(u_hi) {
            u_hi
        } else {
            let (mut lo, mut hi) = (0.0, u_hi - a);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if ok(a + mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            snap_down(a + lo).max(a + grid)
        };
        cubics.push(fit_cubic(a, b));
        breakpoints.push(b);
        a = b;
    }
    let mut intervals = Vec::with_capacity(cubics.len() + 2);
    intervals.push(cubics[0]);
    intervals.extend(cubics.iter().copied());
    intervals.push(*cubics.last().expect("at least one interval"));
    let mut approx = IcdfApprox {
        domain: (u_lo, u_hi),
        breakpoints,
        intervals,
        target_err: opts.target_err,
        max_err: 0.0,
    };
    approx.max_err = approx.measure_error(16 * CHECK_POINTS);
    if approx.max_err > opts.target_err {
        return Err(Error::InvalidParameter {
            name: "target_err",
            reason: format!("fit reached only {:.3e}", approx.max_err),
        });
    }
    Ok(approx)
}

/// Index of the interval containing `u`: the number of breakpoints `≤ u`.
pub fn locate(breakpoints: &[f64], u: f64) -> usize {
    breakpoints.partition_point(|&x| x <= u)
}

pub fn eval_icdf(approx: &IcdfApprox, u: f64) -> f64 {
    approx.intervals[locate(&approx.breakpoints, u)].eval(u)
}

impl IcdfApprox {
    pub fn n_intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Max deviation from the reference on `per_interval + 1` points of each
    /// fitted interval.
    pub fn measure_error(&self, per_interval: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.breakpoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            for k in 0..=per_interval {
                let u = if k == per_interval {
                    f64::from_bits(b.to_bits() - 1)
                } else {
                    a + (b - a) * k as f64 / per_interval as f64
                };
                worst = worst.max((eval_icdf(self, u) - inv_cdf(u)).abs());
            }
        }
        worst
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: IcdfApprox = serde_json::from_str(s)?;
        if a.breakpoints.len() < 2 || a.intervals.len() != a.breakpoints.len() + 1 {
            return Err(Error::Config("icdf: interval and breakpoint counts disagree".into()));
        }
        if a.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("icdf: breakpoints must increase".into()));
        }
        Ok(a)
    }

    /// Encodes breakpoints and coefficients in `fmt` (floor encoding).
    pub fn encode(&self, fmt: FxFormat) -> Result<IcdfTable> {
        let breakpoints = self
            .breakpoints
            .iter()
            .map(|&x| fmt.encode(x))
            .collect::<Result<Vec<_>>>()?;
        let intervals = self
            .intervals
            .iter()
            .map(|c| {
                let mut coeffs = [0i64; 4];
                for (dst, &v) in coeffs.iter_mut().zip(&c.coeffs) {
                    *dst = fmt.encode(v)?;
                }
                Ok(FixedCubic {
                    start: fmt.encode(c.start)?,
                    shift: c.shift,
                    coeffs,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IcdfTable {
            fmt,
            breakpoints,
            intervals,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedCubic {
    pub start: i64,
    pub shift: u32,
    pub coeffs: [i64; 4],
}

/// Raw fixed-point image of an [`IcdfApprox`], shared by [`icdf_fixed`] and
/// the circuit gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IcdfTable {
    pub fmt: FxFormat,
    pub breakpoints: Vec<i64>,
    pub intervals: Vec<FixedCubic>,
}

impl IcdfTable {
    pub fn locate(&self, u_raw: i64) -> usize {
        self.breakpoints.iter().filter(|&&x| u_raw >= x).count()
    }

    /// Local coordinate in raw units, wrapped to the register width.
    pub fn tau(&self, m: usize, u_raw: i64) -> i64 {
        let c = &self.intervals[m];
        let d = u_raw as i128 - c.start as i128;
        self.fmt.wrap(d << c.shift.min(100))
    }

    /// Horner evaluation with wrapping adds and truncated products.
    pub fn eval_raw(&self, u_raw: i64) -> i64 {
        let m = self.locate(u_raw);
        let c = &self.intervals[m].coeffs;
        let t = self.tau(m, u_raw);
        let f = self.fmt;
        let i1 = f.wrap(trunc_mul_raw(c[3], t, f) + c[2] as i128);
        let i2 = f.wrap(trunc_mul_raw(i1, t, f) + c[1] as i128);
        f.wrap(trunc_mul_raw(i2, t, f) + c[0] as i128)
    }
}

/// Bit-exact classical mirror of the circuit's inverse-CDF gate.
pub fn icdf_fixed(approx: &IcdfApprox, u: FxNum) -> Result<FxNum> {
    let table = approx.encode(u.format())?;
    FxNum::from_raw(table.eval_raw(u.raw()), u.format())
}
