//! Classical local volatility model with piecewise-linear absolute
//! volatility `σ(t, S) = a S + b` on each price interval of each step.
//!
//! Besides the floating-point dynamics this module holds the fixed-point
//! reference engine: the exact register-level arithmetic that both circuit
//! builders reproduce, used as their oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::{trunc_mul_raw, FxFormat};
use crate::icdf::{eval_icdf, IcdfApprox, IcdfTable};
use crate::normal::{cdf, mass};
use crate::prng::{lcg_step, permute, top_bits, PrnSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LvModelSpec {
    times: Vec<f64>,
    grids: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    s0: f64,
}

/// Time grid `t_0 = 0 < … < t_{n_t}`; step `j` (1-based) moves the price from
/// `t_{j−1}` to `t_j` using grid `j` and coefficients `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LvModelSpec", into = "LvModelSpec")]
pub struct LvModel {
    times: Vec<f64>,
    grids: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    s0: f64,
}

impl TryFrom<LvModelSpec> for LvModel {
    type Error = Error;
    fn try_from(s: LvModelSpec) -> Result<Self> {
        LvModel::new(s.times, s.grids, s.a, s.b, s.s0)
    }
}

impl From<LvModel> for LvModelSpec {
    fn from(m: LvModel) -> Self {
        LvModelSpec {
            times: m.times,
            grids: m.grids,
            a: m.a,
            b: m.b,
            s0: m.s0,
        }
    }
}

impl LvModel {
    /// `grids[j−1]`, `a[j−1]`, `b[j−1]` belong to step `j`; each step has
    /// one more coefficient pair than grid points.
    ///
    /// Volatility may vanish (a no-diffusion model is allowed) but must not be
    /// negative at any finite grid point.
    pub fn new(
        times: Vec<f64>,
        grids: Vec<Vec<f64>>,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        s0: f64,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if times.len() < 2 || times[0] != 0.0 {
            return bad("times must start at 0 and contain at least one step".into());
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("times must be strictly increasing".into());
        }
        let n_t = times.len() - 1;
        if grids.len() != n_t || a.len() != n_t || b.len() != n_t {
            return bad(format!("expected {n_t} grids and coefficient rows"));
        }
        if !s0.is_finite() {
            return bad("s0 must be finite".into());
        }
        for j in 0..n_t {
            let g = &grids[j];
            if g.windows(2).any(|w| !(w[1] > w[0])) || g.iter().any(|x| !x.is_finite()) {
                return bad(format!("grid of step {} must be strictly increasing", j + 1));
            }
            if a[j].len() != g.len() + 1 || b[j].len() != g.len() + 1 {
                return bad(format!(
                    "step {} needs {} coefficient pairs",
                    j + 1,
                    g.len() + 1
                ));
            }
            for k in 0..=g.len() {
                let ends = [k.checked_sub(1).map(|i| g[i]), g.get(k).copied()];
                for s in ends.into_iter().flatten() {
                    let v = a[j][k] * s + b[j][k];
                    if v < 0.0 {
                        return bad(format!(
                            "negative volatility {v} at S={s}, step {}, interval {}",
                            j + 1,
                            k + 1
                        ));
                    }
                }
                if g.is_empty() && a[j][k] == 0.0 && b[j][k] < 0.0 {
                    return bad(format!("negative constant volatility at step {}", j + 1));
                }
            }
        }
        Ok(Self {
            times,
            grids,
            a,
            b,
            s0,
        })
    }

    /// Same grid and coefficients at every step of a uniform time grid.
    pub fn homogeneous(t_end: f64, n_t: usize, grid: Vec<f64>, a: Vec<f64>, b: Vec<f64>, s0: f64) -> Result<Self> {
        let times = (0..=n_t).map(|i| t_end * i as f64 / n_t as f64).collect();
        Self::new(times, vec![grid; n_t], vec![a; n_t], vec![b; n_t], s0)
    }

    /// `σ(t, S) = σ_BS · S`.
    pub fn black_scholes(sigma_bs: f64, t_end: f64, n_t: usize, s0: f64) -> Result<Self> {
        Self::homogeneous(t_end, n_t, vec![], vec![sigma_bs], vec![0.0], s0)
    }

    /// Constant absolute volatility.
    pub fn constant(sigma: f64, t_end: f64, n_t: usize, s0: f64) -> Result<Self> {
        Self::homogeneous(t_end, n_t, vec![], vec![0.0], vec![sigma], s0)
    }

    pub fn n_t(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn grid(&self, step: usize) -> &[f64] {
        &self.grids[step - 1]
    }

    pub fn coeffs(&self, step: usize) -> (&[f64], &[f64]) {
        (&self.a[step - 1], &self.b[step - 1])
    }

    pub fn dt(&self, step: usize) -> f64 {
        self.times[step] - self.times[step - 1]
    }

    /// Interval index `k` (0-based) with `s_{k−1} ≤ S < s_k`.
    pub fn interval(&self, step: usize, s: f64) -> usize {
        self.grid(step).partition_point(|&x| x <= s)
    }

    pub fn local_vol(&self, step: usize, s: f64) -> f64 {
        let k = self.interval(step, s);
        self.a[step - 1][k] * s + self.b[step - 1][k]
    }

    pub fn euler_step(&self, step: usize, s: f64, w: f64) -> f64 {
        s + self.local_vol(step, s) * self.dt(step).sqrt() * w
    }

    /// Preimage of `s_next` under [`euler_step`](Self::euler_step) with draw `w`.
    pub fn inverse_euler_step(&self, step: usize, s_next: f64, w: f64) -> Result<f64> {
        let sq = self.dt(step).sqrt();
        let g = self.grid(step);
        for k in 0..=g.len() {
            let den = 1.0 + self.a[step - 1][k] * sq * w;
            if den <= 0.0 {
                return Err(Error::Monotonicity(format!(
                    "1 + a√Δt·w = {den} at step {step}, interval {}",
                    k + 1
                )));
            }
            let s = (s_next - self.b[step - 1][k] * sq * w) / den;
            let lo = k.checked_sub(1).map_or(f64::NEG_INFINITY, |i| g[i]);
            let hi = g.get(k).copied().unwrap_or(f64::INFINITY);
            if lo <= s && s < hi {
                return Ok(s);
            }
        }
        Err(Error::Monotonicity(format!(
            "no interval of step {step} maps onto {s_next}"
        )))
    }

    /// Exact-arithmetic path for the given draws; returns `S_{t_0..t_{n_t}}`.
    pub fn path(&self, draws: &[f64]) -> Vec<f64> {
        let mut s = self.s0;
        let mut out = vec![s];
        for (j, &w) in draws.iter().enumerate() {
            s = self.euler_step(j + 1, s, w);
            out.push(s);
        }
        out
    }

    pub fn encode(&self, fmt: FxFormat) -> Result<FixedModel> {
        let one = fmt.encode(1.0)?;
        let steps = (1..=self.n_t())
            .map(|j| {
                let sq = self.dt(j).sqrt();
                let (a, b) = self.coeffs(j);
                Ok(FixedStep {
                    grid: self.grid(j).iter().map(|&s| fmt.encode(s)).collect::<Result<_>>()?,
                    a: a.iter().map(|&v| fmt.encode(v * sq)).collect::<Result<_>>()?,
                    b: b.iter().map(|&v| fmt.encode(v * sq)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(FixedModel {
            fmt,
            one,
            s0: fmt.encode(self.s0)?,
            steps,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `1 + a√Δt·w ≤ 0`: the update is not increasing in `S`.
    Denominator {
        step: usize,
        interval: usize,
        w: f64,
        value: f64,
    },
    /// `σ` jumps at a grid point.
    Discontinuity {
        step: usize,
        point: f64,
        left: f64,
        right: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonotonicityReport {
    pub violations: Vec<Violation>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Monotonicity(format!(
                "{v:?} ({} violation(s))",
                self.violations.len()
            ))),
        }
    }
}

/// Checks that every step's update is strictly increasing in `S` for draws in
/// `[w_min, w_max]` and that `σ` is continuous across grid points.
pub fn monotonicity_check(model: &LvModel, w_min: f64, w_max: f64) -> MonotonicityReport {
    let mut violations = Vec::new();
    for j in 1..=model.n_t() {
        let sq = model.dt(j).sqrt();
        let (a, b) = model.coeffs(j);
        for k in 0..a.len() {
            for w in [w_min, w_max] {
                let value = 1.0 + a[k] * sq * w;
                if value <= 0.0 {
                    violations.push(Violation::Denominator {
                        step: j,
                        interval: k + 1,
                        w,
                        value,
                    });
                }
            }
        }
        for (k, &s) in model.grid(j).iter().enumerate() {
            let left = a[k] * s + b[k];
            let right = a[k + 1] * s + b[k + 1];
            if (left - right).abs() > 1e-12 * left.abs().max(right.abs()).max(1.0) {
                violations.push(Violation::Discontinuity {
                    step: j,
                    point: s,
                    left,
                    right,
                });
            }
        }
    }
    MonotonicityReport { violations }
}

/// One payment `min{max{a S + b, floor}, cap}`; absent bounds are infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffLeg {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub cap: Option<f64>,
}

impl PayoffLeg {
    pub const ZERO: PayoffLeg = PayoffLeg {
        a: 0.0,
        b: 0.0,
        floor: Some(0.0),
        cap: Some(0.0),
    };

    pub fn eval(&self, s: f64) -> f64 {
        let v = self.a * s + self.b;
        let v = self.floor.map_or(v, |f| v.max(f));
        self.cap.map_or(v, |c| v.min(c))
    }
}

/// Payments at `t_1 … t_{n_t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PayoffLeg>", into = "Vec<PayoffLeg>")]
pub struct PayoffSpec {
    legs: Vec<PayoffLeg>,
}

impl TryFrom<Vec<PayoffLeg>> for PayoffSpec {
    type Error = Error;
    fn try_from(legs: Vec<PayoffLeg>) -> Result<Self> {
        PayoffSpec::new(legs)
    }
}

impl From<PayoffSpec> for Vec<PayoffLeg> {
    fn from(p: PayoffSpec) -> Self {
        p.legs
    }
}

impl PayoffSpec {
    pub fn new(legs: Vec<PayoffLeg>) -> Result<Self> {
        for (i, l) in legs.iter().enumerate() {
            if let (Some(f), Some(c)) = (l.floor, l.cap) {
                if f > c {
                    return Err(Error::InvalidParameter {
                        name: "payoff",
                        reason: format!("floor {f} above cap {c} at date {}", i + 1),
                    });
                }
            }
        }
        Ok(Self { legs })
    }

    /// European call paying `max(S − K, 0)` at the last date only.
    pub fn european_call(strike: f64, n_t: usize) -> Self {
        let mut legs = vec![PayoffLeg::ZERO; n_t];
        legs[n_t - 1] = PayoffLeg {
            a: 1.0,
            b: -strike,
            floor: Some(0.0),
            cap: None,
        };
        Self { legs }
    }

    pub fn zero(n_t: usize) -> Self {
        Self {
            legs: vec![PayoffLeg::ZERO; n_t],
        }
    }

    pub fn legs(&self) -> &[PayoffLeg] {
        &self.legs
    }

    pub fn check_dates(&self, n_t: usize) -> Result<()> {
        if self.legs.len() != n_t {
            return Err(Error::InvalidParameter {
                name: "payoff",
                reason: format!("{} legs for {n_t} dates", self.legs.len()),
            });
        }
        Ok(())
    }

    /// Sum of payments along `S_{t_1..t_{n_t}}`.
    pub fn total(&self, path: &[f64]) -> f64 {
        self.legs.iter().zip(path).map(|(l, &s)| l.eval(s)).sum()
    }

    pub fn encode(&self, fmt: FxFormat) -> Result<Vec<FixedLeg>> {
        self.legs
            .iter()
            .map(|l| {
                Ok(FixedLeg {
                    a: fmt.encode(l.a)?,
                    b: fmt.encode(l.b)?,
                    floor: l.floor.map(|f| fmt.encode(f)).transpose()?,
                    cap: l.cap.map(|c| fmt.encode(c)).transpose()?,
                })
            })
            .collect()
    }
}

/// Payment `i` (1-based) at price `s`.
pub fn payoff_eval(spec: &PayoffSpec, i: usize, s: f64) -> f64 {
    spec.legs[i - 1].eval(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedLeg {
    pub a: i64,
    pub b: i64,
    pub floor: Option<i64>,
    pub cap: Option<i64>,
}

impl FixedLeg {
    /// `clamp(trunc_mul(a, S) + b)`, reduced modulo the register width.
    pub fn eval(&self, s: i64, fmt: FxFormat) -> i64 {
        let v = self.linear(s, fmt);
        let v = self.floor.map_or(v, |f| v.max(f));
        self.cap.map_or(v, |c| v.min(c))
    }

    pub fn linear(&self, s: i64, fmt: FxFormat) -> i64 {
        fmt.wrap(trunc_mul_raw(self.a, s, fmt) + self.b as i128)
    }
}

/// Encoded coefficients of one step: `a′ = a√Δt`, `b′ = b√Δt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedStep {
    pub grid: Vec<i64>,
    pub a: Vec<i64>,
    pub b: Vec<i64>,
}

impl FixedStep {
    pub fn interval(&self, s: i64) -> usize {
        self.grid.iter().filter(|&&g| s >= g).count()
    }
}

/// Register-level image of an [`LvModel`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedModel {
    pub fmt: FxFormat,
    pub one: i64,
    pub s0: i64,
    pub steps: Vec<FixedStep>,
}

fn checked(fmt: FxFormat, v: i128, op: &'static str) -> Result<i64> {
    if fmt.fits(v) {
        Ok(v as i64)
    } else {
        Err(Error::Overflow { op })
    }
}

impl FixedModel {
    pub fn step(&self, j: usize) -> &FixedStep {
        &self.steps[j - 1]
    }

    /// `1 + a′ w` for interval `k` of step `j`.
    pub fn growth(&self, j: usize, k: usize, w: i64) -> Result<i64> {
        let f = self.fmt;
        checked(f, self.one as i128 + trunc_mul_raw(self.step(j).a[k], w, f), "growth")
    }

    /// Self-updating form: `S′ = trunc_mul(S, 1 + a′w) + trunc_mul(b′, w)`.
    pub fn prn_update(&self, j: usize, s: i64, w: i64) -> Result<i64> {
        let f = self.fmt;
        let k = self.step(j).interval(s);
        let g = self.growth(j, k, w)?;
        let scaled = checked(f, trunc_mul_raw(s, g, f), "S·(1 + a′w)")?;
        checked(f, scaled as i128 + trunc_mul_raw(self.step(j).b[k], w, f), "S update")
    }

    /// Accumulating form: `S′ = S + trunc_mul(a′, trunc_mul(S, w)) + trunc_mul(b′, w)`.
    pub fn rn_update(&self, j: usize, s: i64, w: i64) -> Result<i64> {
        let f = self.fmt;
        let k = self.step(j).interval(s);
        let sw = checked(f, trunc_mul_raw(s, w, f), "S·w")?;
        let asw = checked(f, trunc_mul_raw(self.step(j).a[k], sw, f), "a′·S·w")?;
        let v = s as i128 + asw as i128 + trunc_mul_raw(self.step(j).b[k], w, f);
        checked(f, v, "S update")
    }

    /// Runs one path; `rn` selects the accumulating update.
    pub fn path(&self, legs: &[FixedLeg], draws: &[i64], rn: bool) -> Result<FixedPath> {
        let f = self.fmt;
        let mut s = self.s0;
        let mut states = vec![s];
        let mut payoff = 0i64;
        for (j, &w) in draws.iter().enumerate() {
            s = if rn {
                self.rn_update(j + 1, s, w)?
            } else {
                self.prn_update(j + 1, s, w)?
            };
            states.push(s);
            payoff = checked(f, payoff as i128 + legs[j].eval(s, f) as i128, "payoff sum")?;
        }
        Ok(FixedPath {
            states,
            draws: draws.to_vec(),
            payoff,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPath {
    /// `S_{t_0} … S_{t_{n_t}}` in raw units.
    pub states: Vec<i64>,
    pub draws: Vec<i64>,
    pub payoff: i64,
}

/// How draws and updates are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arithmetic {
    /// `f64` dynamics with uniforms on a `2^-n_dig` grid.
    Exact { n_dig: u32 },
    /// Register arithmetic of the pseudo-random-register circuit; uniforms
    /// carry `fmt.n_frac` digits.
    Fixed(FxFormat),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// Per-path payoff sums.
    #[serde(skip)]
    pub path_values: Vec<f64>,
}

fn estimate(values: Vec<f64>) -> PriceEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    PriceEstimate {
        price: mean,
        std_error: (var / n).sqrt(),
        n_paths: values.len(),
        path_values: values,
    }
}

/// Fixed-point draws for path `path`: permuted uniform digits mapped through
/// the encoded inverse CDF.
pub fn fixed_draws(source: &PrnSource, table: &IcdfTable, path: u128, n_t: usize) -> Vec<i64> {
    let fmt = table.fmt;
    source
        .path_digits(path, n_t, fmt.n_frac)
        .into_iter()
        .map(|d| table.eval_raw(d as i64))
        .collect()
}

/// Monte Carlo average of payment sums over `n_paths` consecutive
/// subsequences of the generator.
pub fn price_sampled(
    model: &LvModel,
    payoffs: &PayoffSpec,
    source: &PrnSource,
    icdf: &IcdfApprox,
    n_paths: usize,
    arithmetic: Arithmetic,
) -> Result<PriceEstimate> {
    payoffs.check_dates(model.n_t())?;
    if n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            reason: "must be positive".into(),
        });
    }
    let n_t = model.n_t();
    let bits = source.lcg.n_prn();
    let values = match arithmetic {
        Arithmetic::Exact { n_dig } => {
            let scale = (-(n_dig.min(bits) as f64)).exp2();
            let mut x = source.element(1);
            let mut values = Vec::with_capacity(n_paths);
            let mut draws = vec![0.0; n_t];
            for _ in 0..n_paths {
                for d in draws.iter_mut() {
                    let u = top_bits(permute(&source.permutation, x, bits), bits, n_dig) as f64 * scale;
                    *d = eval_icdf(icdf, u);
                    x = lcg_step(&source.lcg, x);
                }
                let path = model.path(&draws);
                values.push(payoffs.total(&path[1..]));
            }
            values
        }
        Arithmetic::Fixed(fmt) => {
            let fm = model.encode(fmt)?;
            let legs = payoffs.encode(fmt)?;
            let table = icdf.encode(fmt)?;
            (0..n_paths)
                .map(|p| {
                    let draws = fixed_draws(source, &table, p as u128, n_t);
                    Ok(fmt.decode(fm.path(&legs, &draws, false)?.payoff))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(estimate(values))
}

/// Discretized standard normal on `N` equal cells of `[x_lo, x_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub probs: Vec<f64>,
}

impl SnGrid {
    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn delta(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n() as f64
    }

    /// Left endpoint of cell `i`, the value the cell stands for.
    pub fn point(&self, i: usize) -> f64 {
        self.x_lo + self.delta() * i as f64
    }

    /// Same points with other cell weights (e.g. those a circuit realizes).
    pub fn with_probs(&self, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != self.n() {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: format!("{} weights for {} cells", probs.len(), self.n()),
            });
        }
        Ok(Self { probs, ..self.clone() })
    }
}

pub fn sn_grid(x_lo: f64, x_hi: f64, n: usize) -> Result<SnGrid> {
    if !(x_lo < x_hi) || n == 0 {
        return Err(Error::InvalidParameter {
            name: "sn_grid",
            reason: format!("need x_lo < x_hi and N ≥ 1, got [{x_lo}, {x_hi}], N={n}"),
        });
    }
    let d = (x_hi - x_lo) / n as f64;
    let probs = (0..n)
        .map(|i| mass(x_lo + d * i as f64, x_lo + d * (i + 1) as f64))
        .collect();
    Ok(SnGrid { x_lo, x_hi, probs })
}

pub const DEFAULT_ENUMERATION_BUDGET: usize = 1 << 20;

/// Probability-weighted sum over every draw pattern `(i_1 … i_{n_t})`.
///
/// `fixed` selects register arithmetic with the accumulating update; draws
/// are then `enc(x_lo) + enc(δ)·i`.
pub fn price_enumerated(
    model: &LvModel,
    payoffs: &PayoffSpec,
    grid: &SnGrid,
    fixed: Option<FxFormat>,
    budget: usize,
) -> Result<f64> {
    payoffs.check_dates(model.n_t())?;
    let n = grid.n();
    let n_t = model.n_t();
    let patterns = (n as f64).powi(n_t as i32);
    if patterns > budget as f64 {
        return Err(Error::EnumerationBudget { patterns, budget });
    }
    let enc = match fixed {
        Some(fmt) => Some((
            model.encode(fmt)?,
            payoffs.encode(fmt)?,
            fmt.encode(grid.x_lo)?,
            fmt.encode(grid.delta())?,
        )),
        None => None,
    };
    let mut idx = vec![0usize; n_t];
    let mut total = 0.0;
    for _ in 0..patterns as usize {
        let p: f64 = idx.iter().map(|&i| grid.probs[i]).product();
        let value = match &enc {
            Some((fm, legs, off, slope)) => {
                let draws: Vec<i64> = idx.iter().map(|&i| fm.fmt.wrap(*off as i128 + *slope as i128 * i as i128)).collect();
                fm.fmt.decode(fm.path(legs, &draws, true)?.payoff)
            }
            None => {
                let draws: Vec<f64> = idx.iter().map(|&i| grid.point(i)).collect();
                payoffs.total(&model.path(&draws)[1..])
            }
        };
        total += p * value;
        for d in idx.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    Ok(total)
}

/// Black–Scholes call price at zero rates.
pub fn bs_call_price(t: f64, k: f64, s0: f64, sigma: f64) -> f64 {
    if k <= 0.0 {
        return s0;
    }
    let v = sigma * t.sqrt();
    let d1 = ((s0 / k).ln() + 0.5 * v * v) / v;
    cdf(d1) * s0 - cdf(d1 - v) * k
}

/// Black–Scholes volatility reproducing `price`, by bisection on `[1e-6, 10]`.
pub fn implied_vol(t: f64, k: f64, s0: f64, price: f64) -> Result<f64> {
    let lower = (s0 - k).max(0.0);
    if !(price > lower && price < s0) {
        return Err(Error::ArbitrageBounds {
            price,
            lower,
            upper: s0,
        });
    }
    let (mut lo, mut hi) = (1e-6, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = bs_call_price(t, k, s0, mid);
        if (v - price).abs() <= 1e-10 {
            return Ok(mid);
        }
        if v < price {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Absolute local volatility `√(2 ∂_T V / ∂²_K V)` by centred differences.
pub fn dupire_local_vol<F>(surface: F, t: f64, k: f64, h_t: f64, h_k: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let (h_t, h_k) = (h_t.abs(), h_k.abs());
    let dv_dt = (surface(t + h_t, k) - surface(t - h_t, k)) / (2.0 * h_t);
    let d2v_dk2 = (surface(t, k + h_k) - 2.0 * surface(t, k) + surface(t, k - h_k)) / (h_k * h_k);
    if !(d2v_dk2 > 0.0) || dv_dt < 0.0 {
        return Err(Error::InvalidParameter {
            name: "surface",
            reason: format!("∂T V = {dv_dt}, ∂²K V = {d2v_dk2}: arbitrage in the price surface"),
        });
    }
    Ok((2.0 * dv_dt / d2v_dk2).sqrt())
}
