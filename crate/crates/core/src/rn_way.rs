//! Pricing circuit with one superposed draw register per time step.
//!
//! Each `w_j` is prepared in the discretized standard normal state by the SN
//! gate; step `j` then loads the step's coefficients by a comparator cascade
//! on `s_{j−1}`, writes `s_j = s_{j−1} + a′ s_{j−1} w + b′ w` into a fresh
//! register and accumulates the payment into a fresh payoff register.
//! Nothing is uncomputed.

use serde::{Deserialize, Serialize};

use crate::circuit::blocks::{compact_cascade, encode_amplitude, load_cascade, payoff_clamp};
use crate::circuit::{measure_prob, simulate, Circuit, CircuitSummary, CostModel, Op, QuantumState, Qubit, RegId, Role};
use crate::error::{Error, Result};
use crate::fixedpoint::{arccos_raw, mask, sqrt_raw, FxFormat};
use crate::lvmodel::{price_enumerated, sn_grid, FixedLeg, FixedModel, LvModel, PayoffSpec, SnGrid};
use crate::normal::mass;

/// Discretization of the standard normal draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    /// `N_SN = 2^n_dig` cells.
    pub n_dig: u32,
    /// Levels `m < m_star` load `f` from a table; later levels use the
    /// linear approximation.
    pub m_star: u32,
    /// Format of the `f`, `√f` and angle registers.
    pub fmt: FxFormat,
}

impl Default for SnConfig {
    fn default() -> Self {
        Self {
            x_lo: -4.0,
            x_hi: 4.0,
            n_dig: 3,
            m_star: 7,
            fmt: FxFormat { n_int: 2, n_frac: 14 },
        }
    }
}

impl SnConfig {
    pub fn validate(&self) -> Result<()> {
        self.fmt.validate()?;
        if !(self.x_lo < self.x_hi) || !self.x_lo.is_finite() || !self.x_hi.is_finite() {
            return Err(invalid("sn bounds", "need finite x_lo < x_hi"));
        }
        if self.n_dig == 0 || self.n_dig > 24 {
            return Err(invalid("n_dig", "must lie in 1..=24"));
        }
        if self.m_star < 2 {
            return Err(invalid("m_star", "must be at least 2"));
        }
        if !self.fmt.fits(((std::f64::consts::FRAC_PI_2 * self.fmt.scale()).floor()) as i128) {
            return Err(invalid("sn fmt", format!("{} cannot hold angles up to π/2", self.fmt)));
        }
        Ok(())
    }

    /// `Δ = x_hi − x_lo`.
    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn n_sn(&self) -> usize {
        1 << self.n_dig
    }

    /// The target distribution.
    pub fn grid(&self) -> Result<SnGrid> {
        sn_grid(self.x_lo, self.x_hi, self.n_sn())
    }

    /// Cell width `Δ / 2^m` at level `m`.
    pub fn level_width(&self, m: u32) -> f64 {
        self.width() / (1u64 << m) as f64
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Share of the mass of `[x, x + δ]` that lies in its left half.
pub fn g_exact(x: f64, delta: f64) -> f64 {
    let total = mass(x, x + delta);
    if total <= 0.0 {
        0.5
    } else {
        mass(x, x + delta / 2.0) / total
    }
}

/// Second-order expansion of [`g_exact`] in `δ`.
pub fn g_taylor(x: f64, delta: f64) -> f64 {
    0.5 + delta * x / 8.0 + delta * delta / 16.0
}

/// `f` at level `m` for prefix `i`, in exact arithmetic.
pub fn f_exact(sn: &SnConfig, m: u32, i: u64) -> f64 {
    let d = sn.level_width(m);
    g_exact(sn.x_lo + d * i as f64, d)
}

/// Raw `(offset, slope)` of the linear `f` map at level `m`: the value at
/// the middle prefix is the encoded expansion there, and the slope is the
/// encoded `δ²/8`.
pub fn affine_f(sn: &SnConfig, m: u32) -> Result<(i64, i64)> {
    let d = sn.level_width(m);
    let mid = 1u64 << (m - 1);
    let slope = sn.fmt.encode(d * d / 8.0)?;
    let at_mid = sn.fmt.encode(g_taylor(sn.x_lo + d * mid as f64, d))?;
    Ok((at_mid - slope * mid as i64, slope))
}

/// Raw `f` that the level-`m` gate loads for prefix `i`.
pub fn f_code(sn: &SnConfig, m: u32, i: u64) -> Result<i64> {
    if m < sn.m_star {
        sn.fmt.encode(f_exact(sn, m, i))
    } else {
        let (offset, slope) = affine_f(sn, m)?;
        Ok(sn.fmt.wrap(offset as i128 + slope as i128 * i as i128))
    }
}

/// Raw angle `arccos √f` as the square-root and arccos gates compute it.
pub fn theta_code(sn: &SnConfig, f_raw: i64) -> Result<i64> {
    arccos_raw(sqrt_raw(f_raw, sn.fmt), sn.fmt)
}

/// Cell probabilities the SN gate actually prepares, computed classically
/// from the same fixed-point angles.
pub fn realized_probs(sn: &SnConfig) -> Result<Vec<f64>> {
    sn.validate()?;
    let n = sn.n_dig;
    let mut probs = vec![if n == 0 { 1.0 } else { 0.5 }; 2];
    for m in 1..n {
        let mut next = Vec::with_capacity(probs.len() * 2);
        for (i, &p) in probs.iter().enumerate() {
            let th = sn.fmt.decode(theta_code(sn, f_code(sn, m, i as u64)?)?);
            let (s, c) = th.sin_cos();
            next.push(p * c * c);
            next.push(p * s * s);
        }
        probs = next;
    }
    Ok(probs)
}

#[derive(Debug, Clone, Serialize)]
pub struct RnWayConfig {
    pub model: LvModel,
    pub payoffs: PayoffSpec,
    pub sn: SnConfig,
    pub fmt: FxFormat,
    pub payoff_scale: f64,
}

/// Registers of one SN gate.
#[derive(Debug, Clone)]
pub struct SnRegs {
    pub w: RegId,
    /// Per level `m = 1 … n_dig−1`: `f`, `√f`, `θ`.
    pub f: Vec<RegId>,
    pub root: Vec<RegId>,
    pub theta: Vec<RegId>,
    pub flag: Qubit,
}

/// Registers owned by step `j`.
#[derive(Debug, Clone)]
pub struct RnStepRegs {
    pub sn: SnRegs,
    pub w_value: RegId,
    pub a: RegId,
    pub b: RegId,
    pub lv_flag: Qubit,
    pub sw: RegId,
    pub s: RegId,
    pub payoff: RegId,
}

#[derive(Debug, Clone)]
pub struct RnLayout {
    pub s0: RegId,
    pub steps: Vec<RnStepRegs>,
    pub tmp: RegId,
    pub payoff_flags: [Qubit; 2],
    pub out: Qubit,
}

/// A validated configuration with its fixed-point tables.
#[derive(Debug, Clone)]
pub struct RnWay {
    cfg: RnWayConfig,
    fm: FixedModel,
    legs: Vec<FixedLeg>,
    w_offset: i64,
    w_slope: i64,
}

fn add_sn_regs(c: &mut Circuit, sn: &SnConfig, tag: &str) -> Result<SnRegs> {
    let w = c.add_register(&format!("w_{tag}"), sn.n_dig, None, Role::W, false)?;
    let mut f = Vec::new();
    let mut root = Vec::new();
    let mut theta = Vec::new();
    for m in 1..sn.n_dig {
        f.push(c.add_numeric(&format!("f_{tag}_{m}"), sn.fmt, Role::Ancilla, false)?);
        root.push(c.add_numeric(&format!("sqrt_{tag}_{m}"), sn.fmt, Role::Ancilla, false)?);
        theta.push(c.add_numeric(&format!("theta_{tag}_{m}"), sn.fmt, Role::Theta, false)?);
    }
    let flag = Qubit::new(c.add_register(&format!("sn_flag_{tag}"), 1, None, Role::Flag, false)?, 0);
    Ok(SnRegs { w, f, root, theta, flag })
}

/// Level-`m` `f` gate on `r.w`, writing into `r.f[m−1]`.
fn emit_fmi(c: &mut Circuit, sn: &SnConfig, r: &SnRegs, m: u32) -> Result<()> {
    let n = sn.n_dig;
    let dst = r.f[m as usize - 1];
    if m >= sn.m_star {
        let (offset, slope) = affine_f(sn, m)?;
        return c.apply(Op::AffineAdd {
            src: r.w,
            lo: n - m,
            len: m,
            dst,
            offset,
            slope,
            sub: false,
        });
    }
    let codes: Vec<u128> = (0..1u64 << m)
        .map(|i| f_code(sn, m, i).map(|v| sn.fmt.to_bits(v)))
        .collect::<Result<_>>()?;
    let prefix: Vec<Qubit> = (n - m..n).map(|b| Qubit::new(r.w, b)).collect();
    // The flag turns on at the input's own prefix and stays on, so every
    // load from there up fires; each load cancels the next one's code.
    for (i, &code) in codes.iter().enumerate() {
        let pattern = (!(i as u128) & mask(m)) << (n - m);
        if pattern != 0 {
            c.apply(Op::XorConst { reg: r.w, value: pattern })?;
        }
        c.apply_controlled(Op::Flip(r.flag), &prefix)?;
        if pattern != 0 {
            c.apply(Op::XorConst { reg: r.w, value: pattern })?;
        }
        let load = code ^ codes.get(i + 1).copied().unwrap_or(0);
        if load != 0 {
            c.apply_controlled(Op::XorConst { reg: dst, value: load }, &[r.flag])?;
        }
    }
    // Every input matched exactly once.
    c.apply(Op::Flip(r.flag))
}

fn emit_sn(c: &mut Circuit, sn: &SnConfig, r: &SnRegs) -> Result<()> {
    let n = sn.n_dig;
    c.apply(Op::Hadamard(Qubit::new(r.w, n - 1)))?;
    for m in 1..n {
        let l = m as usize - 1;
        emit_fmi(c, sn, r, m)?;
        c.apply(Op::Sqrt { src: r.f[l], dst: r.root[l] })?;
        c.apply(Op::Arccos { src: r.root[l], dst: r.theta[l] })?;
        c.apply(Op::Rotate {
            target: Qubit::new(r.w, n - 1 - m),
            angle: crate::circuit::Angle::Register(r.theta[l]),
            adjoint: false,
        })?;
    }
    Ok(())
}

/// Circuit holding only one SN gate's registers.
fn sn_circuit(sn: &SnConfig) -> Result<(Circuit, SnRegs)> {
    sn.validate()?;
    let mut c = Circuit::new();
    let r = add_sn_regs(&mut c, sn, "1")?;
    Ok((c, r))
}

impl RnWay {
    pub fn new(cfg: RnWayConfig) -> Result<Self> {
        cfg.sn.validate()?;
        cfg.fmt.validate()?;
        cfg.payoffs.check_dates(cfg.model.n_t())?;
        if !(cfg.payoff_scale > 0.0) {
            return Err(invalid("payoff_scale", "must be positive"));
        }
        let fm = cfg.model.encode(cfg.fmt)?;
        let legs = cfg.payoffs.encode(cfg.fmt)?;
        let grid = cfg.sn.grid()?;
        let w_offset = cfg.fmt.encode(grid.x_lo)?;
        let w_slope = cfg.fmt.encode(grid.delta())?;
        Ok(Self {
            cfg,
            fm,
            legs,
            w_offset,
            w_slope,
        })
    }

    pub fn config(&self) -> &RnWayConfig {
        &self.cfg
    }

    pub fn fixed_model(&self) -> &FixedModel {
        &self.fm
    }

    pub fn layout(&self) -> Result<(Circuit, RnLayout)> {
        let f = self.cfg.fmt;
        let mut c = Circuit::new();
        let s0 = c.add_numeric("s_0", f, Role::S, false)?;
        let mut steps = Vec::new();
        for j in 1..=self.cfg.model.n_t() {
            let sn = add_sn_regs(&mut c, &self.cfg.sn, &j.to_string())?;
            steps.push(RnStepRegs {
                sn,
                w_value: c.add_numeric(&format!("w_value_{j}"), f, Role::W, false)?,
                a: c.add_numeric(&format!("lv_a_{j}"), f, Role::Lv, false)?,
                b: c.add_numeric(&format!("lv_b_{j}"), f, Role::Lv, false)?,
                lv_flag: Qubit::new(c.add_register(&format!("lv_flag_{j}"), 1, None, Role::Flag, false)?, 0),
                sw: c.add_numeric(&format!("sw_{j}"), f, Role::Ancilla, false)?,
                s: c.add_numeric(&format!("s_{j}"), f, Role::S, false)?,
                payoff: c.add_numeric(&format!("payoff_{j}"), f, Role::Payoff, false)?,
            });
        }
        let tmp = c.add_numeric("payoff_tmp", f, Role::Ancilla, true)?;
        let pf = c.add_register("payoff_flags", 2, None, Role::Flag, true)?;
        let out = c.add_register("out", 1, None, Role::Output, false)?;
        Ok((
            c,
            RnLayout {
                s0,
                steps,
                tmp,
                payoff_flags: [Qubit::new(pf, 0), Qubit::new(pf, 1)],
                out: Qubit::new(out, 0),
            },
        ))
    }

    fn emit_uj(&self, c: &mut Circuit, l: &RnLayout, j: usize) -> Result<()> {
        let f = self.cfg.fmt;
        let r = &l.steps[j - 1];
        let prev_s = if j == 1 { l.s0 } else { l.steps[j - 2].s };
        let st = self.fm.step(j);
        let codes: Vec<Vec<u128>> = st.a.iter().zip(&st.b).map(|(&a, &b)| vec![f.to_bits(a), f.to_bits(b)]).collect();
        let (thresholds, codes) = compact_cascade(&st.grid, &codes, f.min_raw(), f.max_raw());
        load_cascade(c, prev_s, &thresholds, &codes, &[r.a, r.b], r.lv_flag)?;
        c.apply(Op::AffineAdd {
            src: r.sn.w,
            lo: 0,
            len: self.cfg.sn.n_dig,
            dst: r.w_value,
            offset: self.w_offset,
            slope: self.w_slope,
            sub: false,
        })?;
        c.apply(Op::Copy { src: prev_s, dst: r.s })?;
        c.apply(Op::Mul { x: prev_s, y: r.w_value, dst: r.sw, sub: false })?;
        c.apply(Op::Mul { x: r.a, y: r.sw, dst: r.s, sub: false })?;
        c.apply(Op::Mul { x: r.b, y: r.w_value, dst: r.s, sub: false })?;
        if j > 1 {
            c.apply(Op::Copy { src: l.steps[j - 2].payoff, dst: r.payoff })?;
        }
        payoff_clamp(c, &self.legs[j - 1], r.s, l.tmp, l.payoff_flags, r.payoff)
    }

    pub fn uj(&self, j: usize) -> Result<Circuit> {
        if j == 0 || j > self.cfg.model.n_t() {
            return Err(invalid("j", format!("step {j} outside 1..={}", self.cfg.model.n_t())));
        }
        let (mut c, l) = self.layout()?;
        self.emit_uj(&mut c, &l, j)?;
        Ok(c)
    }

    pub fn full(&self) -> Result<(Circuit, RnLayout)> {
        let (mut c, l) = self.layout()?;
        for r in &l.steps {
            emit_sn(&mut c, &self.cfg.sn, &r.sn)?;
        }
        c.apply(Op::XorConst { reg: l.s0, value: self.cfg.fmt.to_bits(self.fm.s0) })?;
        for j in 1..=self.cfg.model.n_t() {
            self.emit_uj(&mut c, &l, j)?;
        }
        let last = l.steps.last().map_or(l.s0, |r| r.payoff);
        encode_amplitude(&mut c, last, self.cfg.payoff_scale, l.out)?;
        Ok((c, l))
    }

    /// Simulates the full circuit and compares it with the enumerated
    /// fixed-point price.
    pub fn simulate(&self, budget: usize) -> Result<RnSimReport> {
        let (c, l) = self.full()?;
        let f = self.cfg.fmt;
        let state = simulate(&c, QuantumState::zero(&c), budget)?;
        let probability = measure_prob(&state, |k| k[l.out.reg] == 1);

        let mut branches_ok = true;
        for (key, _) in state.iter() {
            let draws: Vec<i64> = l
                .steps
                .iter()
                .map(|r| f.wrap(self.w_offset as i128 + self.w_slope as i128 * key[r.sn.w] as i128))
                .collect();
            let path = self.fm.path(&self.legs, &draws, true)?;
            let mut s = vec![f.from_bits(key[l.s0])];
            s.extend(l.steps.iter().map(|r| f.from_bits(key[r.s])));
            let payoff = l.steps.last().map_or(0, |r| f.from_bits(key[r.payoff]));
            branches_ok &= s == path.states && payoff == path.payoff;
        }

        let grid = self.cfg.sn.grid()?;
        let realized = realized_probs(&self.cfg.sn)?;
        let n_paths = grid.n().pow(self.cfg.model.n_t() as u32);
        let enumerate = |g: &SnGrid| price_enumerated(&self.cfg.model, &self.cfg.payoffs, g, Some(f), n_paths.max(1));
        let enumerated = enumerate(&grid.with_probs(realized.clone())?)?;
        let enumerated_exact = enumerate(&grid)?;
        let sn_max_dev = realized.iter().zip(&grid.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(RnSimReport {
            probability,
            price: probability * self.cfg.payoff_scale,
            enumerated,
            enumerated_exact,
            sn_max_dev,
            branches_ok,
            support: state.support(),
            summary: c.summary(&CostModel::default()),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RnSimReport {
    pub probability: f64,
    pub price: f64,
    /// Enumerated fixed-point price weighted by the realized SN probabilities.
    pub enumerated: f64,
    /// Same, weighted by the exact cell masses.
    pub enumerated_exact: f64,
    /// Largest gap between realized and exact cell probabilities.
    pub sn_max_dev: f64,
    /// Every branch carries the reference engine's path and payoff.
    pub branches_ok: bool,
    pub support: usize,
    pub summary: CircuitSummary,
}

pub fn build_fmi_gate(config: &RnWayConfig, m: u32) -> Result<Circuit> {
    let sn = &config.sn;
    if m == 0 || m >= sn.n_dig {
        return Err(invalid("m", format!("level {m} outside 1..{}", sn.n_dig)));
    }
    let (mut c, r) = sn_circuit(sn)?;
    emit_fmi(&mut c, sn, &r, m)?;
    Ok(c)
}

pub fn build_sn_gate(config: &RnWayConfig) -> Result<Circuit> {
    let (mut c, r) = sn_circuit(&config.sn)?;
    emit_sn(&mut c, &config.sn, &r)?;
    Ok(c)
}

pub fn build_uj_rn(config: &RnWayConfig, j: usize) -> Result<Circuit> {
    RnWay::new(config.clone())?.uj(j)
}

pub fn build_full_rn(config: &RnWayConfig) -> Result<Circuit> {
    Ok(RnWay::new(config.clone())?.full()?.0)
}

/// Probabilities of the `w` register after simulating one SN gate.
pub fn sn_state_probs(sn: &SnConfig, budget: usize) -> Result<Vec<f64>> {
    let (mut c, r) = sn_circuit(sn)?;
    emit_sn(&mut c, sn, &r)?;
    let st = simulate(&c, QuantumState::zero(&c), budget)?;
    let marg = st.marginal(r.w);
    Ok((0..sn.n_sn() as u128).map(|i| marg.get(&i).copied().unwrap_or(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::DEFAULT_BUDGET;
    use crate::normal::pdf;

    /// Composite Gauss–Legendre (5 nodes) on `n` panels.
    fn quad(a: f64, b: f64, n: usize) -> f64 {
        const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / n as f64;
        (0..n)
            .map(|k| {
                let c = a + h * (k as f64 + 0.5);
                X.iter().zip(W).map(|(x, w)| w * pdf(c + x * h / 2.0)).sum::<f64>() * h / 2.0
            })
            .sum()
    }

    fn g_quad(x: f64, d: f64) -> f64 {
        quad(x, x + d / 2.0, 8) / quad(x, x + d, 16)
    }

    fn sn(n_dig: u32) -> SnConfig {
        SnConfig {
            n_dig,
            ..SnConfig::default()
        }
    }

    #[test]
    fn g_limits_and_quadrature() {
        assert!((g_taylor(0.0, 1e-9) - 0.5).abs() < 1e-15);
        assert!((g_exact(0.0, 1e-6) - 0.5).abs() < 1e-8);
        assert!((g_exact(1.0, 0.0625) - g_quad(1.0, 0.0625)).abs() < 1e-12);
        assert!((g_taylor(1.0, 0.0625) - g_quad(1.0, 0.0625)).abs() < 1e-5);
    }

    #[test]
    fn taylor_error_is_third_order() {
        let worst = |d: f64| (0..=1000).map(|k| -4.0 + 0.008 * k as f64).map(|x| (g_taylor(x, d) - g_exact(x, d)).abs()).fold(0.0, f64::max);
        let e7 = worst(8.0 / 128.0);
        let e8 = worst(8.0 / 256.0);
        assert!((e7 / e8 - 8.0).abs() < 0.5, "{e7} {e8}");
        assert!(worst(8.0 / 256.0) < 1e-5);
    }

    #[test]
    fn table_level_loads_exact_f() {
        let cfg = sn(4);
        let rc = RnWayConfig {
            model: LvModel::constant(0.2, 1.0, 1, 1.0).unwrap(),
            payoffs: PayoffSpec::zero(1),
            sn: cfg,
            fmt: FxFormat::new(4, 8).unwrap(),
            payoff_scale: 1.0,
        };
        let c = build_fmi_gate(&rc, 2).unwrap();
        let w = c.reg("w_1").unwrap();
        let fr = c.reg("f_1_2").unwrap();
        for i in 0..4u128 {
            let st = simulate(&c, QuantumState::basis(&c, &[(w, i << 2)]), 4).unwrap();
            let key = st.iter().next().unwrap().0.to_vec();
            let want = cfg.fmt.encode(f_exact(&cfg, 2, i as u64)).unwrap();
            assert_eq!(cfg.fmt.from_bits(key[fr]), want);
            let g = (key[fr], key[w]);
            assert_eq!(g.1, i << 2);
            assert_eq!(key.iter().filter(|&&v| v != 0).count(), 1 + (i != 0) as usize);
        }
    }

    #[test]
    fn affine_level_hits_midpoint() {
        let cfg = SnConfig {
            n_dig: 9,
            ..SnConfig::default()
        };
        let rc = RnWayConfig {
            model: LvModel::constant(0.2, 1.0, 1, 1.0).unwrap(),
            payoffs: PayoffSpec::zero(1),
            sn: cfg,
            fmt: FxFormat::new(4, 8).unwrap(),
            payoff_scale: 1.0,
        };
        let m = cfg.m_star;
        let c = build_fmi_gate(&rc, m).unwrap();
        assert_eq!(c.histogram().get("affine_add"), Some(&1));
        let w = c.reg("w_1").unwrap();
        let fr = c.reg(&format!("f_1_{m}")).unwrap();
        let mid = 1u128 << (m - 1);
        let st = simulate(&c, QuantumState::basis(&c, &[(w, mid << (9 - m))]), 4).unwrap();
        let key = st.iter().next().unwrap().0;
        let d = cfg.level_width(m);
        assert_eq!(cfg.fmt.from_bits(key[fr]), cfg.fmt.encode(0.5 + d * d / 16.0).unwrap());
    }

    #[test]
    fn sn_state_matches_grid() {
        for (n, tol) in [(3, 1e-3), (6, 1e-4)] {
            let cfg = sn(n);
            let got = sn_state_probs(&cfg, DEFAULT_BUDGET).unwrap();
            let want = cfg.grid().unwrap().probs;
            let dev = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dev <= tol, "n_dig={n}: {dev}");
            assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let realized = realized_probs(&cfg).unwrap();
            for (a, b) in got.iter().zip(&realized) {
                assert!((a - b).abs() < 1e-14);
            }
            // First split is an exact half.
            let top: f64 = got[..got.len() / 2].iter().sum();
            assert!((top - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn amplitudes_are_real_and_non_negative() {
        let cfg = sn(4);
        let (mut c, r) = sn_circuit(&cfg).unwrap();
        emit_sn(&mut c, &cfg, &r).unwrap();
        let st = simulate(&c, QuantumState::zero(&c), DEFAULT_BUDGET).unwrap();
        for (_, a) in st.iter() {
            assert!(a.im == 0.0 && a.re >= 0.0);
        }
    }

    #[test]
    fn refinement_marginals() {
        let cfg = sn(5);
        let (mut c, r) = sn_circuit(&cfg).unwrap();
        emit_sn(&mut c, &cfg, &r).unwrap();
        // Gates per level: the f gate, sqrt, arccos, rotation.
        let rot: Vec<usize> = c.gates().iter().enumerate().filter(|(_, g)| matches!(g.op, Op::Rotate { .. })).map(|(i, _)| i).collect();
        for m in 1..cfg.n_dig {
            let st = simulate(&c.slice(0..rot[m as usize - 1] + 1), QuantumState::zero(&c), DEFAULT_BUDGET).unwrap();
            let coarse = cfg.n_dig - m - 1;
            let want = sn_grid(cfg.x_lo, cfg.x_hi, 1 << (m + 1)).unwrap().probs;
            for (i, p) in want.iter().enumerate() {
                let got = crate::circuit::measure_prob(&st, |k| (k[r.w] >> coarse) as usize == i);
                assert!((got - p).abs() < 1e-4, "m={m} i={i}");
            }
        }
    }

    fn rn_config(n_t: usize, n_dig: u32) -> RnWayConfig {
        RnWayConfig {
            model: LvModel::homogeneous(n_t as f64 * 0.25, n_t, vec![0.8, 1.2], vec![0.1, 0.2, 0.1], vec![0.1, 0.02, 0.26], 1.0).unwrap(),
            payoffs: PayoffSpec::european_call(1.0, n_t),
            sn: sn(n_dig),
            fmt: FxFormat::new(4, 12).unwrap(),
            payoff_scale: 2.0,
        }
    }

    #[test]
    fn one_step_two_cells() {
        let rep = RnWay::new(rn_config(1, 1)).unwrap().simulate(DEFAULT_BUDGET).unwrap();
        assert!(rep.branches_ok);
        assert!((rep.price - rep.enumerated).abs() < 1e-12);
    }

    #[test]
    fn two_steps_eight_cells() {
        let rep = RnWay::new(rn_config(2, 3)).unwrap().simulate(DEFAULT_BUDGET).unwrap();
        assert!(rep.branches_ok);
        assert!((rep.price - rep.enumerated).abs() <= 1e-6, "{} vs {}", rep.price, rep.enumerated);
        assert!((rep.price - rep.enumerated_exact).abs() <= 1e-3);
    }

    #[test]
    fn draws_are_independent_across_steps() {
        let way = RnWay::new(rn_config(2, 2)).unwrap();
        let (c, l) = way.full().unwrap();
        let st = simulate(&c, QuantumState::zero(&c), DEFAULT_BUDGET).unwrap();
        let p = realized_probs(&way.config().sn).unwrap();
        let (w1, w2) = (l.steps[0].sn.w, l.steps[1].sn.w);
        for i in 0..4 {
            for k in 0..4 {
                let got = crate::circuit::measure_prob(&st, |key| key[w1] == i as u128 && key[w2] == k as u128);
                assert!((got - p[i] * p[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn later_steps_leave_earlier_registers_alone() {
        let way = RnWay::new(rn_config(2, 2)).unwrap();
        let (_, l) = way.layout().unwrap();
        let u2 = way.uj(2).unwrap();
        let r1 = &l.steps[0];
        for g in u2.gates() {
            for t in g.op.targets() {
                assert!(![r1.a, r1.b, r1.lv_flag.reg, r1.s, r1.payoff, r1.sw].contains(&t));
            }
        }
    }

    #[test]
    fn config_errors() {
        let mut bad = sn(3);
        bad.m_star = 1;
        assert!(bad.validate().is_err());
        bad = sn(3);
        bad.x_hi = bad.x_lo;
        assert!(bad.validate().is_err());
        bad = sn(3);
        bad.fmt = FxFormat::new(1, 8).unwrap();
        assert!(bad.validate().is_err());
        assert!(build_fmi_gate(&rn_config(1, 3), 3).is_err());
    }
}
