//! Pricing circuit that keeps one pseudo-random word on a register and
//! advances it step by step.
//!
//! Layout of the full circuit: Hadamards on `samp`; `J_W` jumps the generator
//! to the first element of the branch's subsequence and maps it through the
//! inverse-CDF gate into `w`; then for each step the `V` sweep updates `s` in
//! place, the step's payment is added to `payoff`, and `P_W` advances the
//! generator and refreshes `w`. A final rotation encodes `payoff / scale`
//! into the amplitude of `out`.

use serde::Serialize;

use crate::circuit::blocks::{all_bits, compact_cascade, encode_amplitude, flag_interval, flip_pattern, load_cascade, payoff_clamp};
use crate::circuit::sim::simulate_marked;
use crate::circuit::{measure_prob, Circuit, CircuitSummary, CostModel, Op, QuantumState, Qubit, RegId, Role};
use crate::error::{Error, Result};
use crate::fixedpoint::{trunc_div_raw, trunc_mul_raw, FxFormat};
use crate::icdf::{IcdfApprox, IcdfTable};
use crate::lvmodel::{monotonicity_check, price_sampled, Arithmetic, FixedLeg, FixedModel, LvModel, PayoffSpec};
use crate::prng::{inv_mod_pow2, lcg_jump, pow_mod_pow2, PrnSource};

/// Work limit (candidate states × draws) for the exhaustive injectivity
/// check; larger formats fall back to the analytic denominator check.
pub const INJECTIVITY_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Serialize)]
pub struct PrnWayConfig {
    pub model: LvModel,
    pub payoffs: PayoffSpec,
    pub source: PrnSource,
    pub icdf: IcdfApprox,
    /// `N_samp = 2^n_samp` branches, one subsequence each.
    pub n_samp: u32,
    pub fmt: FxFormat,
    pub payoff_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectivityCheck {
    /// Every representable state and draw was checked.
    Exhaustive,
    /// Only `1 + a′w > 0` at the extreme draws was checked.
    Analytic,
}

/// Register handles of a PRN-way circuit.
#[derive(Debug, Clone)]
pub struct PrnLayout {
    pub samp: Option<RegId>,
    pub prn: RegId,
    pub t_ext: RegId,
    pub t_prn: RegId,
    pub w: RegId,
    pub s: RegId,
    pub s_prime: RegId,
    pub count: RegId,
    pub g: Qubit,
    pub flags: [Qubit; 2],
    pub anc1: RegId,
    pub anc2: RegId,
    pub u: RegId,
    pub tau: RegId,
    pub coeffs: [RegId; 4],
    pub start: RegId,
    pub shift: RegId,
    pub i1: RegId,
    pub i2: RegId,
    pub icdf_g: Qubit,
    pub payoff: RegId,
    pub tmp: RegId,
    pub payoff_flags: [Qubit; 2],
    pub out: Qubit,
}

impl PrnLayout {
    /// Registers that must be zero between steps.
    pub fn ancillas(&self) -> Vec<RegId> {
        let mut v = vec![
            self.t_ext,
            self.t_prn,
            self.s_prime,
            self.g.reg,
            self.flags[0].reg,
            self.anc1,
            self.anc2,
            self.u,
            self.tau,
            self.start,
            self.shift,
            self.i1,
            self.i2,
            self.icdf_g.reg,
            self.tmp,
            self.payoff_flags[0].reg,
        ];
        v.extend(self.coeffs);
        v
    }
}

/// A validated configuration with its fixed-point tables.
#[derive(Debug, Clone)]
pub struct PrnWay {
    cfg: PrnWayConfig,
    fm: FixedModel,
    legs: Vec<FixedLeg>,
    table: IcdfTable,
    thresholds: Vec<i64>,
    codes: Vec<Vec<u128>>,
    shift_bits: u32,
    draws: Vec<i64>,
    split: (u32, u128),
    check: InjectivityCheck,
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl PrnWay {
    pub fn new(cfg: PrnWayConfig) -> Result<Self> {
        let fmt = cfg.fmt;
        fmt.validate()?;
        let n_t = cfg.model.n_t();
        cfg.payoffs.check_dates(n_t)?;
        cfg.source.validate()?;
        let bits = cfg.source.lcg.n_prn();
        if fmt.n_frac == 0 || fmt.n_frac > bits {
            return Err(invalid("fmt", format!("uniforms take n_frac digits; need 1 ≤ n_frac ≤ n_prn = {bits}")));
        }
        if cfg.n_samp > 64 {
            return Err(invalid("n_samp", "at most 64"));
        }
        let paths = 1u128 << cfg.n_samp;
        if paths * n_t as u128 > 1u128 << bits {
            return Err(invalid("n_samp", format!("{paths} paths of {n_t} draws exceed the period 2^{bits}")));
        }
        let split = cfg
            .source
            .lcg
            .two_adic_split()
            .ok_or_else(|| invalid("lcg.a", "a = 1 has no circuit jump"))?;
        if !(cfg.payoff_scale > 0.0) {
            return Err(invalid("payoff_scale", "must be positive"));
        }
        let fm = cfg.model.encode(fmt)?;
        if fm.s0 < 0 {
            return Err(invalid("s0", "the in-place update needs a non-negative price"));
        }
        let legs = cfg.payoffs.encode(fmt)?;
        let table = cfg.icdf.encode(fmt)?;

        let mut draws: Vec<i64> = (0..1i64 << fmt.n_frac).map(|d| table.eval_raw(d)).collect();
        draws.sort_unstable();
        draws.dedup();
        let (w_min, w_max) = (fmt.decode(draws[0]), fmt.decode(*draws.last().unwrap()));
        monotonicity_check(&cfg.model, w_min, w_max).into_result()?;

        let codes: Vec<Vec<u128>> = table
            .intervals
            .iter()
            .map(|c| {
                let mut v: Vec<u128> = c.coeffs.iter().map(|&x| fmt.to_bits(x)).collect();
                v.push(fmt.to_bits(c.start));
                v.push(c.shift as u128);
                v
            })
            .collect();
        let (thresholds, codes) = compact_cascade(&table.breakpoints, &codes, fmt.min_raw(), fmt.max_raw());
        let max_shift = codes.iter().map(|c| c[5]).max().unwrap_or(0);
        let shift_bits = (128 - max_shift.leading_zeros()).max(1);

        let mut way = Self {
            cfg,
            fm,
            legs,
            table,
            thresholds,
            codes,
            shift_bits,
            draws,
            split,
            check: InjectivityCheck::Analytic,
        };
        way.check = way.check_injectivity()?;
        Ok(way)
    }

    pub fn config(&self) -> &PrnWayConfig {
        &self.cfg
    }

    pub fn fixed_model(&self) -> &FixedModel {
        &self.fm
    }

    pub fn legs(&self) -> &[FixedLeg] {
        &self.legs
    }

    pub fn table(&self) -> &IcdfTable {
        &self.table
    }

    /// Distinct draws the inverse-CDF gate can produce.
    pub fn draw_set(&self) -> &[i64] {
        &self.draws
    }

    pub fn injectivity(&self) -> InjectivityCheck {
        self.check
    }

    /// Number of comparator stages in the inverse-CDF cascade.
    pub fn cascade_len(&self) -> usize {
        self.thresholds.len()
    }

    fn n_intervals(&self, j: usize) -> usize {
        self.fm.step(j).grid.len() + 1
    }

    fn bounds(&self, j: usize, k: usize) -> (Option<i64>, Option<i64>) {
        let grid = &self.fm.step(j).grid;
        let lo = (k >= 2).then(|| grid[k - 2]);
        let hi = (k <= grid.len()).then(|| grid[k - 1]);
        (lo, hi)
    }

    /// Checks that the `V` sweep of every step updates each state once and
    /// restores its scratch registers: within an interval the update must
    /// be undone exactly by the division, and an updated state must not
    /// divide back into a later interval of the sweep.
    fn check_injectivity(&self) -> Result<InjectivityCheck> {
        let fmt = self.cfg.fmt;
        let states = fmt.max_raw() as u64 + 1;
        let work: u64 = (1..=self.fm.steps.len())
            .map(|j| states * self.draws.len() as u64 * self.n_intervals(j) as u64)
            .sum();
        if work > INJECTIVITY_BUDGET {
            return Ok(InjectivityCheck::Analytic);
        }
        for j in 1..=self.fm.steps.len() {
            let st = self.fm.step(j);
            let n = self.n_intervals(j);
            for &w in &self.draws {
                let growth: Vec<i64> = (0..n)
                    .map(|k| self.fm.growth(j, k, w))
                    .collect::<Result<_>>()?;
                if let Some(k) = growth.iter().position(|&g| g <= 0) {
                    return Err(Error::Monotonicity(format!(
                        "step {j}, interval {}: 1 + a′w ≤ 0 at w = {}",
                        k + 1,
                        fmt.decode(w)
                    )));
                }
                let bw: Vec<i128> = st.b.iter().map(|&b| trunc_mul_raw(b, w, fmt)).collect();
                for s in 0..=fmt.max_raw() {
                    let k0 = st.interval(s);
                    let prod = trunc_mul_raw(s, growth[k0], fmt);
                    if !fmt.fits(prod) || !fmt.fits(prod + bw[k0]) {
                        continue;
                    }
                    let next = prod + bw[k0];
                    for k in k0..n {
                        let back = trunc_div_raw(fmt.wrap(next - bw[k]), growth[k], fmt).0;
                        if k == k0 && back != s {
                            return Err(Error::Monotonicity(format!(
                                "step {j}, interval {}: update of S = {} by w = {} is not invertible in {fmt}",
                                k + 1,
                                fmt.decode(s),
                                fmt.decode(w)
                            )));
                        }
                        if k > k0 && st.interval(back) == k {
                            return Err(Error::Monotonicity(format!(
                                "step {j}: S = {} updated in interval {} divides back into interval {} (w = {})",
                                fmt.decode(s),
                                k0 + 1,
                                k + 1,
                                fmt.decode(w)
                            )));
                        }
                    }
                }
            }
        }
        Ok(InjectivityCheck::Exhaustive)
    }

    /// Allocates every register of the construction on an empty circuit.
    pub fn layout(&self) -> Result<(Circuit, PrnLayout)> {
        let f = self.cfg.fmt;
        let bits = self.cfg.source.lcg.n_prn();
        let n_t = self.cfg.model.n_t();
        let count_bits = (usize::BITS - n_t.leading_zeros()).max(1);
        let mut c = Circuit::new();
        let samp = if self.cfg.n_samp > 0 {
            Some(c.add_register("samp", self.cfg.n_samp, None, Role::Samp, false)?)
        } else {
            None
        };
        let prn = c.add_register("prn", bits, None, Role::Prn, false)?;
        let t_ext = c.add_register("prn_ext", bits + self.split.0, None, Role::Prn, true)?;
        let t_prn = c.add_register("prn_next", bits, None, Role::Prn, true)?;
        let w = c.add_numeric("w", f, Role::W, false)?;
        let s = c.add_numeric("s", f, Role::S, false)?;
        let s_prime = c.add_numeric("s_prime", f, Role::SPrime, true)?;
        let count = c.add_register("count", count_bits, None, Role::Count, false)?;
        let g = c.add_register("g", 1, None, Role::Flag, true)?;
        let flags = c.add_register("flags", 2, None, Role::Flag, true)?;
        let anc1 = c.add_numeric("anc1", f, Role::Ancilla, true)?;
        let anc2 = c.add_numeric("anc2", f, Role::Ancilla, true)?;
        let u = c.add_numeric("u", f, Role::Ancilla, true)?;
        let tau = c.add_numeric("tau", f, Role::Ancilla, true)?;
        let coeffs = [
            c.add_numeric("c0", f, Role::Ancilla, true)?,
            c.add_numeric("c1", f, Role::Ancilla, true)?,
            c.add_numeric("c2", f, Role::Ancilla, true)?,
            c.add_numeric("c3", f, Role::Ancilla, true)?,
        ];
        let start = c.add_numeric("start", f, Role::Ancilla, true)?;
        let shift = c.add_register("shift", self.shift_bits, None, Role::Ancilla, true)?;
        let i1 = c.add_numeric("horner1", f, Role::Ancilla, true)?;
        let i2 = c.add_numeric("horner2", f, Role::Ancilla, true)?;
        let icdf_g = c.add_register("icdf_g", 1, None, Role::Flag, true)?;
        let payoff = c.add_numeric("payoff", f, Role::Payoff, false)?;
        let tmp = c.add_numeric("payoff_tmp", f, Role::Ancilla, true)?;
        let pf = c.add_register("payoff_flags", 2, None, Role::Flag, true)?;
        let out = c.add_register("out", 1, None, Role::Output, false)?;
        let layout = PrnLayout {
            samp,
            prn,
            t_ext,
            t_prn,
            w,
            s,
            s_prime,
            count,
            g: Qubit::new(g, 0),
            flags: [Qubit::new(flags, 0), Qubit::new(flags, 1)],
            anc1,
            anc2,
            u,
            tau,
            coeffs,
            start,
            shift,
            i1,
            i2,
            icdf_g: Qubit::new(icdf_g, 0),
            payoff,
            tmp,
            payoff_flags: [Qubit::new(pf, 0), Qubit::new(pf, 1)],
            out: Qubit::new(out, 0),
        };
        Ok((c, layout))
    }

    /// `w += Φ⁻¹(u)`: comparator cascade loads the interval's cubic, Horner
    /// evaluation, then the cascade is undone.
    fn emit_icdf(&self, c: &mut Circuit, l: &PrnLayout) -> Result<()> {
        let [c0, c1, c2, c3] = l.coeffs;
        let mut cascade = c.fork();
        load_cascade(
            &mut cascade,
            l.u,
            &self.thresholds,
            &self.codes,
            &[c0, c1, c2, c3, l.start, l.shift],
            l.icdf_g,
        )?;
        c.append(&cascade)?;
        let mut inner = c.fork();
        inner.apply(Op::ShiftedDiff { src: l.u, start: l.start, shift: l.shift, dst: l.tau })?;
        inner.apply(Op::Mul { x: c3, y: l.tau, dst: l.i1, sub: false })?;
        inner.apply(Op::Add { src: c2, dst: l.i1, sub: false })?;
        inner.apply(Op::Mul { x: l.i1, y: l.tau, dst: l.i2, sub: false })?;
        inner.apply(Op::Add { src: c1, dst: l.i2, sub: false })?;
        c.append(&inner)?;
        c.apply(Op::Mul { x: l.i2, y: l.tau, dst: l.w, sub: false })?;
        c.apply(Op::Add { src: c0, dst: l.w, sub: false })?;
        c.append_inverse(&inner)?;
        c.append_inverse(&cascade)
    }

    /// `w += Φ⁻¹(top digits of permute(prn))`, leaving `prn` unchanged.
    fn emit_phi(&self, c: &mut Circuit, l: &PrnLayout) -> Result<()> {
        let bits = self.cfg.source.lcg.n_prn();
        let n_frac = self.cfg.fmt.n_frac;
        let steps = &self.cfg.source.permutation.steps;
        for &step in steps {
            c.apply(Op::XorShift { reg: l.prn, step, inverse: false })?;
        }
        let load = Op::LoadBits { src: l.prn, lo: bits - n_frac, len: n_frac, dst: l.u, at: 0 };
        c.apply(load.clone())?;
        self.emit_icdf(c, l)?;
        c.apply(load)?;
        for &step in steps.iter().rev() {
            c.apply(Op::XorShift { reg: l.prn, step, inverse: true })?;
        }
        Ok(())
    }

    fn emit_jw(&self, c: &mut Circuit, l: &PrnLayout) -> Result<()> {
        let lcg = &self.cfg.source.lcg;
        let bits = lcg.n_prn();
        let x0 = self.cfg.source.x0 as u128;
        match l.samp {
            Some(samp) => {
                let (v, u) = self.split;
                let ext = bits + v;
                let n_t = self.cfg.model.n_t() as u128;
                let load = Op::ModExpLoad {
                    src: samp,
                    base: pow_mod_pow2(lcg.a(), n_t, ext),
                    mult: pow_mod_pow2(lcg.a(), 1, ext),
                    dst: l.t_ext,
                };
                c.apply(load.clone())?;
                if x0 != 0 {
                    c.apply(Op::ModMulConst { k: x0, src: l.t_ext, dst: l.prn, sub: false })?;
                }
                if lcg.c() != 0 {
                    let k = lcg.c().wrapping_mul(inv_mod_pow2(u, bits)) & lcg.modulus_mask();
                    c.apply(Op::GeomTail { src: l.t_ext, v, k, dst: l.prn, sub: false })?;
                }
                c.apply(load)?;
            }
            None => {
                let x1 = lcg_jump(lcg, x0, 1);
                if x1 != 0 {
                    c.apply(Op::XorConst { reg: l.prn, value: x1 })?;
                }
            }
        }
        self.emit_phi(c, l)
    }

    /// `prn: x → a x + c` through `prn_next`, then swap back.
    fn emit_pprn(&self, c: &mut Circuit, l: &PrnLayout) -> Result<()> {
        let lcg = &self.cfg.source.lcg;
        c.apply(Op::ModMulConst { k: lcg.a(), src: l.prn, dst: l.t_prn, sub: false })?;
        c.apply(Op::ModMulConst { k: lcg.alpha(), src: l.t_prn, dst: l.prn, sub: true })?;
        if lcg.c() != 0 {
            c.apply(Op::XorConst { reg: l.prn, value: lcg.c() })?;
            c.apply(Op::ModAdd { src: l.prn, dst: l.t_prn, sub: false })?;
            c.apply(Op::XorConst { reg: l.prn, value: lcg.c() })?;
        }
        c.apply(Op::Swap { a: l.prn, b: l.t_prn })
    }

    fn emit_pw(&self, c: &mut Circuit, l: &PrnLayout) -> Result<()> {
        let mut phi = c.fork();
        self.emit_phi(&mut phi, l)?;
        c.append_inverse(&phi)?;
        self.emit_pprn(c, l)?;
        c.append(&phi)
    }

    fn emit_vjk(&self, c: &mut Circuit, l: &PrnLayout, j: usize, k: usize) -> Result<()> {
        let f = self.cfg.fmt;
        let st = self.fm.step(j);
        let (a, b) = (st.a[k - 1], st.b[k - 1]);
        let (lo, hi) = self.bounds(j, k);
        let count_bits = all_bits(c, l.count);

        // anc1 = 1 + a′w on every branch, shared by the update and the test.
        let mut growth = c.fork();
        growth.apply(Op::XorConst { reg: l.anc1, value: f.to_bits(self.fm.one) })?;
        if a != 0 {
            growth.apply(Op::MulConst { k: a, src: l.w, dst: l.anc1, sub: false })?;
        }
        c.append(&growth)?;

        flip_pattern(c, l.count, (j - 1) as u128)?;
        flag_interval(c, l.s, lo, hi, l.flags, &count_bits, l.g)?;
        flip_pattern(c, l.count, (j - 1) as u128)?;

        // S ← S·(1 + a′w) by multiply, swap and dividing the old value out.
        let gc = [l.g];
        c.apply_controlled(Op::Mul { x: l.s, y: l.anc1, dst: l.anc2, sub: false }, &gc)?;
        c.apply_controlled(Op::Swap { a: l.s, b: l.anc2 }, &gc)?;
        c.apply_controlled(Op::Div { num: l.s, den: l.anc1, dst: l.anc2 }, &gc)?;
        if b != 0 {
            c.apply_controlled(Op::MulConst { k: b, src: l.w, dst: l.s, sub: false }, &gc)?;
        }
        c.apply_controlled(Op::AddConst { dst: l.count, value: 1, sub: false }, &gc)?;

        // S′ = (S − b′w) / (1 + a′w) recovers the old price on updated branches.
        let mut back = c.fork();
        if b != 0 {
            back.apply(Op::MulConst { k: b, src: l.w, dst: l.s, sub: true })?;
        }
        back.apply(Op::Div { num: l.s, den: l.anc1, dst: l.s_prime })?;
        if b != 0 {
            back.apply(Op::MulConst { k: b, src: l.w, dst: l.s, sub: false })?;
        }
        c.append(&back)?;

        flip_pattern(c, l.count, j as u128)?;
        flag_interval(c, l.s_prime, lo, hi, l.flags, &count_bits, l.g)?;
        flip_pattern(c, l.count, j as u128)?;

        c.append_inverse(&back)?;
        c.append_inverse(&growth)
    }

    fn emit_uj(&self, c: &mut Circuit, l: &PrnLayout, j: usize) -> Result<()> {
        for k in 1..=self.n_intervals(j) {
            self.emit_vjk(c, l, j, k)?;
        }
        payoff_clamp(c, &self.legs[j - 1], l.s, l.tmp, l.payoff_flags, l.payoff)
    }

    fn check_step(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.cfg.model.n_t() {
            return Err(invalid("j", format!("step {j} outside 1..={}", self.cfg.model.n_t())));
        }
        Ok(())
    }

    pub fn jw(&self) -> Result<Circuit> {
        let (mut c, l) = self.layout()?;
        self.emit_jw(&mut c, &l)?;
        Ok(c)
    }

    pub fn pw(&self) -> Result<Circuit> {
        let (mut c, l) = self.layout()?;
        self.emit_pw(&mut c, &l)?;
        Ok(c)
    }

    /// The inverse-CDF gate alone, reading `u` and adding into `w`.
    pub fn icdf_gate(&self) -> Result<Circuit> {
        let (mut c, l) = self.layout()?;
        self.emit_icdf(&mut c, &l)?;
        Ok(c)
    }

    pub fn vjk(&self, j: usize, k: usize) -> Result<Circuit> {
        self.check_step(j)?;
        if k == 0 || k > self.n_intervals(j) {
            return Err(invalid("k", format!("interval {k} outside 1..={}", self.n_intervals(j))));
        }
        let (mut c, l) = self.layout()?;
        self.emit_vjk(&mut c, &l, j, k)?;
        Ok(c)
    }

    pub fn uj(&self, j: usize) -> Result<Circuit> {
        self.check_step(j)?;
        let (mut c, l) = self.layout()?;
        self.emit_uj(&mut c, &l, j)?;
        Ok(c)
    }

    /// Whole pricing circuit, with a mark `U_j` after each step's payment.
    pub fn full(&self) -> Result<(Circuit, PrnLayout)> {
        let (mut c, l) = self.layout()?;
        if let Some(samp) = l.samp {
            for b in 0..self.cfg.n_samp {
                c.apply(Op::Hadamard(Qubit::new(samp, b)))?;
            }
        }
        c.apply(Op::XorConst { reg: l.s, value: self.cfg.fmt.to_bits(self.fm.s0) })?;
        self.emit_jw(&mut c, &l)?;
        let n_t = self.cfg.model.n_t();
        for j in 1..=n_t {
            self.emit_uj(&mut c, &l, j)?;
            c.mark(format!("U_{j}"));
            if j < n_t {
                self.emit_pw(&mut c, &l)?;
            }
        }
        encode_amplitude(&mut c, l.payoff, self.cfg.payoff_scale, l.out)?;
        Ok((c, l))
    }

    /// Simulates the full circuit and compares every branch with the
    /// fixed-point reference engine.
    pub fn simulate(&self, budget: usize) -> Result<PrnSimReport> {
        let (c, l) = self.full()?;
        let f = self.cfg.fmt;
        let n_t = self.cfg.model.n_t();
        let n_paths = 1usize << self.cfg.n_samp;
        let mut paths: Vec<PrnPathRecord> = (0..n_paths)
            .map(|i| {
                let draws = crate::lvmodel::fixed_draws(&self.cfg.source, &self.table, i as u128, n_t);
                let classical = self.fm.path(&self.legs, &draws, false)?;
                Ok(PrnPathRecord {
                    sample: i as u128,
                    states: vec![self.fm.s0; n_t + 1],
                    draws: vec![0; n_t],
                    payoff: 0,
                    classical_states: classical.states,
                    classical_draws: classical.draws,
                    classical_payoff: classical.payoff,
                    prn_ok: true,
                    matches: false,
                })
            })
            .collect::<Result<_>>()?;
        let ancillas = l.ancillas();
        let mut ancillas_clean = true;
        let mut count_ok = true;
        let mut step = 0usize;
        let source = &self.cfg.source;
        let state = simulate_marked(&c, QuantumState::zero(&c), budget, |_, st| {
            step += 1;
            for (key, _) in st.iter() {
                let i = l.samp.map_or(0, |r| key[r]) as usize;
                let p = &mut paths[i];
                p.states[step] = f.from_bits(key[l.s]);
                p.draws[step - 1] = f.from_bits(key[l.w]);
                p.payoff = f.from_bits(key[l.payoff]);
                p.prn_ok &= key[l.prn] == source.element((i * n_t + step) as u128);
                ancillas_clean &= ancillas.iter().all(|&r| key[r] == 0);
                count_ok &= key[l.count] == step as u128;
            }
            Ok(())
        })?;
        for p in &mut paths {
            p.matches = p.prn_ok && p.states == p.classical_states && p.draws == p.classical_draws && p.payoff == p.classical_payoff;
        }
        let probability = measure_prob(&state, |k| k[l.out.reg] == 1);
        let classical = price_sampled(
            &self.cfg.model,
            &self.cfg.payoffs,
            source,
            &self.cfg.icdf,
            n_paths,
            Arithmetic::Fixed(f),
        )?;
        Ok(PrnSimReport {
            probability,
            price: probability * self.cfg.payoff_scale,
            classical_price: classical.price,
            all_match: paths.iter().all(|p| p.matches),
            ancillas_clean,
            count_ok,
            support: state.support(),
            injectivity: self.check,
            paths,
            summary: c.summary(&CostModel::default()),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrnPathRecord {
    pub sample: u128,
    /// Raw `s` after each step, starting with `S_0`.
    pub states: Vec<i64>,
    pub draws: Vec<i64>,
    pub payoff: i64,
    pub classical_states: Vec<i64>,
    pub classical_draws: Vec<i64>,
    pub classical_payoff: i64,
    /// `prn` held the expected generator element after every step.
    pub prn_ok: bool,
    pub matches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrnSimReport {
    /// `P(out = 1)`.
    pub probability: f64,
    pub price: f64,
    /// Fixed-point Monte Carlo price over the same subsequences.
    pub classical_price: f64,
    pub all_match: bool,
    pub ancillas_clean: bool,
    pub count_ok: bool,
    /// Basis states in the final superposition.
    pub support: usize,
    pub injectivity: InjectivityCheck,
    pub paths: Vec<PrnPathRecord>,
    pub summary: CircuitSummary,
}

pub fn build_jw(config: &PrnWayConfig) -> Result<Circuit> {
    PrnWay::new(config.clone())?.jw()
}

pub fn build_pw(config: &PrnWayConfig) -> Result<Circuit> {
    PrnWay::new(config.clone())?.pw()
}

pub fn build_icdf_gate(config: &PrnWayConfig) -> Result<Circuit> {
    PrnWay::new(config.clone())?.icdf_gate()
}

pub fn build_vjk(config: &PrnWayConfig, j: usize, k: usize) -> Result<Circuit> {
    PrnWay::new(config.clone())?.vjk(j, k)
}

pub fn build_uj(config: &PrnWayConfig, j: usize) -> Result<Circuit> {
    PrnWay::new(config.clone())?.uj(j)
}

pub fn build_full(config: &PrnWayConfig) -> Result<Circuit> {
    Ok(PrnWay::new(config.clone())?.full()?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{simulate, DEFAULT_BUDGET};
    use crate::icdf::{default_domain, fit_icdf, FitOptions};
    use crate::lvmodel::PayoffLeg;
    use crate::prng::{lcg_step, LcgParams};
    use std::sync::OnceLock;

    fn icdf() -> IcdfApprox {
        static FIT: OnceLock<IcdfApprox> = OnceLock::new();
        FIT.get_or_init(|| {
            let (lo, hi) = default_domain();
            fit_icdf(lo, hi, FitOptions::default()).unwrap()
        })
        .clone()
    }

    /// Absolute vol 0.75 on two flat price intervals, S0 = 3, Δt = 0.25.
    fn model(n_t: usize) -> LvModel {
        let t = n_t as f64 * 0.25;
        LvModel::homogeneous(t, n_t, vec![2.0, 4.0], vec![0.0; 3], vec![0.75; 3], 3.0).unwrap()
    }

    fn config(n_samp: u32, n_t: usize) -> PrnWayConfig {
        let lcg = LcgParams::new(8, 5, 3).unwrap();
        PrnWayConfig {
            model: model(n_t),
            payoffs: PayoffSpec::european_call(3.0, n_t),
            source: PrnSource::with_default_permutation(lcg, 17).unwrap(),
            icdf: icdf(),
            n_samp,
            fmt: FxFormat::new(4, 4).unwrap(),
            payoff_scale: 8.0,
        }
    }

    fn single(c: &Circuit, init: &[(RegId, u128)]) -> Vec<u128> {
        let st = simulate(c, QuantumState::basis(c, init), DEFAULT_BUDGET).unwrap();
        assert_eq!(st.support(), 1);
        let key = st.iter().next().unwrap().0.to_vec();
        key
    }

    #[test]
    fn jump_loads_subsequence_start() {
        let cfg = config(4, 3);
        let way = PrnWay::new(cfg.clone()).unwrap();
        let (_, l) = way.layout().unwrap();
        let c = way.jw().unwrap();
        let table = way.table();
        for i in 0..16u128 {
            let out = single(&c, &[(l.samp.unwrap(), i)]);
            let x = cfg.source.element(i * 3 + 1);
            assert_eq!(out[l.prn], x);
            let d = cfg.source.digits(i * 3 + 1, 4);
            assert_eq!(cfg.fmt.from_bits(out[l.w]), table.eval_raw(d as i64));
            for r in l.ancillas() {
                assert_eq!(out[r], 0, "{}", c.register(r).name);
            }
        }
    }

    #[test]
    fn progress_twice_is_two_steps() {
        let cfg = config(2, 3);
        let way = PrnWay::new(cfg.clone()).unwrap();
        let (_, l) = way.layout().unwrap();
        let mut c = way.jw().unwrap();
        let pw = way.pw().unwrap();
        c.append(&pw).unwrap();
        c.append(&pw).unwrap();
        for i in 0..4u128 {
            let out = single(&c, &[(l.samp.unwrap(), i)]);
            let x1 = cfg.source.element(i * 3 + 1);
            let lcg = &cfg.source.lcg;
            assert_eq!(out[l.prn], lcg_step(lcg, lcg_step(lcg, x1)));
            let d = cfg.source.digits(i * 3 + 3, 4);
            assert_eq!(cfg.fmt.from_bits(out[l.w]), way.table().eval_raw(d as i64));
            assert!(l.ancillas().iter().all(|&r| out[r] == 0));
        }
    }

    #[test]
    fn icdf_gate_matches_table_on_every_input() {
        let cfg = config(1, 1);
        let way = PrnWay::new(cfg.clone()).unwrap();
        let (_, l) = way.layout().unwrap();
        let c = way.icdf_gate().unwrap();
        let f = cfg.fmt;
        for raw in f.min_raw()..=f.max_raw() {
            let out = single(&c, &[(l.u, f.to_bits(raw))]);
            assert_eq!(f.from_bits(out[l.w]), way.table().eval_raw(raw), "u = {raw}");
            let mut anc = l.ancillas();
            anc.retain(|&r| r != l.u);
            assert!(anc.iter().all(|&r| out[r] == 0));
            let want = crate::icdf::icdf_fixed(&cfg.icdf, crate::FxNum::from_raw(raw, f).unwrap()).unwrap();
            assert_eq!(f.from_bits(out[l.w]), want.raw());
        }
    }

    #[test]
    fn outermost_interval_fires_only_the_last_load() {
        let way = PrnWay::new(config(1, 1)).unwrap();
        let (_, l) = way.layout().unwrap();
        let c = way.icdf_gate().unwrap();
        let f = way.config().fmt;
        // Truncated after the cascade: for the top interval g is never set.
        let n_loads = c
            .gates()
            .iter()
            .take_while(|g| !matches!(g.op, Op::ShiftedDiff { .. }))
            .count();
        let st = simulate(&c.slice(0..n_loads), QuantumState::basis(&c, &[(l.u, f.to_bits(f.max_raw()))]), 4).unwrap();
        let key = st.iter().next().unwrap().0;
        assert_eq!(key[l.icdf_g.reg], 0);
        let top = way.codes.last().unwrap();
        assert_eq!(key[l.coeffs[0]], top[0]);
    }

    #[test]
    fn inactive_branch_is_unchanged() {
        let cfg = config(1, 2);
        let way = PrnWay::new(cfg.clone()).unwrap();
        let (_, l) = way.layout().unwrap();
        let f = cfg.fmt;
        // Interval 3 is S ≥ 4; S = 3 lies in interval 2.
        let c = way.vjk(1, 3).unwrap();
        let w = f.to_bits(way.draw_set()[3]);
        let out = single(&c, &[(l.s, f.to_bits(48)), (l.w, w)]);
        let mut want = vec![0u128; c.registers().len()];
        want[l.s] = f.to_bits(48);
        want[l.w] = w;
        assert_eq!(out, want);
    }

    #[test]
    fn active_branch_matches_euler_step() {
        let cfg = config(1, 2);
        let way = PrnWay::new(cfg.clone()).unwrap();
        let (_, l) = way.layout().unwrap();
        let f = cfg.fmt;
        let c = way.vjk(1, 2).unwrap();
        for &w in way.draw_set() {
            let out = single(&c, &[(l.s, f.to_bits(48)), (l.w, f.to_bits(w))]);
            let want = way.fixed_model().prn_update(1, 48, w);
            match want {
                Ok(s) => {
                    assert_eq!(f.from_bits(out[l.s]), s);
                    assert_eq!(out[l.count], 1);
                    assert!(l.ancillas().iter().all(|&r| out[r] == 0));
                }
                Err(_) => continue,
            }
        }
    }

    #[test]
    fn sweep_updates_exactly_once() {
        let cfg = config(1, 2);
        let way = PrnWay::new(cfg.clone()).unwrap();
        let (_, l) = way.layout().unwrap();
        let f = cfg.fmt;
        let mut c = way.layout().unwrap().0;
        for k in 1..=3 {
            c.append(&way.vjk(1, k).unwrap()).unwrap();
        }
        for s in 0..=f.max_raw() {
            for &w in way.draw_set() {
                let Ok(want) = way.fixed_model().prn_update(1, s, w) else { continue };
                let out = single(&c, &[(l.s, f.to_bits(s)), (l.w, f.to_bits(w))]);
                assert_eq!(f.from_bits(out[l.s]), want, "s={s} w={w}");
                assert_eq!(out[l.count], 1);
                assert!(l.ancillas().iter().all(|&r| out[r] == 0));
            }
        }
    }

    #[test]
    fn single_path_payoff() {
        let cfg = config(0, 1);
        let way = PrnWay::new(cfg.clone()).unwrap();
        let rep = way.simulate(DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.paths.len(), 1);
        assert!(rep.all_match && rep.ancillas_clean && rep.count_ok);
        let f = cfg.fmt;
        assert!((rep.price - f.decode(rep.paths[0].classical_payoff)).abs() < 1e-12);
    }

    #[test]
    fn branches_follow_classical_paths() {
        let cfg = config(3, 4);
        let rep = PrnWay::new(cfg).unwrap().simulate(DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.injectivity, InjectivityCheck::Exhaustive);
        assert!(rep.all_match, "{:?}", rep.paths);
        assert!(rep.ancillas_clean && rep.count_ok);
        assert!((rep.price - rep.classical_price).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_denominator() {
        let mut cfg = config(1, 1);
        // 1 + a√Δt·w ≤ 0 for w near −4 when a√Δt ≥ 1/4.
        cfg.model = LvModel::homogeneous(0.25, 1, vec![2.0], vec![0.6, 0.6], vec![0.0, 0.0], 3.0).unwrap();
        cfg.payoffs = PayoffSpec::new(vec![PayoffLeg::ZERO]).unwrap();
        assert!(matches!(build_vjk(&cfg, 1, 1), Err(Error::Monotonicity(_))));
    }

    #[test]
    fn config_errors() {
        let mut cfg = config(1, 1);
        cfg.source = PrnSource::with_default_permutation(LcgParams::new(8, 1, 3).unwrap(), 0).unwrap();
        assert!(PrnWay::new(cfg).is_err());
        let mut cfg = config(9, 1);
        cfg.n_samp = 9;
        assert!(PrnWay::new(cfg).is_err());
        assert!(PrnWay::new(config(1, 2)).unwrap().vjk(3, 1).is_err());
        assert!(PrnWay::new(config(1, 2)).unwrap().vjk(1, 4).is_err());
    }
}
