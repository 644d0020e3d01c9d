//! Sparse basis-state simulator.
//!
//! A state maps a basis assignment (one value per register) to a complex
//! amplitude. Permutation gates move entries; Hadamard and rotations split
//! them. Circuits in this crate only ever populate as many basis states as
//! there are sample branches, so the map stays small even for wide registers.

use std::collections::HashMap;

use num_complex::Complex64;

use super::gate::{Angle, Gate, Op};
use super::{Circuit, Mark, RegId, Register};
use crate::error::{Error, Result};
use crate::fixedpoint::{arccos_raw, mask, sqrt_raw, trunc_div_raw, trunc_mul_raw, FxFormat};
use crate::prng::pow_mod_pow2;

pub const DEFAULT_BUDGET: usize = 1 << 20;
const PRUNE: f64 = 1e-30;

pub type Basis = Box<[u128]>;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: HashMap<Basis, Complex64>,
    n_regs: usize,
}

impl QuantumState {
    /// All registers zero.
    pub fn zero(circuit: &Circuit) -> Self {
        Self::basis(circuit, &[])
    }

    /// Single basis state with the given register values, others zero.
    pub fn basis(circuit: &Circuit, values: &[(RegId, u128)]) -> Self {
        let n = circuit.registers().len();
        let mut key = vec![0u128; n];
        for &(r, v) in values {
            key[r] = v & mask(circuit.register(r).width);
        }
        let mut amps = HashMap::new();
        amps.insert(key.into_boxed_slice(), Complex64::new(1.0, 0.0));
        Self { amps, n_regs: n }
    }

    /// Arbitrary superposition; not renormalized.
    pub fn from_amplitudes(circuit: &Circuit, entries: impl IntoIterator<Item = (Vec<u128>, Complex64)>) -> Result<Self> {
        let n = circuit.registers().len();
        let mut amps = HashMap::new();
        for (k, a) in entries {
            if k.len() != n {
                return Err(Error::WidthMismatch(format!("basis of length {} for {n} registers", k.len())));
            }
            *amps.entry(k.into_boxed_slice()).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        Ok(Self { amps, n_regs: n })
    }

    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u128], &Complex64)> {
        self.amps.iter().map(|(k, a)| (&k[..], a))
    }

    pub fn amplitude(&self, key: &[u128]) -> Complex64 {
        self.amps.get(key).copied().unwrap_or_default()
    }

    /// Distinct values of one register with their probabilities.
    pub fn marginal(&self, reg: RegId) -> HashMap<u128, f64> {
        let mut m = HashMap::new();
        for (k, a) in &self.amps {
            *m.entry(k[reg]).or_insert(0.0) += a.norm_sqr();
        }
        m
    }

    pub fn n_regs(&self) -> usize {
        self.n_regs
    }
}

/// Total probability of the basis states satisfying `pred`.
pub fn measure_prob(state: &QuantumState, pred: impl Fn(&[u128]) -> bool) -> f64 {
    state.iter().filter(|(k, _)| pred(k)).map(|(_, a)| a.norm_sqr()).sum()
}

fn signed(regs: &[Register], r: RegId, bits: u128) -> i64 {
    match regs[r].fmt {
        Some(f) => f.from_bits(bits),
        None => bits as i64,
    }
}

fn fmt(regs: &[Register], r: RegId) -> FxFormat {
    regs[r].fmt.expect("numeric register checked at build")
}

fn add_signed(regs: &[Register], key: &mut [u128], dst: RegId, v: i128, sub: bool) {
    let f = fmt(regs, dst);
    let cur = f.from_bits(key[dst]) as i128;
    let out = if sub { cur - v } else { cur + v };
    key[dst] = f.to_bits(f.wrap(out));
}

/// Applies a permutation gate's action to one basis assignment.
fn permute_basis(op: &Op, regs: &[Register], key: &mut [u128]) -> Result<()> {
    let m = |r: RegId| mask(regs[r].width);
    match op {
        Op::Flip(q) => key[q.reg] ^= 1 << q.bit,
        Op::XorConst { reg, value } => key[*reg] ^= value & m(*reg),
        Op::Copy { src, dst } => key[*dst] ^= key[*src],
        Op::Swap { a, b } => key.swap(*a, *b),
        Op::XorShift { reg, step, inverse } => {
            let w = regs[*reg].width;
            key[*reg] = if *inverse { step.invert(key[*reg], w) } else { step.apply(key[*reg], w) };
        }
        Op::LoadBits { src, lo, len, dst, at } => key[*dst] ^= ((key[*src] >> lo) & mask(*len)) << at,
        Op::Add { src, dst, sub } | Op::ModAdd { src, dst, sub } => {
            let v = if *sub { key[*dst].wrapping_sub(key[*src]) } else { key[*dst].wrapping_add(key[*src]) };
            key[*dst] = v & m(*dst);
        }
        Op::AddConst { dst, value, sub } => {
            let v = if *sub { key[*dst].wrapping_sub(*value) } else { key[*dst].wrapping_add(*value) };
            key[*dst] = v & m(*dst);
        }
        Op::MulConst { k, src, dst, sub } => {
            let f = fmt(regs, *dst);
            let p = trunc_mul_raw(*k, signed(regs, *src, key[*src]), f);
            add_signed(regs, key, *dst, p, *sub);
        }
        Op::ModMulConst { k, src, dst, sub } => {
            let p = k.wrapping_mul(key[*src]);
            let v = if *sub { key[*dst].wrapping_sub(p) } else { key[*dst].wrapping_add(p) };
            key[*dst] = v & m(*dst);
        }
        Op::Mul { x, y, dst, sub } => {
            let f = fmt(regs, *dst);
            let p = trunc_mul_raw(f.from_bits(key[*x]), f.from_bits(key[*y]), f);
            add_signed(regs, key, *dst, p, *sub);
        }
        Op::Div { num, den, dst } => {
            let f = fmt(regs, *dst);
            let (q, _) = trunc_div_raw(f.from_bits(key[*num]), f.from_bits(key[*den]), f);
            key[*dst] ^= f.to_bits(q);
        }
        Op::Compare { reg, cmp, value, target } => {
            if cmp.eval(signed(regs, *reg, key[*reg]), *value) {
                key[target.reg] ^= 1 << target.bit;
            }
        }
        Op::AffineAdd { src, lo, len, dst, offset, slope, sub } => {
            let i = ((key[*src] >> lo) & mask(*len)) as i128;
            add_signed(regs, key, *dst, *offset as i128 + *slope as i128 * i, *sub);
        }
        Op::ShiftedDiff { src, start, shift, dst } => {
            let f = fmt(regs, *dst);
            let d = f.from_bits(key[*src]) as i128 - f.from_bits(key[*start]) as i128;
            let s = key[*shift].min(100) as u32;
            key[*dst] ^= f.to_bits(f.wrap(d << s));
        }
        Op::ModExpLoad { src, base, mult, dst } => {
            let w = regs[*dst].width;
            key[*dst] ^= mult.wrapping_mul(pow_mod_pow2(*base, key[*src], w)) & mask(w);
        }
        Op::GeomTail { src, v, k, dst, sub } => {
            let t = (key[*src].wrapping_sub(1) & m(*src)) >> v;
            let p = k.wrapping_mul(t);
            let out = if *sub { key[*dst].wrapping_sub(p) } else { key[*dst].wrapping_add(p) };
            key[*dst] = out & m(*dst);
        }
        Op::Sqrt { src, dst } => {
            let f = fmt(regs, *dst);
            key[*dst] ^= f.to_bits(sqrt_raw(f.from_bits(key[*src]), f));
        }
        Op::Arccos { src, dst } => {
            let f = fmt(regs, *dst);
            key[*dst] ^= f.to_bits(arccos_raw(f.from_bits(key[*src]), f)?);
        }
        Op::Custom(c) => {
            let before = key.to_vec();
            (c.forward)(key);
            let mut back = key.to_vec();
            (c.inverse)(&mut back);
            if back != before {
                return Err(Error::NotReversible(c.name.clone()));
            }
            for &r in &c.regs {
                key[r] &= m(r);
            }
        }
        Op::Hadamard(_) | Op::Rotate { .. } => unreachable!("amplitude gates are not permutations"),
    }
    Ok(())
}

fn controls_on(g: &Gate, key: &[u128]) -> bool {
    g.controls.iter().all(|q| key[q.reg] >> q.bit & 1 == 1)
}

/// Rotation angle for a basis assignment.
fn angle(a: &Angle, regs: &[Register], key: &[u128]) -> Result<f64> {
    match *a {
        Angle::Register(r) => {
            let f = fmt(regs, r);
            Ok(f.decode(f.from_bits(key[r])))
        }
        Angle::Encode { reg, scale } => {
            let f = fmt(regs, reg);
            let v = f.decode(f.from_bits(key[reg]));
            if v < 0.0 || v > scale {
                return Err(Error::EncodingRange { value: v, scale });
            }
            Ok((v / scale).sqrt().asin())
        }
    }
}

fn apply_gate(g: &Gate, regs: &[Register], state: QuantumState, budget: usize) -> Result<QuantumState> {
    let n_regs = state.n_regs;
    let mut out: HashMap<Basis, Complex64> = HashMap::with_capacity(state.amps.len() * if g.op.is_permutation() { 1 } else { 2 });
    if g.op.is_permutation() {
        for (mut k, a) in state.amps {
            if controls_on(g, &k) {
                permute_basis(&g.op, regs, &mut k)?;
            }
            if out.insert(k, a).is_some() {
                return Err(Error::NotReversible(g.op.kind().into()));
            }
        }
    } else {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (q, mix) = match &g.op {
            Op::Hadamard(q) => (*q, [[h, h], [h, -h]]),
            Op::Rotate { target, .. } => (*target, [[0.0; 2]; 2]),
            _ => unreachable!(),
        };
        for (k, a) in state.amps {
            if !controls_on(g, &k) {
                *out.entry(k).or_default() += a;
                continue;
            }
            let m = match &g.op {
                Op::Rotate { angle: ang, adjoint, .. } => {
                    let th = angle(ang, regs, &k)?;
                    let th = if *adjoint { -th } else { th };
                    let (s, c) = th.sin_cos();
                    // Column b is the image of |b⟩.
                    [[c, -s], [s, c]]
                }
                _ => mix,
            };
            let b = (k[q.reg] >> q.bit & 1) as usize;
            for (nb, row) in m.iter().enumerate() {
                let coef = row[b];
                if coef == 0.0 {
                    continue;
                }
                let mut nk = k.clone();
                nk[q.reg] = (nk[q.reg] & !(1 << q.bit)) | ((nb as u128) << q.bit);
                *out.entry(nk).or_default() += a * coef;
            }
        }
        out.retain(|_, a| a.norm_sqr() > PRUNE);
    }
    if out.len() > budget {
        return Err(Error::Budget {
            size: out.len(),
            budget,
        });
    }
    Ok(QuantumState { amps: out, n_regs })
}

/// Runs every gate of `circuit` on `state`.
pub fn simulate(circuit: &Circuit, state: QuantumState, budget: usize) -> Result<QuantumState> {
    simulate_range(circuit, 0..circuit.len(), state, budget)
}

pub fn simulate_range(circuit: &Circuit, range: std::ops::Range<usize>, mut state: QuantumState, budget: usize) -> Result<QuantumState> {
    if state.n_regs != circuit.registers().len() {
        return Err(Error::WidthMismatch(format!(
            "state has {} registers, circuit {}",
            state.n_regs,
            circuit.registers().len()
        )));
    }
    if state.amps.len() > budget {
        return Err(Error::Budget {
            size: state.amps.len(),
            budget,
        });
    }
    let regs = circuit.registers();
    for g in &circuit.gates()[range] {
        state = apply_gate(g, regs, state, budget)?;
    }
    Ok(state)
}

/// Simulates the whole circuit, calling `inspect` at every mark with the
/// state reached there.
pub fn simulate_marked<F>(circuit: &Circuit, mut state: QuantumState, budget: usize, mut inspect: F) -> Result<QuantumState>
where
    F: FnMut(&Mark, &QuantumState) -> Result<()>,
{
    let mut at = 0;
    for m in circuit.marks() {
        state = simulate_range(circuit, at..m.at, state, budget)?;
        at = m.at;
        inspect(m, &state)?;
    }
    simulate_range(circuit, at..circuit.len(), state, budget)
}
