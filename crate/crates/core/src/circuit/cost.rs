//! Leading-order T-count and qubit accounting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::gate::{Gate, Op};
use super::Circuit;

/// Per-gate figures as functions of operand width `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Adder: `adder·n`; controlled adder: `ctrl_adder·n`.
    pub adder: u64,
    pub ctrl_adder: u64,
    pub mod_adder: u64,
    /// Multiplier and divider: `k·n²`.
    pub multiplier: u64,
    pub divider: u64,
    pub square_root: u64,
    /// Multi-controlled Toffoli with `k` controls: `mct·k`, or `mct·k − mct_offset`
    /// when `k ≤ mct_exact_max`.
    pub mct: u64,
    pub mct_offset: u64,
    pub mct_exact_max: usize,
    pub arccos_t: u64,
    pub arccos_qubits: u32,
    pub rotation: u64,
    /// A comparator is an adder and its uncomputation.
    pub comparator: u64,
    pub mod_multiplier: u64,
    /// Controlled swap per bit.
    pub fredkin: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            adder: 14,
            ctrl_adder: 21,
            mod_adder: 70,
            multiplier: 21,
            divider: 35,
            square_root: 14,
            mct: 8,
            mct_offset: 9,
            mct_exact_max: 8,
            arccos_t: 34_000,
            arccos_qubits: 105,
            rotation: 3,
            comparator: 28,
            mod_multiplier: 70,
            fredkin: 7,
        }
    }
}

impl CostModel {
    pub fn mct_t(&self, k: usize) -> u64 {
        match k {
            0 | 1 => 0,
            k if k <= self.mct_exact_max => self.mct * k as u64 - self.mct_offset,
            k => self.mct * k as u64,
        }
    }

    /// T-count of one gate given operand widths.
    pub fn gate_t(&self, g: &Gate, width: impl Fn(usize) -> u64) -> u64 {
        let k = g.controls.len();
        let ctrl = k >= 1;
        // Several controls are first folded into one ancilla and unfolded after.
        let fold = if k >= 2 { 2 * self.mct_t(k) } else { 0 };
        let adder = |n: u64| if ctrl { self.ctrl_adder * n } else { self.adder * n };
        let body = match &g.op {
            Op::Flip(_) => return self.mct_t(k),
            Op::Hadamard(_) | Op::XorConst { .. } => 0,
            Op::Rotate { angle, .. } => {
                let r = match angle {
                    super::Angle::Register(r) | super::Angle::Encode { reg: r, .. } => *r,
                };
                self.rotation * width(r)
            }
            Op::Copy { dst, .. } | Op::Swap { a: dst, .. } | Op::XorShift { reg: dst, .. } => {
                if ctrl {
                    self.fredkin * width(*dst)
                } else {
                    0
                }
            }
            Op::LoadBits { len, .. } => {
                if ctrl {
                    self.fredkin * *len as u64
                } else {
                    0
                }
            }
            Op::Add { dst, .. } | Op::AddConst { dst, .. } => adder(width(*dst)),
            Op::ModAdd { dst, .. } => self.mod_adder * width(*dst),
            Op::MulConst { dst, .. } => width(*dst) * adder(width(*dst)),
            Op::ModMulConst { dst, .. } => self.mod_multiplier * width(*dst).pow(2),
            Op::Mul { dst, .. } => self.multiplier * width(*dst).pow(2),
            Op::Div { dst, .. } => self.divider * width(*dst).pow(2),
            Op::Compare { reg, .. } => self.comparator * width(*reg),
            Op::AffineAdd { len, dst, .. } => (*len as u64 + 1) * adder(width(*dst)),
            Op::ShiftedDiff { dst, shift, .. } => {
                let n = width(*dst);
                2 * self.adder * n + self.fredkin * n * width(*shift)
            }
            Op::ModExpLoad { src, dst, .. } => width(*src) * self.mod_multiplier * width(*dst).pow(2),
            Op::GeomTail { dst, src, .. } => self.mod_multiplier * width(*dst).pow(2) + 2 * self.adder * width(*src),
            Op::Sqrt { dst, .. } => self.square_root * width(*dst).pow(2),
            Op::Arccos { .. } => self.arccos_t,
            Op::Custom(c) => c.t_count,
        };
        body + fold
    }

    /// Qubits a gate borrows internally beyond its operand registers.
    pub fn gate_ancillas(&self, g: &Gate, width: impl Fn(usize) -> u64) -> u64 {
        let k = g.controls.len();
        let mct_anc = |k: usize| k.saturating_sub(2) as u64;
        let fold = if k >= 2 { 1 + mct_anc(k) } else { 0 };
        let body = match &g.op {
            Op::Flip(_) => return mct_anc(k),
            Op::Div { dst, .. } | Op::Sqrt { dst, .. } => 2 * width(*dst),
            Op::Arccos { .. } => self.arccos_qubits as u64,
            _ => 0,
        };
        body + fold
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCost {
    pub gates: usize,
    pub t_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub t_count: u64,
    /// Peak over the gate list of live register qubits plus gate ancillas.
    pub qubits: u64,
    pub by_kind: BTreeMap<String, KindCost>,
}

pub fn cost(circuit: &Circuit, model: &CostModel) -> CostReport {
    let regs = circuit.registers();
    let width = |r: usize| regs[r].width as u64;
    let gates = circuit.gates();

    let mut by_kind: BTreeMap<String, KindCost> = BTreeMap::new();
    let mut t_count = 0;
    for g in gates {
        let t = model.gate_t(g, width);
        t_count += t;
        let e = by_kind.entry(g.op.kind().to_string()).or_insert(KindCost { gates: 0, t_count: 0 });
        e.gates += 1;
        e.t_count += t;
    }

    // Live ranges of scratch registers: first to last touching gate.
    let mut first = vec![usize::MAX; regs.len()];
    let mut last = vec![0usize; regs.len()];
    for (i, g) in gates.iter().enumerate() {
        for r in g.registers() {
            first[r] = first[r].min(i);
            last[r] = i;
        }
    }
    let persistent: u64 = regs.iter().filter(|r| !r.scratch).map(|r| r.width as u64).sum();
    // Difference array of scratch widths over gate indices.
    let mut delta = vec![0i64; gates.len() + 1];
    for (r, reg) in regs.iter().enumerate() {
        if reg.scratch && first[r] != usize::MAX {
            delta[first[r]] += reg.width as i64;
            delta[last[r] + 1] -= reg.width as i64;
        }
    }
    let mut live = 0i64;
    let mut peak = persistent;
    for (i, g) in gates.iter().enumerate() {
        live += delta[i];
        peak = peak.max(persistent + live as u64 + model.gate_ancillas(g, width));
    }
    CostReport {
        t_count,
        qubits: peak,
        by_kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Qubit, Role};
    use crate::fixedpoint::FxFormat;

    #[test]
    fn table_rows() {
        let m = CostModel::default();
        let mut c = Circuit::new();
        assert_eq!(cost(&c, &m).t_count, 0);
        let a = c.add_register("a", 16, None, Role::Ancilla, false).unwrap();
        let b = c.add_register("b", 16, None, Role::Ancilla, false).unwrap();
        c.apply(Op::Add { src: a, dst: b, sub: false }).unwrap();
        assert_eq!(cost(&c, &m).t_count, 224);

        let f = FxFormat::new(8, 8).unwrap();
        let mut c = Circuit::new();
        let x = c.add_numeric("x", f, Role::S, false).unwrap();
        let y = c.add_numeric("y", f, Role::W, false).unwrap();
        let z = c.add_numeric("z", f, Role::Ancilla, false).unwrap();
        c.apply(Op::Mul { x, y, dst: z, sub: false }).unwrap();
        assert_eq!(cost(&c, &m).t_count, 5376);

        let mut c = Circuit::new();
        let p = c.add_register("p", 64, None, Role::Prn, false).unwrap();
        let q = c.add_register("q", 64, None, Role::Prn, false).unwrap();
        c.apply(Op::ModAdd { src: p, dst: q, sub: false }).unwrap();
        assert_eq!(cost(&c, &m).t_count, 4480);
    }

    #[test]
    fn mct_rows() {
        let m = CostModel::default();
        assert_eq!(m.mct_t(4), 23);
        assert_eq!(m.mct_t(2), 7);
        assert_eq!(m.mct_t(8), 55);
        assert_eq!(m.mct_t(9), 72);
        let mut c = Circuit::new();
        let r = c.add_register("r", 5, None, Role::Count, false).unwrap();
        let ctrls: Vec<Qubit> = (0..4).map(|b| Qubit::new(r, b)).collect();
        c.apply_controlled(Op::Flip(Qubit::new(r, 4)), &ctrls).unwrap();
        assert_eq!(cost(&c, &m).t_count, 23);
    }

    #[test]
    fn cost_is_additive_and_scratch_is_released() {
        let m = CostModel::default();
        let mut c = Circuit::new();
        let a = c.add_register("a", 8, None, Role::Ancilla, false).unwrap();
        let s1 = c.add_register("s1", 8, None, Role::Ancilla, true).unwrap();
        let s2 = c.add_register("s2", 8, None, Role::Ancilla, true).unwrap();
        c.apply(Op::Add { src: a, dst: s1, sub: false }).unwrap();
        c.apply(Op::Add { src: a, dst: s1, sub: true }).unwrap();
        c.apply(Op::Add { src: a, dst: s2, sub: false }).unwrap();
        c.apply(Op::Add { src: a, dst: s2, sub: true }).unwrap();
        let r = cost(&c, &m);
        // s1 and s2 are never live together.
        assert_eq!(r.qubits, 16);
        let first = c.slice(0..2);
        let second = c.slice(2..4);
        assert_eq!(cost(&first, &m).t_count + cost(&second, &m).t_count, r.t_count);
    }
}
