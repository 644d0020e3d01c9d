//! Reversible circuits at macro-gate granularity.
//!
//! A [`Circuit`] owns named registers and an ordered list of [`Gate`]s. Each
//! gate has a total action on basis states (see [`sim`]) and a leading-order
//! T-count (see [`cost`]). Builders append gates directly; sub-circuits are
//! combined with [`Circuit::append`] and undone with [`Circuit::inverse`].

pub mod blocks;
pub mod cost;
mod gate;
pub mod sim;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixedpoint::FxFormat;

pub use cost::{cost, CostModel, CostReport};
pub use gate::{Angle, BasisFn, Cmp, CustomOp, Gate, Op, Qubit, RegId};
pub use sim::{measure_prob, simulate, QuantumState, DEFAULT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Samp,
    W,
    S,
    SPrime,
    Payoff,
    Prn,
    Count,
    Flag,
    Ancilla,
    Lv,
    Theta,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub width: u32,
    pub fmt: Option<FxFormat>,
    pub role: Role,
    /// Scratch registers only count toward the qubit total between their
    /// first and last use.
    pub scratch: bool,
}

/// A position in the gate list, used to inspect intermediate states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mark {
    pub at: usize,
    pub label: String,
}

#[derive(Debug, Clone, Default)]
pub struct Circuit {
    registers: Vec<Register>,
    gates: Vec<Gate>,
    marks: Vec<Mark>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_register(&mut self, name: &str, width: u32, fmt: Option<FxFormat>, role: Role, scratch: bool) -> Result<RegId> {
        if self.registers.iter().any(|r| r.name == name) {
            return Err(Error::DuplicateRegister(name.into()));
        }
        if width == 0 || width > 128 {
            return Err(Error::WidthMismatch(format!("register `{name}` width {width} outside 1..=128")));
        }
        if let Some(f) = fmt {
            if f.bits() != width {
                return Err(Error::WidthMismatch(format!("register `{name}`: width {width} but format {f}")));
            }
        }
        self.registers.push(Register {
            name: name.into(),
            width,
            fmt,
            role,
            scratch,
        });
        Ok(self.registers.len() - 1)
    }

    /// Numeric register holding values in `fmt`.
    pub fn add_numeric(&mut self, name: &str, fmt: FxFormat, role: Role, scratch: bool) -> Result<RegId> {
        self.add_register(name, fmt.bits(), Some(fmt), role, scratch)
    }

    pub fn reg(&self, name: &str) -> Result<RegId> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.into()))
    }

    pub fn register(&self, id: RegId) -> &Register {
        &self.registers[id]
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn qubit(&self, name: &str, bit: u32) -> Result<Qubit> {
        let r = self.reg(name)?;
        if bit >= self.registers[r].width {
            return Err(Error::WidthMismatch(format!("bit {bit} of `{name}`")));
        }
        Ok(Qubit::new(r, bit))
    }

    /// Records a label at the current end of the gate list.
    pub fn mark(&mut self, label: impl Into<String>) {
        self.marks.push(Mark {
            at: self.gates.len(),
            label: label.into(),
        });
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        self.check(&gate)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn apply(&mut self, op: Op) -> Result<()> {
        self.push(Gate::new(op))
    }

    pub fn apply_controlled(&mut self, op: Op, controls: &[Qubit]) -> Result<()> {
        self.push(Gate::controlled(op, controls.to_vec()))
    }

    fn width(&self, id: RegId) -> Result<u32> {
        self.registers
            .get(id)
            .map(|r| r.width)
            .ok_or_else(|| Error::UnknownRegister(format!("#{id}")))
    }

    fn fmt_of(&self, id: RegId) -> Result<FxFormat> {
        self.registers[id]
            .fmt
            .ok_or_else(|| Error::WidthMismatch(format!("register `{}` is not numeric", self.registers[id].name)))
    }

    fn same_fmt(&self, ids: &[RegId]) -> Result<()> {
        let f = self.fmt_of(ids[0])?;
        for &i in &ids[1..] {
            if self.fmt_of(i)? != f {
                return Err(Error::WidthMismatch(format!(
                    "registers `{}` and `{}` have different formats",
                    self.registers[ids[0]].name, self.registers[i].name
                )));
            }
        }
        Ok(())
    }

    fn same_width(&self, a: RegId, b: RegId) -> Result<()> {
        if self.width(a)? != self.width(b)? {
            return Err(Error::WidthMismatch(format!(
                "`{}` ({}) vs `{}` ({})",
                self.registers[a].name, self.registers[a].width, self.registers[b].name, self.registers[b].width
            )));
        }
        Ok(())
    }

    fn check_qubit(&self, q: Qubit) -> Result<()> {
        if q.bit >= self.width(q.reg)? {
            return Err(Error::WidthMismatch(format!("bit {} of `{}`", q.bit, self.registers[q.reg].name)));
        }
        Ok(())
    }

    fn check(&self, gate: &Gate) -> Result<()> {
        for r in gate.registers() {
            self.width(r)?;
        }
        for &c in &gate.controls {
            self.check_qubit(c)?;
        }
        let targets = gate.op.targets();
        let reads: Vec<RegId> = gate.op.sources();
        // A written register may not also be read or used as a control,
        // otherwise the action would not be a bijection.
        let aliased = targets.iter().any(|t| reads.contains(t));
        let ctrl_hits = match &gate.op {
            Op::Flip(q) | Op::Hadamard(q) => gate.controls.contains(q),
            Op::Rotate { target, .. } | Op::Compare { target, .. } => gate.controls.contains(target),
            _ => gate.controls.iter().any(|c| targets.contains(&c.reg)),
        };
        if aliased || ctrl_hits {
            return Err(Error::WidthMismatch(format!("gate `{}` reads a register it writes", gate.op.kind())));
        }
        match &gate.op {
            Op::Flip(q) | Op::Hadamard(q) => self.check_qubit(*q)?,
            Op::Rotate { target, angle, .. } => {
                self.check_qubit(*target)?;
                match angle {
                    Angle::Register(r) => {
                        self.fmt_of(*r)?;
                    }
                    Angle::Encode { reg, scale } => {
                        self.fmt_of(*reg)?;
                        if !(*scale > 0.0) {
                            return Err(Error::InvalidParameter {
                                name: "scale",
                                reason: "must be positive".into(),
                            });
                        }
                    }
                }
            }
            Op::Compare { reg, target, .. } => {
                self.fmt_of(*reg)?;
                self.check_qubit(*target)?;
                if target.reg == *reg {
                    return Err(Error::WidthMismatch("comparator target inside its input".into()));
                }
            }
            Op::Copy { src, dst } | Op::Add { src, dst, .. } | Op::ModAdd { src, dst, .. } => self.same_width(*src, *dst)?,
            Op::Swap { a, b } => {
                self.same_width(*a, *b)?;
                if a == b {
                    return Err(Error::WidthMismatch("swap of a register with itself".into()));
                }
            }
            Op::LoadBits { src, lo, len, dst, at } => {
                if lo + len > self.width(*src)? || at + len > self.width(*dst)? {
                    return Err(Error::WidthMismatch("load_bits field out of range".into()));
                }
            }
            Op::MulConst { src, dst, .. } => self.same_fmt(&[*src, *dst])?,
            Op::Mul { x, y, dst, .. } => self.same_fmt(&[*x, *y, *dst])?,
            Op::Div { num, den, dst } => self.same_fmt(&[*num, *den, *dst])?,
            Op::Sqrt { src, dst } | Op::Arccos { src, dst } => self.same_fmt(&[*src, *dst])?,
            Op::AffineAdd { src, lo, len, dst, .. } => {
                if lo + len > self.width(*src)? {
                    return Err(Error::WidthMismatch("affine_add field out of range".into()));
                }
                self.fmt_of(*dst)?;
            }
            Op::ShiftedDiff { src, start, dst, .. } => self.same_fmt(&[*src, *start, *dst])?,
            _ => {}
        }
        Ok(())
    }

    /// Appends `other`'s gates, matching registers by name and adding the
    /// ones this circuit lacks.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        let map = self.import_registers(other)?;
        let offset = self.gates.len();
        for g in &other.gates {
            let g = remap(g, &map);
            self.push(g)?;
        }
        for m in &other.marks {
            self.marks.push(Mark {
                at: m.at + offset,
                label: m.label.clone(),
            });
        }
        Ok(())
    }

    /// Appends the inverse of `other` (gates reversed and inverted).
    pub fn append_inverse(&mut self, other: &Circuit) -> Result<()> {
        self.append(&other.inverse())
    }

    fn import_registers(&mut self, other: &Circuit) -> Result<Vec<RegId>> {
        other
            .registers
            .iter()
            .map(|r| match self.reg(&r.name) {
                Ok(id) => {
                    let mine = &self.registers[id];
                    if mine.width != r.width || mine.fmt != r.fmt {
                        Err(Error::WidthMismatch(format!("register `{}` differs between circuits", r.name)))
                    } else {
                        Ok(id)
                    }
                }
                Err(_) => self.add_register(&r.name, r.width, r.fmt, r.role, r.scratch),
            })
            .collect()
    }

    /// Same registers, gates reversed and inverted. Marks are dropped.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            registers: self.registers.clone(),
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            marks: Vec::new(),
        }
    }

    /// Copy of the gates in `range` over the same registers.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Circuit {
        Circuit {
            registers: self.registers.clone(),
            gates: self.gates[range].to_vec(),
            marks: Vec::new(),
        }
    }

    /// An empty circuit over the same registers, for building a block that
    /// is later appended (possibly inverted).
    pub fn fork(&self) -> Circuit {
        Circuit {
            registers: self.registers.clone(),
            gates: Vec::new(),
            marks: Vec::new(),
        }
    }

    pub fn histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for g in &self.gates {
            *h.entry(g.op.kind().to_string()).or_insert(0) += 1;
        }
        h
    }

    pub fn summary(&self, model: &CostModel) -> CircuitSummary {
        CircuitSummary {
            registers: self.registers.clone(),
            gate_count: self.gates.len(),
            histogram: self.histogram(),
            cost: cost(self, model),
        }
    }
}

fn remap(g: &Gate, map: &[RegId]) -> Gate {
    let q = |q: Qubit| Qubit::new(map[q.reg], q.bit);
    let r = |r: RegId| map[r];
    let op = match g.op.clone() {
        Op::Flip(x) => Op::Flip(q(x)),
        Op::Hadamard(x) => Op::Hadamard(q(x)),
        Op::Rotate { target, angle, adjoint } => Op::Rotate {
            target: q(target),
            angle: match angle {
                Angle::Register(a) => Angle::Register(r(a)),
                Angle::Encode { reg, scale } => Angle::Encode { reg: r(reg), scale },
            },
            adjoint,
        },
        Op::XorConst { reg, value } => Op::XorConst { reg: r(reg), value },
        Op::Copy { src, dst } => Op::Copy { src: r(src), dst: r(dst) },
        Op::Swap { a, b } => Op::Swap { a: r(a), b: r(b) },
        Op::XorShift { reg, step, inverse } => Op::XorShift { reg: r(reg), step, inverse },
        Op::LoadBits { src, lo, len, dst, at } => Op::LoadBits { src: r(src), lo, len, dst: r(dst), at },
        Op::Add { src, dst, sub } => Op::Add { src: r(src), dst: r(dst), sub },
        Op::AddConst { dst, value, sub } => Op::AddConst { dst: r(dst), value, sub },
        Op::ModAdd { src, dst, sub } => Op::ModAdd { src: r(src), dst: r(dst), sub },
        Op::MulConst { k, src, dst, sub } => Op::MulConst { k, src: r(src), dst: r(dst), sub },
        Op::ModMulConst { k, src, dst, sub } => Op::ModMulConst { k, src: r(src), dst: r(dst), sub },
        Op::Mul { x, y, dst, sub } => Op::Mul { x: r(x), y: r(y), dst: r(dst), sub },
        Op::Div { num, den, dst } => Op::Div { num: r(num), den: r(den), dst: r(dst) },
        Op::Compare { reg, cmp, value, target } => Op::Compare { reg: r(reg), cmp, value, target: q(target) },
        Op::AffineAdd { src, lo, len, dst, offset, slope, sub } => Op::AffineAdd { src: r(src), lo, len, dst: r(dst), offset, slope, sub },
        Op::ShiftedDiff { src, start, shift, dst } => Op::ShiftedDiff { src: r(src), start: r(start), shift: r(shift), dst: r(dst) },
        Op::ModExpLoad { src, base, mult, dst } => Op::ModExpLoad { src: r(src), base, mult, dst: r(dst) },
        Op::GeomTail { src, v, k, dst, sub } => Op::GeomTail { src: r(src), v, k, dst: r(dst), sub },
        Op::Sqrt { src, dst } => Op::Sqrt { src: r(src), dst: r(dst) },
        Op::Arccos { src, dst } => Op::Arccos { src: r(src), dst: r(dst) },
        Op::Custom(mut c) => {
            c.regs = c.regs.into_iter().map(r).collect();
            Op::Custom(c)
        }
    };
    Gate {
        op,
        controls: g.controls.iter().map(|&c| q(c)).collect(),
    }
}

/// Register list, gate histogram and cost; serializable.
#[derive(Debug, Clone, Serialize)]
pub struct CircuitSummary {
    pub registers: Vec<Register>,
    pub gate_count: usize,
    pub histogram: BTreeMap<String, usize>,
    pub cost: CostReport,
}
