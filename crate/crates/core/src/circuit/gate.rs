use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::prng::XorShift;

pub type RegId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Qubit {
    pub reg: RegId,
    pub bit: u32,
}

impl Qubit {
    pub fn new(reg: RegId, bit: u32) -> Self {
        Self { reg, bit }
    }
}

/// Signed comparison against a constant raw value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn eval(self, x: i64, k: i64) -> bool {
        match self {
            Cmp::Lt => x < k,
            Cmp::Le => x <= k,
            Cmp::Gt => x > k,
            Cmp::Ge => x >= k,
        }
    }
}

/// Where a rotation angle comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    /// θ is the fixed-point value held in the register.
    Register(RegId),
    /// θ = arcsin √(v / scale) for the fixed-point value `v` in the register.
    Encode { reg: RegId, scale: f64 },
}

pub type BasisFn = Arc<dyn Fn(&mut [u128]) + Send + Sync>;

/// User-supplied permutation of basis states; must come with its inverse.
#[derive(Clone)]
pub struct CustomOp {
    pub name: String,
    pub regs: Vec<RegId>,
    pub t_count: u64,
    pub forward: BasisFn,
    pub inverse: BasisFn,
}

impl fmt::Debug for CustomOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomOp")
            .field("name", &self.name)
            .field("regs", &self.regs)
            .field("t_count", &self.t_count)
            .finish_non_exhaustive()
    }
}

/// Macro-gate actions. Unless noted, registers are read as `n`-bit patterns
/// and numeric registers (those with a fixed-point format) as two's-complement
/// raw values. `sub` selects the inverse of an accumulating action.
#[derive(Debug, Clone)]
pub enum Op {
    /// X on one qubit; with controls this is a CNOT or multi-controlled Toffoli.
    Flip(Qubit),
    Hadamard(Qubit),
    /// `|0⟩ → cos θ|0⟩ + sin θ|1⟩`, `|1⟩ → −sin θ|0⟩ + cos θ|1⟩`.
    Rotate {
        target: Qubit,
        angle: Angle,
        adjoint: bool,
    },
    XorConst {
        reg: RegId,
        value: u128,
    },
    /// `dst ^= src`.
    Copy {
        src: RegId,
        dst: RegId,
    },
    Swap {
        a: RegId,
        b: RegId,
    },
    XorShift {
        reg: RegId,
        step: XorShift,
        inverse: bool,
    },
    /// `dst ^= ((src >> lo) & mask(len)) << at`.
    LoadBits {
        src: RegId,
        lo: u32,
        len: u32,
        dst: RegId,
        at: u32,
    },
    /// `dst ± src mod 2^n`.
    Add {
        src: RegId,
        dst: RegId,
        sub: bool,
    },
    AddConst {
        dst: RegId,
        value: u128,
        sub: bool,
    },
    /// Modular adder; with power-of-two moduli the action equals [`Op::Add`].
    ModAdd {
        src: RegId,
        dst: RegId,
        sub: bool,
    },
    /// `dst ± trunc_mul(k, src)` with a classical fixed-point constant.
    MulConst {
        k: i64,
        src: RegId,
        dst: RegId,
        sub: bool,
    },
    /// `dst ± k·src mod 2^width(dst)` on integers.
    ModMulConst {
        k: u128,
        src: RegId,
        dst: RegId,
        sub: bool,
    },
    /// `dst ± trunc_mul(x, y)`.
    Mul {
        x: RegId,
        y: RegId,
        dst: RegId,
        sub: bool,
    },
    /// `dst ^= trunc_div(num, den)`, total (zero for non-positive divisors).
    Div {
        num: RegId,
        den: RegId,
        dst: RegId,
    },
    /// `target ^= (reg cmp value)`.
    Compare {
        reg: RegId,
        cmp: Cmp,
        value: i64,
        target: Qubit,
    },
    /// `dst ± (offset + slope·i)` where `i` is the unsigned field
    /// `(src >> lo) & mask(len)`.
    AffineAdd {
        src: RegId,
        lo: u32,
        len: u32,
        dst: RegId,
        offset: i64,
        slope: i64,
        sub: bool,
    },
    /// `dst ^= (src − start) << shift` with `start` and `shift` in registers.
    ShiftedDiff {
        src: RegId,
        start: RegId,
        shift: RegId,
        dst: RegId,
    },
    /// `dst ^= mult · base^src mod 2^width(dst)`.
    ModExpLoad {
        src: RegId,
        base: u128,
        mult: u128,
        dst: RegId,
    },
    /// `dst ± k · ((src − 1 mod 2^width(src)) >> v) mod 2^width(dst)`.
    GeomTail {
        src: RegId,
        v: u32,
        k: u128,
        dst: RegId,
        sub: bool,
    },
    /// `dst ^= ⌊√src⌋` in the common fixed-point format (zero for negatives).
    Sqrt {
        src: RegId,
        dst: RegId,
    },
    /// `dst ^= ⌊arccos(clamp(src, −1, 1))⌋` in the common format.
    Arccos {
        src: RegId,
        dst: RegId,
    },
    Custom(CustomOp),
}

impl Op {
    pub fn kind(&self) -> &'static str {
        match self {
            Op::Flip(_) => "flip",
            Op::Hadamard(_) => "hadamard",
            Op::Rotate { .. } => "rotate",
            Op::XorConst { .. } => "xor_const",
            Op::Copy { .. } => "copy",
            Op::Swap { .. } => "swap",
            Op::XorShift { .. } => "xorshift",
            Op::LoadBits { .. } => "load_bits",
            Op::Add { .. } => "add",
            Op::AddConst { .. } => "add_const",
            Op::ModAdd { .. } => "mod_add",
            Op::MulConst { .. } => "mul_const",
            Op::ModMulConst { .. } => "mod_mul_const",
            Op::Mul { .. } => "mul",
            Op::Div { .. } => "div",
            Op::Compare { .. } => "compare",
            Op::AffineAdd { .. } => "affine_add",
            Op::ShiftedDiff { .. } => "shifted_diff",
            Op::ModExpLoad { .. } => "mod_exp_load",
            Op::GeomTail { .. } => "geom_tail",
            Op::Sqrt { .. } => "sqrt",
            Op::Arccos { .. } => "arccos",
            Op::Custom(_) => "custom",
        }
    }

    /// Whether the action permutes basis states (no amplitude mixing).
    pub fn is_permutation(&self) -> bool {
        !matches!(self, Op::Hadamard(_) | Op::Rotate { .. })
    }

    /// Registers written by the action.
    pub fn targets(&self) -> Vec<RegId> {
        match self {
            Op::Flip(q) | Op::Hadamard(q) => vec![q.reg],
            Op::Rotate { target, .. } => vec![target.reg],
            Op::Compare { target, .. } => vec![target.reg],
            Op::XorConst { reg, .. } | Op::XorShift { reg, .. } => vec![*reg],
            Op::AddConst { dst, .. } => vec![*dst],
            Op::Swap { a, b } => vec![*a, *b],
            Op::Copy { dst, .. }
            | Op::LoadBits { dst, .. }
            | Op::Add { dst, .. }
            | Op::ModAdd { dst, .. }
            | Op::MulConst { dst, .. }
            | Op::ModMulConst { dst, .. }
            | Op::Mul { dst, .. }
            | Op::Div { dst, .. }
            | Op::AffineAdd { dst, .. }
            | Op::ShiftedDiff { dst, .. }
            | Op::ModExpLoad { dst, .. }
            | Op::GeomTail { dst, .. }
            | Op::Sqrt { dst, .. }
            | Op::Arccos { dst, .. } => vec![*dst],
            Op::Custom(c) => c.regs.clone(),
        }
    }

    /// Registers read but not written.
    pub fn sources(&self) -> Vec<RegId> {
        match self {
            Op::Rotate { angle, .. } => match angle {
                Angle::Register(r) | Angle::Encode { reg: r, .. } => vec![*r],
            },
            Op::Compare { reg, .. } => vec![*reg],
            Op::Copy { src, .. }
            | Op::LoadBits { src, .. }
            | Op::Add { src, .. }
            | Op::ModAdd { src, .. }
            | Op::MulConst { src, .. }
            | Op::ModMulConst { src, .. }
            | Op::AffineAdd { src, .. }
            | Op::ModExpLoad { src, .. }
            | Op::GeomTail { src, .. }
            | Op::Sqrt { src, .. }
            | Op::Arccos { src, .. } => vec![*src],
            Op::Mul { x, y, .. } => vec![*x, *y],
            Op::Div { num, den, .. } => vec![*num, *den],
            Op::ShiftedDiff { src, start, shift, .. } => vec![*src, *start, *shift],
            _ => vec![],
        }
    }

    pub fn inverse(&self) -> Op {
        let mut op = self.clone();
        match &mut op {
            Op::Rotate { adjoint, .. } => *adjoint = !*adjoint,
            Op::XorShift { inverse, .. } => *inverse = !*inverse,
            Op::Add { sub, .. }
            | Op::AddConst { sub, .. }
            | Op::ModAdd { sub, .. }
            | Op::MulConst { sub, .. }
            | Op::ModMulConst { sub, .. }
            | Op::Mul { sub, .. }
            | Op::AffineAdd { sub, .. }
            | Op::GeomTail { sub, .. } => *sub = !*sub,
            Op::Custom(c) => std::mem::swap(&mut c.forward, &mut c.inverse),
            // XOR-style actions and swaps are involutions.
            _ => {}
        }
        op
    }
}

#[derive(Debug, Clone)]
pub struct Gate {
    pub op: Op,
    /// Positive controls: the action applies only where all are 1.
    pub controls: Vec<Qubit>,
}

impl Gate {
    pub fn new(op: Op) -> Self {
        Self {
            op,
            controls: Vec::new(),
        }
    }

    pub fn controlled(op: Op, controls: Vec<Qubit>) -> Self {
        Self { op, controls }
    }

    pub fn inverse(&self) -> Gate {
        Gate {
            op: self.op.inverse(),
            controls: self.controls.clone(),
        }
    }

    /// Every register the gate touches.
    pub fn registers(&self) -> Vec<RegId> {
        let mut r = self.op.targets();
        r.extend(self.op.sources());
        r.extend(self.controls.iter().map(|q| q.reg));
        r.sort_unstable();
        r.dedup();
        r
    }
}
