//! Reusable sub-circuits shared by both constructions.

use super::{Angle, Circuit, Cmp, Op, Qubit, RegId};
use crate::error::Result;
use crate::fixedpoint::mask;
use crate::lvmodel::FixedLeg;

/// Loads `codes[i][r]` into `targets[r]` for the interval `i` that holds the
/// input, where interval `i` is `thresholds[i-1] <= u < thresholds[i]`.
///
/// Comparator `m` flips `g` when `u < thresholds[m]`, and the `m`-th load is
/// controlled on `g`, so only the loads above the input's interval fire and
/// they telescope to its code. `g` is left holding a parity; undo the whole
/// block with its inverse.
pub fn load_cascade(
    c: &mut Circuit,
    input: RegId,
    thresholds: &[i64],
    codes: &[Vec<u128>],
    targets: &[RegId],
    g: Qubit,
) -> Result<()> {
    let n = thresholds.len();
    assert_eq!(codes.len(), n + 1, "one code per interval");
    let masks = cascade_masks(codes, targets.len());
    for (r, &t) in targets.iter().enumerate() {
        if masks[n + 1][r] != 0 {
            c.apply(Op::XorConst { reg: t, value: masks[n + 1][r] })?;
        }
    }
    for m in 1..=n {
        c.apply(Op::Compare {
            reg: input,
            cmp: Cmp::Lt,
            value: thresholds[m - 1],
            target: g,
        })?;
        for (r, &t) in targets.iter().enumerate() {
            if masks[m][r] != 0 {
                c.apply_controlled(Op::XorConst { reg: t, value: masks[m][r] }, &[g])?;
            }
        }
    }
    Ok(())
}

/// Load masks indexed `1..=n` (controlled) and `n+1` (unconditional).
pub(crate) fn cascade_masks(codes: &[Vec<u128>], width: usize) -> Vec<Vec<u128>> {
    let n = codes.len() - 1;
    let xor = |a: &[u128], b: &[u128]| a.iter().zip(b).map(|(x, y)| x ^ y).collect::<Vec<_>>();
    let mut masks = vec![vec![0; width]; n + 2];
    masks[n + 1] = codes[n].clone();
    if n >= 1 {
        masks[n] = xor(&codes[n - 1], &codes[n]);
    }
    for m in 1..n {
        masks[m] = xor(&codes[m - 1], &codes[m + 1]);
    }
    masks
}

/// Drops intervals that no input in `[lo, hi]` can reach.
pub fn compact_cascade(thresholds: &[i64], codes: &[Vec<u128>], lo: i64, hi: i64) -> (Vec<i64>, Vec<Vec<u128>>) {
    let mut t = Vec::new();
    let mut c = vec![codes[0].clone()];
    for (m, &x) in thresholds.iter().enumerate() {
        if x <= lo {
            // Everything below x is unreachable: restart from interval m+1.
            t.clear();
            c = vec![codes[m + 1].clone()];
        } else if x > hi {
            break;
        } else if t.last() == Some(&x) {
            // Empty interval between equal thresholds.
            *c.last_mut().unwrap() = codes[m + 1].clone();
        } else if c.last() == Some(&codes[m + 1]) {
            continue;
        } else {
            t.push(x);
            c.push(codes[m + 1].clone());
        }
    }
    (t, c)
}

/// Flips `target` when `lo <= reg < hi` (open ends for `None`) and every
/// qubit of `extra` is set. `flags` are clean scratch qubits, restored.
pub fn flag_interval(
    c: &mut Circuit,
    reg: RegId,
    lo: Option<i64>,
    hi: Option<i64>,
    flags: [Qubit; 2],
    extra: &[Qubit],
    target: Qubit,
) -> Result<()> {
    let mut tests = Vec::new();
    if let Some(lo) = lo {
        tests.push(Op::Compare { reg, cmp: Cmp::Ge, value: lo, target: flags[0] });
    }
    if let Some(hi) = hi {
        tests.push(Op::Compare { reg, cmp: Cmp::Lt, value: hi, target: flags[1] });
    }
    let mut controls: Vec<Qubit> = extra.to_vec();
    if lo.is_some() {
        controls.push(flags[0]);
    }
    if hi.is_some() {
        controls.push(flags[1]);
    }
    for t in &tests {
        c.apply(t.clone())?;
    }
    c.apply_controlled(Op::Flip(target), &controls)?;
    for t in tests.iter().rev() {
        c.apply(t.clone())?;
    }
    Ok(())
}

/// Bits of `reg` that read all-ones exactly when `reg == value`, after
/// [`flip_pattern`].
pub fn all_bits(c: &Circuit, reg: RegId) -> Vec<Qubit> {
    (0..c.register(reg).width).map(|b| Qubit::new(reg, b)).collect()
}

/// Negates the bits of `reg` where `value` has a zero; self-inverse.
pub fn flip_pattern(c: &mut Circuit, reg: RegId, value: u128) -> Result<()> {
    let v = !value & mask(c.register(reg).width);
    if v != 0 {
        c.apply(Op::XorConst { reg, value: v })?;
    }
    Ok(())
}

/// Whether a leg contributes nothing for any price.
pub fn leg_is_zero(leg: &FixedLeg) -> bool {
    leg.a == 0 && leg.b == 0 && leg.floor.is_none_or(|f| f <= 0) && leg.cap.is_none_or(|c| c >= 0)
}

/// `payoff += clamp(trunc_mul(a, s) + b)`. `tmp` must be clean and in the
/// same format as `s` and `payoff`; it and the two flags are restored.
pub fn payoff_clamp(c: &mut Circuit, leg: &FixedLeg, s: RegId, tmp: RegId, flags: [Qubit; 2], payoff: RegId) -> Result<()> {
    if leg_is_zero(leg) {
        return Ok(());
    }
    let fmt = c.register(tmp).fmt.expect("numeric tmp");
    let mut linear = c.fork();
    if leg.a != 0 {
        linear.apply(Op::MulConst { k: leg.a, src: s, dst: tmp, sub: false })?;
    }
    if leg.b != 0 {
        linear.apply(Op::AddConst { dst: tmp, value: fmt.to_bits(leg.b), sub: false })?;
    }
    if let Some(f) = leg.floor {
        linear.apply(Op::Compare { reg: tmp, cmp: Cmp::Lt, value: f, target: flags[0] })?;
    }
    if let Some(cap) = leg.cap {
        linear.apply(Op::Compare { reg: tmp, cmp: Cmp::Gt, value: cap, target: flags[1] })?;
    }
    c.append(&linear)?;
    c.apply(Op::Add { src: tmp, dst: payoff, sub: false })?;
    // Floor and cap are never both active since floor <= cap.
    for (bound, flag) in [(leg.floor, flags[0]), (leg.cap, flags[1])] {
        if let Some(v) = bound {
            c.apply_controlled(Op::Add { src: tmp, dst: payoff, sub: true }, &[flag])?;
            c.apply_controlled(Op::AddConst { dst: payoff, value: fmt.to_bits(v), sub: false }, &[flag])?;
        }
    }
    c.append_inverse(&linear)
}

/// Rotates `anc` so that its `|1⟩` probability is `v / scale` for the value
/// `v` held in `reg`.
pub fn encode_amplitude(c: &mut Circuit, reg: RegId, scale: f64, anc: Qubit) -> Result<()> {
    c.apply(Op::Rotate {
        target: anc,
        angle: Angle::Encode { reg, scale },
        adjoint: false,
    })
}
