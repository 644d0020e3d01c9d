use qlv::circuit::{cost, measure_prob, simulate, Circuit, Cmp, CostModel, Op, QuantumState, Qubit, Role};
use qlv::FxFormat;

fn main() -> qlv::Result<()> {
    let fmt = FxFormat::new(4, 4)?;
    let mut c = Circuit::new();
    let x = c.add_numeric("x", fmt, Role::Ancilla, false)?;
    let y = c.add_numeric("y", fmt, Role::Ancilla, false)?;
    let z = c.add_numeric("z", fmt, Role::Ancilla, false)?;
    let q = c.add_register("q", 2, None, Role::Flag, false)?;

    c.apply(Op::Hadamard(Qubit::new(q, 0)))?;
    c.apply_controlled(Op::Mul { x, y, dst: z, sub: false }, &[Qubit::new(q, 0)])?;
    c.apply(Op::Compare { reg: z, cmp: Cmp::Ge, value: fmt.encode(1.0)?, target: Qubit::new(q, 1) })?;

    let start = QuantumState::basis(&c, &[(x, fmt.to_bits(fmt.encode(1.5)?)), (y, fmt.to_bits(fmt.encode(0.75)?))]);
    let end = simulate(&c, start.clone(), 1 << 10)?;
    for (key, amp) in end.iter() {
        println!("z = {:+.4}, flags {:02b}, |amp|^2 = {:.3}", fmt.decode(fmt.from_bits(key[z])), key[q], amp.norm_sqr());
    }
    println!("P(z >= 1) = {}", measure_prob(&end, |k| k[q] >> 1 & 1 == 1));

    let back = simulate(&c.inverse(), end, 1 << 10)?;
    println!("inverse restores the input: {}", back.iter().next().map(|(k, _)| k.to_vec()) == start.iter().next().map(|(k, _)| k.to_vec()));

    let report = cost(&c, &CostModel::default());
    println!("T-count {}, peak qubits {}", report.t_count, report.qubits);
    for (kind, k) in &report.by_kind {
        println!("  {kind}: {} gates, {} T", k.gates, k.t_count);
    }
    Ok(())
}
