use qlv::resources::{compare_ways, render_table, ResourceParams};

fn main() -> qlv::Result<()> {
    let cmp = compare_ways(&ResourceParams::PRACTICAL);
    print!("{}", render_table(&cmp));

    for n_t in [10, 100, 1000] {
        let p = ResourceParams { n_t, ..ResourceParams::PRACTICAL };
        let c = compare_ways(&p);
        println!("n_t = {n_t:>4}: qubits {} vs {}", c.prn.qubits.total, c.rn.qubits.total);
    }
    Ok(())
}
