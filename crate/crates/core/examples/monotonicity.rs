use qlv::lvmodel::{monotonicity_check, LvModel};

fn main() -> qlv::Result<()> {
    let ok = LvModel::homogeneous(1.0, 4, vec![2.0, 4.0], vec![0.0; 3], vec![0.75; 3], 3.0)?;
    let steep = LvModel::homogeneous(1.0, 4, vec![2.0, 4.0], vec![0.6; 3], vec![0.0; 3], 3.0)?;
    for (name, model) in [("flat vol", &ok), ("steep slope", &steep)] {
        let report = monotonicity_check(model, -4.0, 4.0);
        println!("{name}: passed {}", report.passed());
        for v in report.violations.iter().take(3) {
            println!("  {v:?}");
        }
    }

    // A monotone update can be undone step by step.
    let s1 = ok.euler_step(1, 3.0, 1.2);
    println!("S = 3 -> {s1:.4} -> {:.4}", ok.inverse_euler_step(1, s1, 1.2)?);
    Ok(())
}
