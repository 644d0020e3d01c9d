use std::time::Instant;

use qlv::icdf::{default_domain, eval_icdf, fit_icdf, icdf_fixed, FitOptions};
use qlv::{FxFormat, FxNum};

fn main() -> qlv::Result<()> {
    let (lo, hi) = default_domain();
    let start = Instant::now();
    let approx = fit_icdf(lo, hi, FitOptions::default())?;
    println!(
        "domain [{lo:.3e}, {hi}]: {} intervals, max error {:.2e}, {:.2?}",
        approx.n_intervals(),
        approx.max_err,
        start.elapsed()
    );
    for u in [1e-4, 0.025, 0.5, 0.975] {
        println!("  u = {u:<6}  x = {:+.6}", eval_icdf(&approx, u));
    }

    let fmt = FxFormat::new(4, 12)?;
    let u = FxNum::from_f64(0.9, fmt)?;
    println!("register evaluation at 0.9: {}", icdf_fixed(&approx, u)?.to_f64());
    Ok(())
}
