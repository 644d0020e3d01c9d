use qlv::fixedpoint::{digits_determined, fx_add, trunc_div, trunc_mul};
use qlv::{FxFormat, FxNum};

fn main() -> qlv::Result<()> {
    let fmt = FxFormat::new(4, 8)?;
    let x = FxNum::from_f64(1.75, fmt)?;
    let y = FxNum::from_f64(0.3, fmt)?;
    println!("{fmt:?}: ulp {}, range [{}, {}]", fmt.ulp(), fmt.decode(fmt.min_raw()), fmt.decode(fmt.max_raw()));
    println!("x = {} (raw {}), y = {} (raw {})", x.to_f64(), x.raw(), y.to_f64(), y.raw());
    println!("x + y = {}", fx_add(x, y)?.to_f64());

    let p = trunc_mul(x, y)?;
    println!("x * y = {} (exact {})", p.to_f64(), x.to_f64() * y.to_f64());
    let q = trunc_div(p, y)?;
    println!("(x * y) / y = {} exact={} digits_determined={}", q.value.to_f64(), q.exact, digits_determined(x, y));
    Ok(())
}
