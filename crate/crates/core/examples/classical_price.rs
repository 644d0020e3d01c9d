use qlv::icdf::{default_domain, fit_icdf, FitOptions};
use qlv::lvmodel::{bs_call_price, price_enumerated, price_sampled, sn_grid, Arithmetic, LvModel, PayoffSpec};
use qlv::prng::{LcgParams, PrnSource};

fn main() -> qlv::Result<()> {
    let (sigma, t, n_t) = (0.2, 1.0, 32);
    let model = LvModel::black_scholes(sigma, t, n_t, 1.0)?;
    let call = PayoffSpec::european_call(1.0, n_t);
    let (lo, hi) = default_domain();
    let icdf = fit_icdf(lo, hi, FitOptions::default())?;
    let src = PrnSource::with_default_permutation(LcgParams::default(), 12345)?;

    let est = price_sampled(&model, &call, &src, &icdf, 1 << 16, Arithmetic::Exact { n_dig: 24 })?;
    println!("Monte Carlo: {:.5} ± {:.5}", est.price, est.std_error);
    println!("Black-Scholes: {:.5}", bs_call_price(t, 1.0, 1.0, sigma));

    // Exhaustive expectation over a 256-point discrete normal, two steps.
    // Cells are labelled by their left ends, which biases draws down by δ/2.
    let short = LvModel::black_scholes(sigma, 0.5, 2, 1.0)?;
    let grid = sn_grid(-4.0, 4.0, 256)?;
    let e = price_enumerated(&short, &PayoffSpec::european_call(1.0, 2), &grid, None, 1 << 20)?;
    println!("enumerated, T = 0.5: {e:.5} (Black-Scholes {:.5})", bs_call_price(0.5, 1.0, 1.0, sigma));
    Ok(())
}
