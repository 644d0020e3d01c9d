use qlv::circuit::DEFAULT_BUDGET;
use qlv::icdf::{default_domain, fit_icdf, FitOptions};
use qlv::lvmodel::{LvModel, PayoffSpec};
use qlv::prn_way::{PrnWay, PrnWayConfig};
use qlv::prng::{LcgParams, PrnSource};
use qlv::FxFormat;

fn main() -> qlv::Result<()> {
    let n_t = 4;
    let (lo, hi) = default_domain();
    let cfg = PrnWayConfig {
        model: LvModel::homogeneous(1.0, n_t, vec![2.0, 4.0], vec![0.0; 3], vec![0.75; 3], 3.0)?,
        payoffs: PayoffSpec::european_call(3.0, n_t),
        source: PrnSource::with_default_permutation(LcgParams::new(8, 5, 3)?, 17)?,
        icdf: fit_icdf(lo, hi, FitOptions::default())?,
        n_samp: 3,
        fmt: FxFormat::new(4, 4)?,
        payoff_scale: 8.0,
    };
    let way = PrnWay::new(cfg)?;
    println!("injectivity: {:?}", way.injectivity());

    let rep = way.simulate(DEFAULT_BUDGET)?;
    println!("P(out = 1) = {:.6}, price {:.6}, classical {:.6}", rep.probability, rep.price, rep.classical_price);
    println!("all paths match: {}, ancillas clean: {}", rep.all_match, rep.ancillas_clean);
    for p in &rep.paths {
        println!("  sample {} states {:?} payoff {}", p.sample, p.states, p.payoff);
    }
    println!("{} gates, {} T, {} qubits", rep.summary.gate_count, rep.summary.cost.t_count, rep.summary.cost.qubits);
    Ok(())
}
