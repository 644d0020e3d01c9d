use qlv::circuit::DEFAULT_BUDGET;
use qlv::lvmodel::{LvModel, PayoffSpec};
use qlv::rn_way::{realized_probs, sn_state_probs, RnWay, RnWayConfig, SnConfig};
use qlv::FxFormat;

fn main() -> qlv::Result<()> {
    let sn = SnConfig { n_dig: 3, ..SnConfig::default() };
    let states = sn_state_probs(&sn, DEFAULT_BUDGET)?;
    let exact = sn.grid()?;
    println!("SN gate on {} points:", sn.n_sn());
    for (i, p) in states.iter().enumerate() {
        println!("  x = {:+.2}  p = {p:.5}  target {:.5}", exact.point(i), exact.probs[i]);
    }
    println!("realized table: {:?}", realized_probs(&sn)?.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>());

    let n_t = 2;
    let cfg = RnWayConfig {
        model: LvModel::homogeneous(0.5, n_t, vec![0.8, 1.2], vec![0.1, 0.2, 0.1], vec![0.1, 0.02, 0.26], 1.0)?,
        payoffs: PayoffSpec::european_call(1.0, n_t),
        sn,
        fmt: FxFormat::new(4, 12)?,
        payoff_scale: 2.0,
    };
    let rep = RnWay::new(cfg)?.simulate(DEFAULT_BUDGET)?;
    println!("price {:.6}, enumerated {:.6}, exact-weight {:.6}", rep.price, rep.enumerated, rep.enumerated_exact);
    println!("branches ok: {}, support {}", rep.branches_ok, rep.support);
    Ok(())
}
