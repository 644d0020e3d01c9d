#![allow(dead_code)]

use std::sync::OnceLock;

use qlv::icdf::{default_domain, fit_icdf, FitOptions, IcdfApprox};
use qlv::lvmodel::{LvModel, PayoffSpec};
use qlv::prn_way::PrnWayConfig;
use qlv::prng::{LcgParams, PrnSource};
use qlv::rn_way::{RnWayConfig, SnConfig};
use qlv::FxFormat;

pub fn icdf() -> IcdfApprox {
    static FIT: OnceLock<IcdfApprox> = OnceLock::new();
    FIT.get_or_init(|| {
        let (lo, hi) = default_domain();
        fit_icdf(lo, hi, FitOptions::default()).unwrap()
    })
    .clone()
}

/// Flat absolute vol 0.75 on two price intervals, Δt = 0.25, 8-bit generator.
pub fn prn_desk(n_samp: u32, n_t: usize) -> PrnWayConfig {
    let model = LvModel::homogeneous(n_t as f64 * 0.25, n_t, vec![2.0, 4.0], vec![0.0; 3], vec![0.75; 3], 3.0).unwrap();
    PrnWayConfig {
        model,
        payoffs: PayoffSpec::european_call(3.0, n_t),
        source: PrnSource::with_default_permutation(LcgParams::new(8, 5, 3).unwrap(), 17).unwrap(),
        icdf: icdf(),
        n_samp,
        fmt: FxFormat::new(4, 4).unwrap(),
        payoff_scale: 8.0,
    }
}

/// Piecewise-linear vol with two knots, continuous at the first only.
pub fn rn_desk(n_t: usize, n_dig: u32) -> RnWayConfig {
    let model = LvModel::homogeneous(
        n_t as f64 * 0.25,
        n_t,
        vec![0.8, 1.2],
        vec![0.1, 0.2, 0.1],
        vec![0.1, 0.02, 0.26],
        1.0,
    )
    .unwrap();
    RnWayConfig {
        model,
        payoffs: PayoffSpec::european_call(1.0, n_t),
        sn: SnConfig {
            n_dig,
            ..SnConfig::default()
        },
        fmt: FxFormat::new(4, 12).unwrap(),
        payoff_scale: 2.0,
    }
}
