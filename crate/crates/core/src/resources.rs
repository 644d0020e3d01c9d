//! Closed-form qubit and T-count estimates for both constructions.
//!
//! All formulas keep only the leading terms and are evaluated in exact
//! integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prn_way::PrnWay;
use crate::rn_way::RnWay;

/// Arccos T-count per evaluation.
pub const ARCCOS_T: u64 = 34_000;
/// Qubits held by one arccos evaluation.
pub const ARCCOS_QUBITS: u64 = 105;
/// Relative gap tolerated between a built circuit's cost and the formula.
pub const ADVISORY_BAND: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceParams {
    pub n_samp: u64,
    pub n_dig: u64,
    pub n_prn: u64,
    pub n_icdf: u64,
    pub n_t: u64,
    pub n_s: u64,
}

impl ResourceParams {
    /// Sizes intended for practical use.
    pub const PRACTICAL: ResourceParams = ResourceParams {
        n_samp: 16,
        n_dig: 16,
        n_prn: 64,
        n_icdf: 109,
        n_t: 360,
        n_s: 5,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n_samp", self.n_samp),
            ("n_dig", self.n_dig),
            ("n_prn", self.n_prn),
            ("n_icdf", self.n_icdf),
            ("n_t", self.n_t),
            ("n_s", self.n_s),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }

    /// Sizes of a configured PRN-way circuit.
    pub fn for_prn(way: &PrnWay) -> Self {
        let cfg = way.config();
        Self {
            n_samp: cfg.n_samp as u64,
            n_dig: cfg.fmt.bits() as u64,
            n_prn: cfg.source.lcg.n_prn() as u64,
            n_icdf: cfg.icdf.n_intervals() as u64,
            n_t: cfg.model.n_t() as u64,
            n_s: max_grid(&cfg.model),
        }
    }

    /// Sizes of a configured RN-way circuit; the PRN-only fields are 1.
    pub fn for_rn(way: &RnWay) -> Self {
        let cfg = way.config();
        Self {
            n_samp: 1,
            n_dig: cfg.fmt.bits() as u64,
            n_prn: 1,
            n_icdf: 1,
            n_t: cfg.model.n_t() as u64,
            n_s: max_grid(&cfg.model),
        }
    }
}

fn max_grid(m: &crate::lvmodel::LvModel) -> u64 {
    (1..=m.n_t()).map(|j| m.grid(j).len() as u64).max().unwrap_or(0)
}

impl Default for ResourceParams {
    fn default() -> Self {
        Self::PRACTICAL
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub value: u64,
}

fn parts(items: &[(&str, u64)]) -> Vec<Component> {
    items
        .iter()
        .map(|&(name, value)| Component {
            name: name.to_string(),
            value,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Count {
    pub total: u64,
    pub breakdown: Vec<Component>,
}

impl Count {
    fn new(breakdown: Vec<Component>) -> Self {
        Self {
            total: breakdown.iter().map(|c| c.value).sum(),
            breakdown,
        }
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.breakdown.iter().find(|c| c.name == name).map(|c| c.value)
    }
}

pub fn prn_way_qubits(p: &ResourceParams) -> Count {
    let n = p.n_dig;
    let (prn_work, icdf_work) = (2 * p.n_prn, 7 * n);
    let work = if prn_work >= icdf_work {
        ("prn_work", prn_work)
    } else {
        ("icdf_work", icdf_work)
    };
    Count::new(parts(&[("samp", p.n_samp), ("s", n), ("payoff", n), ("prn", p.n_prn), work]))
}

pub fn prn_way_tcount(p: &ResourceParams) -> Count {
    let n = p.n_dig;
    Count::new(parts(&[
        ("v_sweep", 245 * n * n * p.n_s * p.n_t),
        ("p_prn", 140 * p.n_prn * p.n_prn * p.n_t),
        ("icdf_pair", (210 * n * n + 56 * n * p.n_icdf) * p.n_t),
    ]))
}

pub fn rn_way_qubits(p: &ResourceParams) -> Count {
    let n = p.n_dig;
    let k = p.n_t;
    Count::new(parts(&[
        ("s", n * k),
        ("w", n * k),
        ("payoff", n * k),
        ("lv", 2 * n * k),
        ("product", n * k),
        ("sn_f", n * n * k),
        ("sn_sqrt", 2 * n * n * k),
        ("sn_arccos", ARCCOS_QUBITS * n * k),
    ]))
}

pub fn rn_way_tcount(p: &ResourceParams) -> Count {
    let n = p.n_dig;
    Count::new(parts(&[
        ("sn_arccos", ARCCOS_T * n * p.n_t),
        ("sn_arith", 7 * n * n * n * p.n_t),
        ("u_j", (63 * n * n + 28 * p.n_s * n) * p.n_t),
    ]))
}

/// Rounds to two significant figures: `(mantissa, exponent)` with
/// `1.0 <= mantissa < 10.0`.
pub fn sig2(v: u64) -> (f64, u32) {
    if v == 0 {
        return (0.0, 0);
    }
    let mut e = v.ilog10();
    let mut m = (v as f64 / 10f64.powi(e as i32) * 10.0).round() / 10.0;
    if m >= 10.0 {
        m /= 10.0;
        e += 1;
    }
    (m, e)
}

pub fn sig2_string(v: u64) -> String {
    let (m, e) = sig2(v);
    format!("{m:.1}e{e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub qubits: Count,
    pub t_count: Count,
    pub qubits_rounded: String,
    pub t_count_rounded: String,
}

impl ResourceReport {
    fn new(qubits: Count, t_count: Count) -> Self {
        Self {
            qubits_rounded: sig2_string(qubits.total),
            t_count_rounded: sig2_string(t_count.total),
            qubits,
            t_count,
        }
    }
}

pub fn prn_way_report(p: &ResourceParams) -> ResourceReport {
    ResourceReport::new(prn_way_qubits(p), prn_way_tcount(p))
}

pub fn rn_way_report(p: &ResourceParams) -> ResourceReport {
    ResourceReport::new(rn_way_qubits(p), rn_way_tcount(p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub params: ResourceParams,
    pub prn: ResourceReport,
    pub rn: ResourceReport,
    /// PRN T-count over RN T-count.
    pub t_ratio: f64,
    /// RN qubits over PRN qubits.
    pub qubit_ratio: f64,
    pub prn_t_larger: bool,
    pub prn_qubits_independent_of_n_t: bool,
}

pub fn compare_ways(p: &ResourceParams) -> Comparison {
    let prn = prn_way_report(p);
    let rn = rn_way_report(p);
    let ratio = |a: u64, b: u64| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
    let independent = [1, 10, 1000].iter().all(|&n_t| prn_way_qubits(&ResourceParams { n_t, ..*p }).total == prn.qubits.total);
    Comparison {
        params: *p,
        t_ratio: ratio(prn.t_count.total, rn.t_count.total),
        qubit_ratio: ratio(rn.qubits.total, prn.qubits.total),
        prn_t_larger: prn.t_count.total > rn.t_count.total,
        prn_qubits_independent_of_n_t: independent,
        prn,
        rn,
    }
}

/// Formula against a built circuit's count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryCheck {
    pub formula: u64,
    pub built: u64,
    /// `(built − formula) / formula`.
    pub rel_gap: f64,
    pub within_band: bool,
}

pub fn advisory(formula: u64, built: u64) -> AdvisoryCheck {
    let rel_gap = if formula == 0 {
        if built == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (built as f64 - formula as f64) / formula as f64
    };
    AdvisoryCheck {
        formula,
        built,
        rel_gap,
        within_band: rel_gap.abs() <= ADVISORY_BAND,
    }
}

/// Human-readable two-column table of both estimates.
pub fn render_table(c: &Comparison) -> String {
    let rows = [
        ("qubit", c.prn.qubits.total, c.rn.qubits.total),
        ("T-count", c.prn.t_count.total, c.rn.t_count.total),
    ];
    let mut out = format!("{:<10}{:>24}{:>24}\n", "", "PRN-on-a-register", "register-per-RN");
    for (name, a, b) in rows {
        out += &format!(
            "{:<10}{:>24}{:>24}\n",
            name,
            format!("{a} ({})", sig2_string(a)),
            format!("{b} ({})", sig2_string(b))
        );
    }
    out += &format!("T ratio {:.2}, qubit ratio {:.0}\n", c.t_ratio, c.qubit_ratio);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: ResourceParams = ResourceParams::PRACTICAL;

    #[test]
    fn practical_values() {
        assert_eq!(prn_way_qubits(&P).total, 240);
        assert_eq!(prn_way_tcount(&P).total, 373_847_040);
        assert_eq!(rn_way_qubits(&P).total, 915_840);
        assert_eq!(rn_way_tcount(&P).total, 212_774_400);
        assert_eq!(prn_way_tcount(&P).get("v_sweep"), Some(313_600 * 360));
        let r = [
            (prn_way_qubits(&P).total, (2.4, 2)),
            (prn_way_tcount(&P).total, (3.7, 8)),
            (rn_way_qubits(&P).total, (9.2, 5)),
            (rn_way_tcount(&P).total, (2.1, 8)),
        ];
        for (v, want) in r {
            assert_eq!(sig2(v), want);
        }
    }

    #[test]
    fn one_step_and_edges() {
        let one = ResourceParams { n_t: 1, ..P };
        assert_eq!(rn_way_qubits(&one).total, 2544);
        let zero = ResourceParams { n_t: 0, ..P };
        assert_eq!(prn_way_tcount(&zero).total, 0);
        assert_eq!(rn_way_tcount(&zero).total, 0);
        let no_prn = ResourceParams { n_prn: 0, ..P };
        assert_eq!(prn_way_qubits(&no_prn).total, 16 + 2 * 16 + 7 * 16);
        assert!(zero.validate().is_err());
        assert!(P.validate().is_ok());
    }

    #[test]
    fn arccos_dominates() {
        let per_step = 7 * 256 + 63 * 16 + 28 * 5 + ARCCOS_T;
        assert!(ARCCOS_T as f64 / per_step as f64 > 0.92);
    }

    #[test]
    fn comparison() {
        let c = compare_ways(&P);
        assert!((c.t_ratio - 1.757).abs() < 1e-3);
        assert!((c.qubit_ratio - 3816.0).abs() < 1e-9);
        assert!(c.prn_t_larger && c.prn_qubits_independent_of_n_t);
        for n_t in [1, 360, 3600] {
            assert_eq!(prn_way_qubits(&ResourceParams { n_t, ..P }).total, 240);
        }
        let t = render_table(&c);
        assert!(t.contains("2.4e2") && t.contains("9.2e5"));
    }

    #[test]
    fn rounding_carries() {
        assert_eq!(sig2(995), (1.0, 3));
        assert_eq!(sig2(7), (7.0, 0));
        assert_eq!(sig2(0), (0.0, 0));
        let a = advisory(100, 108);
        assert!(a.within_band && (a.rel_gap - 0.08).abs() < 1e-12);
        assert!(!advisory(100, 120).within_band);
    }

    fn params() -> impl Strategy<Value = ResourceParams> {
        (1u64..64, 1u64..64, 1u64..128, 1u64..256, 1u64..1000, 1u64..32).prop_map(|(a, b, c, d, e, f)| ResourceParams {
            n_samp: a,
            n_dig: b,
            n_prn: c,
            n_icdf: d,
            n_t: e,
            n_s: f,
        })
    }

    proptest! {
        #[test]
        fn totals_are_sums_and_monotone(p in params(), which in 0usize..6) {
            let counts = [prn_way_qubits, prn_way_tcount, rn_way_qubits, rn_way_tcount];
            let mut q = p;
            let field = [&mut q.n_samp, &mut q.n_dig, &mut q.n_prn, &mut q.n_icdf, &mut q.n_t, &mut q.n_s];
            *field.into_iter().nth(which).unwrap() += 1;
            for f in counts {
                let c = f(&p);
                prop_assert_eq!(c.total, c.breakdown.iter().map(|x| x.value).sum::<u64>());
                prop_assert!(f(&q).total >= c.total);
            }
        }

        #[test]
        fn rn_is_linear_in_steps(p in params()) {
            let one = ResourceParams { n_t: 1, ..p };
            prop_assert_eq!(rn_way_qubits(&p).total, rn_way_qubits(&one).total * p.n_t);
            prop_assert_eq!(rn_way_tcount(&p).total, rn_way_tcount(&one).total * p.n_t);
        }
    }
}
