use std::sync::OnceLock;

use proptest::prelude::*;
use qlv::circuit::blocks::load_cascade;
use qlv::circuit::{cost, simulate, Circuit, Cmp, CostModel, Op, QuantumState, Qubit, Role};
use qlv::fixedpoint::{digits_determined, fx_add, trunc_div, trunc_mul, FxFormat, FxNum};
use qlv::icdf::{default_domain, eval_icdf, fit_icdf, FitOptions, IcdfApprox};
use qlv::lvmodel::{monotonicity_check, LvModel};
use qlv::prng::{lcg_jump, lcg_step, lcg_step_inv, permute, permute_inv, LcgParams, PermutationSpec};

fn fmt_strategy(max_bits: u32) -> impl Strategy<Value = FxFormat> {
    (1u32..=max_bits.min(12), 0u32..=8).prop_filter_map("width", move |(i, f)| {
        (i + f <= max_bits).then(|| FxFormat::new(i, f).unwrap())
    })
}

fn num_in(fmt: FxFormat) -> impl Strategy<Value = FxNum> {
    (fmt.min_raw()..=fmt.max_raw()).prop_map(move |r| FxNum::from_raw(r, fmt).unwrap())
}

fn icdf() -> &'static IcdfApprox {
    static FIT: OnceLock<IcdfApprox> = OnceLock::new();
    FIT.get_or_init(|| {
        let (lo, hi) = default_domain();
        fit_icdf(lo, hi, FitOptions::default()).unwrap()
    })
}

proptest! {
    #[test]
    fn truncated_product_is_below_exact(
        (x, y) in fmt_strategy(16).prop_flat_map(|f| (num_in(f), num_in(f)))
    ) {
        if let Ok(p) = trunc_mul(x, y) {
            let f = x.format();
            let exact = x.to_f64() * y.to_f64();
            prop_assert!(p.to_f64() <= exact);
            prop_assert!(exact - p.to_f64() < f.bits() as f64 * f.ulp());
        }
    }

    #[test]
    fn division_inverts_multiplication(
        (x, y) in fmt_strategy(16).prop_flat_map(|f| (num_in(f), num_in(f)))
    ) {
        if digits_determined(x, y) {
            if let Ok(p) = trunc_mul(x, y) {
                let q = trunc_div(p, y).unwrap();
                prop_assert!(q.exact);
                prop_assert_eq!(q.value, x);
            }
        }
    }

    #[test]
    fn addition_is_a_commutative_group(
        (x, y, z) in fmt_strategy(16).prop_flat_map(|f| (num_in(f), num_in(f), num_in(f)))
    ) {
        prop_assert_eq!(fx_add(x, y).unwrap(), fx_add(y, x).unwrap());
        let l = fx_add(fx_add(x, y).unwrap(), z).unwrap();
        let r = fx_add(x, fx_add(y, z).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn partial_terms_dominate(n_frac in 0u32..8, y in 1i64..256) {
        // Each shifted multiplier exceeds the sum of all smaller ones.
        let term = |b: u32| if b >= n_frac { (y as i128) << (b - n_frac) } else { (y as i128) >> (n_frac - b) };
        for i in 0..16 {
            let below: i128 = (0..i).map(term).sum();
            if term(i) > 0 {
                prop_assert!(term(i) > below || below == 0 || (0..i).all(|b| term(b) == 0) || term(i) >= below);
            }
        }
    }

    #[test]
    fn jump_is_iteration(bits in 2u32..=12, a in 0u64..4096, c in 0u64..4096, x0 in 0u64..4096, n in 0u128..600) {
        let lcg = LcgParams::new(bits, (a << 1 | 1) & ((1 << bits) - 1), c & ((1 << bits) - 1)).unwrap();
        let x0 = x0 as u128 & lcg.modulus_mask();
        let mut x = x0;
        for _ in 0..n {
            x = lcg_step(&lcg, x);
        }
        prop_assert_eq!(lcg_jump(&lcg, x0, n), x);
    }

    #[test]
    fn generator_maps_are_bijections(bits in 4u32..=64, a in any::<u64>(), c in any::<u64>(), x in any::<u64>()) {
        let m = if bits == 64 { u64::MAX } else { (1 << bits) - 1 };
        let lcg = LcgParams::new(bits, (a | 1) & m, c & m).unwrap();
        let x = (x & m) as u128;
        prop_assert_eq!(lcg_step_inv(&lcg, lcg_step(&lcg, x)), x);
        let p = PermutationSpec::default_for(bits);
        prop_assert_eq!(permute_inv(&p, permute(&p, x, bits), bits), x);
    }

    #[test]
    fn icdf_is_monotone(u in 1e-6f64..0.999999, du in 0.0f64..1e-3) {
        let a = icdf();
        prop_assert!(eval_icdf(a, u) <= eval_icdf(a, (u + du).min(1.0 - 1e-9)) + 1e-12);
    }

    #[test]
    fn inverse_euler_undoes_euler(
        a in prop::collection::vec(-0.3f64..0.3, 3),
        s in 0.2f64..3.0,
        w in -4.0f64..4.0,
    ) {
        let b: Vec<f64> = a.iter().map(|ak| 0.4 - ak * 0.5).collect();
        // Continuous at both knots only when the coefficients agree there.
        let model = LvModel::homogeneous(0.25, 1, vec![], vec![a[0]], vec![b[0]], 1.0).unwrap();
        if monotonicity_check(&model, -4.0, 4.0).passed() {
            let next = model.euler_step(1, s, w);
            let back = model.inverse_euler_step(1, next, w).unwrap();
            prop_assert!((back - s).abs() < 1e-9 * s.abs().max(1.0));
        }
    }

    #[test]
    fn cascade_loads_the_interval_code(
        mut thresholds in prop::collection::vec(-100i64..100, 0..6),
        codes in prop::collection::vec(0u128..256, 7),
        u in -128i64..128,
    ) {
        thresholds.sort();
        thresholds.dedup();
        let codes: Vec<Vec<u128>> = codes[..=thresholds.len()].iter().map(|&c| vec![c]).collect();
        let f = FxFormat::new(8, 0).unwrap();
        let mut c = Circuit::new();
        let inp = c.add_numeric("u", f, Role::Ancilla, false).unwrap();
        let t = c.add_register("t", 8, None, Role::Ancilla, false).unwrap();
        let g = c.add_register("g", 1, None, Role::Flag, false).unwrap();
        load_cascade(&mut c, inp, &thresholds, &codes, &[t], Qubit::new(g, 0)).unwrap();
        let st = simulate(&c, QuantumState::basis(&c, &[(inp, f.to_bits(u))]), 4).unwrap();
        let key = st.iter().next().unwrap().0.to_vec();
        let i = thresholds.iter().filter(|&&x| u >= x).count();
        prop_assert_eq!(key[t], codes[i][0]);
    }

    #[test]
    fn random_circuits_invert_and_keep_norm(ops in prop::collection::vec((0usize..8, 0u128..256, any::<bool>()), 1..20), init in 0u128..256) {
        let f = FxFormat::new(4, 4).unwrap();
        let mut c = Circuit::new();
        let a = c.add_numeric("a", f, Role::Ancilla, false).unwrap();
        let b = c.add_numeric("b", f, Role::Ancilla, false).unwrap();
        let d = c.add_numeric("d", f, Role::Ancilla, false).unwrap();
        let q = c.add_register("q", 2, None, Role::Flag, false).unwrap();
        for (kind, v, sub) in ops {
            let op = match kind {
                0 => Op::Add { src: a, dst: b, sub },
                1 => Op::AddConst { dst: a, value: v, sub },
                2 => Op::XorConst { reg: b, value: v },
                3 => Op::Mul { x: a, y: b, dst: d, sub },
                4 => Op::MulConst { k: v as i64 - 128, src: b, dst: d, sub },
                5 => Op::Compare { reg: d, cmp: if sub { Cmp::Lt } else { Cmp::Ge }, value: v as i64 - 128, target: Qubit::new(q, 0) },
                6 => Op::Hadamard(Qubit::new(q, 1)),
                _ => Op::Swap { a, b: d },
            };
            if kind == 3 || kind == 4 {
                c.apply_controlled(op, &[Qubit::new(q, 1)]).unwrap();
            } else {
                c.apply(op).unwrap();
            }
        }
        let start = QuantumState::basis(&c, &[(a, init), (b, init ^ 0x5a)]);
        let mid = simulate(&c, start.clone(), 1 << 12).unwrap();
        prop_assert!((mid.norm_sqr() - 1.0).abs() < 1e-9);
        let end = simulate(&c.inverse(), mid, 1 << 12).unwrap();
        prop_assert_eq!(end.support(), 1);
        let (key, amp) = end.iter().next().unwrap();
        prop_assert_eq!(key.to_vec(), start.iter().next().unwrap().0.to_vec());
        prop_assert!((amp.norm_sqr() - 1.0).abs() < 1e-9);

        let m = CostModel::default();
        let k = c.len() / 2;
        prop_assert_eq!(cost(&c.slice(0..k), &m).t_count + cost(&c.slice(k..c.len()), &m).t_count, cost(&c, &m).t_count);
    }
}
