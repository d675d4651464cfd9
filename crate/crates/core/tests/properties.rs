use grabit::algorithms::{build_cost_hamiltonian, classical_cost, portfolio_statistics, synthetic_prices};
use grabit::circuit::{insert_refresh, parse_circuit, print_circuit, Circuit, RefreshPolicy};
use grabit::gates::GateKind;
use grabit::state::exact_state;
use grabit::unitary::{apply_realified, compare_up_to_scale, unitary_matrix};
use grabit::{
    build_gate, encode_state, extract_state, rf1, rf2, rf3, sample_ensemble, Gauge, RealizationEnsemble,
    RefreshVariant, RngStream,
};
use num_rational::BigRational;
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn gate_kind() -> impl Strategy<Value = GateKind> {
    prop_oneof![
        Just(GateKind::H),
        Just(GateKind::X),
        Just(GateKind::Z),
        Just(GateKind::Cnot),
        Just(GateKind::Swap),
        (-2.0 * PI..2.0 * PI).prop_map(GateKind::Phase),
        (-2.0 * PI..2.0 * PI).prop_map(GateKind::CPhase),
        Just(GateKind::Phase(PI / 2.0)),
        Just(GateKind::CPhase(PI)),
    ]
}

fn arity_logical(k: &GateKind) -> usize {
    match k {
        GateKind::Cnot | GateKind::Swap | GateKind::CPhase(_) => 2,
        _ => 1,
    }
}

/// Random circuit on up to 3 logical qubits, mnemonics and qubits chosen by index.
fn circuit() -> impl Strategy<Value = Circuit> {
    (1usize..=3, proptest::collection::vec((gate_kind(), 0usize..3, 1usize..3), 0..12)).prop_map(|(n, gates)| {
        let mut c = Circuit::new(n);
        for (k, q, d) in gates {
            if arity_logical(&k) > n {
                continue;
            }
            let q = q % n;
            let qs: Vec<usize> = if arity_logical(&k) == 2 { vec![q, (q + d) % n] } else { vec![q] };
            if qs.len() == 2 && qs[0] == qs[1] {
                continue;
            }
            c.push(k, &qs).unwrap();
        }
        c
    })
}

fn nonzero_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10i32..=10, len)
        .prop_filter("nonzero", |v| v.iter().any(|&x| x != 0))
        .prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_gate_matches_realified_unitary(kind in gate_kind(), phi in nonzero_vec(8)) {
        // three grabits: two logical plus ReIm
        let targets: Vec<usize> = match arity_logical(&kind) {
            2 => vec![0, 1],
            _ => vec![1],
        };
        let grabits: Vec<usize> = if kind.needs_reim() { targets.iter().copied().chain([2]).collect() } else { targets };
        let g = build_gate(kind.clone(), &grabits).unwrap();
        let p = encode_state(&phi, Gauge::MaxContrast).unwrap();
        let out = exact_state(&g.apply_exact(&p).unwrap()).dense();
        let mut want = phi.clone();
        apply_realified(&kind, &grabits, &mut want, 3);
        let cmp = compare_up_to_scale(&out, &want).unwrap();
        prop_assert!(cmp.cosine > 1.0 - 1e-9, "{:?} cos {}", kind, cmp.cosine);
    }

    #[test]
    fn permutations_conserve_effective_ball_count(seed in 0u64..1000, phi in nonzero_vec(8)) {
        let p = encode_state(&phi, Gauge::MaxContrast).unwrap();
        let rng = RngStream::new(seed);
        let mut e = sample_ensemble(&p, 500, &rng).unwrap();
        // mix in some socket pairs first
        build_gate(GateKind::H, &[0]).unwrap().apply_sampled_in_place(&mut e, &rng, 1).unwrap();
        let before = e.effective_ball_count();
        for (i, (k, t)) in [(GateKind::X, vec![1]), (GateKind::Z, vec![2]), (GateKind::Cnot, vec![0, 2]), (GateKind::Swap, vec![1, 2])].into_iter().enumerate() {
            build_gate(k, &t).unwrap().apply_sampled_in_place(&mut e, &rng, i as u64 + 2).unwrap();
            prop_assert_eq!(e.effective_ball_count(), before);
        }
    }

    #[test]
    fn hadamard_loses_at_most_half(phi in nonzero_vec(8), target in 0usize..3) {
        let p = encode_state(&phi, Gauge::MaxContrast).unwrap();
        let out = exact_state(&build_gate(GateKind::H, &[target]).unwrap().apply_exact(&p).unwrap());
        prop_assert!(1.0 - out.one_norm() <= 0.5 + 1e-9);
    }

    #[test]
    fn refresh_invariants(counts in proptest::collection::vec(0u64..12, 16), capacity_extra in 0usize..20) {
        let hist: BTreeMap<u64, u64> = counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i as u64, c)).collect();
        prop_assume!(!hist.is_empty());
        let e = RealizationEnsemble::from_histogram(2, &hist).unwrap();
        let n = e.n_ball();
        let psi = extract_state(&e).unwrap();
        prop_assume!(!psi.is_zero());
        let (a, _) = rf1(&e).unwrap();
        prop_assert_eq!(a.n_ball(), n);
        // interference-free: each blv carries one parity only
        for c in a.parity_counts().values() {
            prop_assert!(c.even == 0 || c.odd == 0);
        }
        // amplitude ratios kept up to rounding
        let before = psi.dense();
        let after = extract_state(&a).unwrap().dense();
        let norm: f64 = before.iter().map(|x| x.abs()).sum();
        let dev: f64 = before.iter().zip(&after).map(|(b, a)| (b / norm - a).abs()).sum();
        prop_assert!(dev <= 4.0 / n as f64 + 1e-12, "dev {}", dev);
        let (b, _) = rf2(&e, n).unwrap();
        prop_assert!(b.n_ball() >= n && b.n_ball() <= 2 * n);
        let (c, _) = rf3(&e, n + capacity_extra).unwrap();
        prop_assert_eq!(c.n_ball(), n + capacity_extra);
        prop_assert!(rf3(&e, n.saturating_sub(1)).is_err() || n == 0);
    }

    #[test]
    fn parser_round_trip(c in circuit(), policy in 0usize..4) {
        let mut c = c;
        c.refresh_policy = [RefreshPolicy::None, RefreshPolicy::AfterInterference, RefreshPolicy::EndOnly, RefreshPolicy::EveryK(3)][policy];
        c.policy_variant = RefreshVariant::Rf3;
        let back = parse_circuit(&print_circuit(&c)).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn circuits_are_unitary(c in circuit()) {
        let u = unitary_matrix(&c).unwrap();
        let d = u.len();
        for i in 0..d {
            for j in 0..d {
                let dot: num_complex::Complex64 = (0..d).map(|k| u[k][i].conj() * u[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot.re - want).abs() < 1e-10 && dot.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn refresh_insertion_keeps_gates(c in circuit()) {
        let r = insert_refresh(&c, RefreshPolicy::AfterInterference, RefreshVariant::Rf1).unwrap();
        prop_assert_eq!(r.gate_count(), c.gate_count());
        prop_assert_eq!(r.refresh_policy, RefreshPolicy::None);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hamiltonian_matches_cost_exactly(seed in 0u64..10_000, q in 0usize..=4, budget in proptest::option::of(0usize..=4)) {
        let (a, p) = synthetic_prices(4, 40, seed);
        let d = portfolio_statistics(a, p).unwrap();
        let qw = q as f64 / 4.0;
        let h = build_cost_hamiltonian::<BigRational>(&d, qw, budget, None).unwrap();
        for x in 0..16 {
            prop_assert_eq!(h.energy(x) + h.offset.clone(), classical_cost(&d, qw, budget, h.penalty.clone(), x));
        }
    }
}
