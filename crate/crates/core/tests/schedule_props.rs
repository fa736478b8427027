use std::collections::BTreeMap;

use proptest::prelude::*;

use nvsim::model::{Coupling, QuditModel};
use nvsim::qmat::{expm_hermitian, ComplexMatrix, UnitaryMatrix};
use nvsim::schedule::dsl::{emit_schedule, parse_schedule};
use nvsim::schedule::{
    analytic_t2, build_amplify_schedule, build_general_schedule, build_one_channel_schedule,
    build_two_channel_schedule, effective_hamiltonian, level_weights, pair_coefficients, schedule_propagator,
    CycleItem, GateEvent, GeneralWaits, PulseSchedule, Segment,
};
use nvsim::units::{gauss_to_rate, GAMMA_E};

fn sz() -> Vec<f64> {
    vec![1.0, 0.0, -1.0]
}

/// Product of the cycle's explicit matrices at fixed `b`, pure dephasing.
fn explicit_cycle(schedule: &PulseSchedule, dephase: &[f64], b: f64) -> ComplexMatrix {
    let d = schedule.dim();
    let h = ComplexMatrix::from_diag(&dephase.iter().map(|w| b * w).collect::<Vec<_>>());
    let mut u = ComplexMatrix::identity(d);
    for item in schedule.cycle() {
        let step = match item {
            CycleItem::Gate(g) => UnitaryMatrix::swap(d, g.i, g.j).into_inner(),
            CycleItem::Segment(s) => expm_hermitian(&h, s.duration).unwrap().into_inner(),
        };
        u = step.try_mul(&u).unwrap();
    }
    u
}

/// Per-level phase weights read off the diagonal of the explicit cycle.
fn brute_force_weights(schedule: &PulseSchedule, dephase: &[f64]) -> Vec<f64> {
    let b = 1e-3 / schedule.cycle_duration();
    let u = explicit_cycle(schedule, dephase, b);
    assert!(u.is_diagonal());
    (0..schedule.dim())
        .map(|m| -u[(m, m)].arg() / (b * schedule.dt()))
        .collect()
}

fn random_balanced_schedule() -> impl Strategy<Value = (PulseSchedule, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|d| {
        let item = prop_oneof![
            (0.0f64..0.05).prop_map(|t| (None, t)),
            (0..d, 0..d).prop_filter("distinct", |(i, j)| i != j).prop_map(|g| (Some(g), 0.0)),
        ];
        (
            prop::collection::vec(item, 0..12),
            prop::collection::vec(-2.0f64..2.0, d),
            0.01f64..0.1,
        )
            .prop_map(move |(items, dephase, dt)| {
                let mut cycle = vec![CycleItem::Segment(Segment::on(dt))];
                let mut gates = Vec::new();
                for (g, t) in items {
                    match g {
                        Some((i, j)) => {
                            cycle.push(CycleItem::Gate(GateEvent::new(i, j)));
                            gates.push(GateEvent::new(i, j));
                        }
                        None => cycle.push(CycleItem::Segment(Segment::off(t))),
                    }
                }
                cycle.extend(gates.into_iter().rev().map(CycleItem::Gate));
                (PulseSchedule::new(d, dt, cycle, 3).unwrap(), dephase)
            })
    })
}

#[test]
fn two_level_swap_sandwich_reverses_phase() {
    let (b, t1, t2) = (1.7, 0.31, 0.12);
    let h = ComplexMatrix::from_diag(&[b, -b]);
    let u = UnitaryMatrix::swap(2, 0, 1).into_inner();
    let lhs = u
        .try_mul(&expm_hermitian(&h, t2).unwrap().into_inner())
        .unwrap()
        .try_mul(&u)
        .unwrap()
        .try_mul(&expm_hermitian(&h, t1).unwrap().into_inner())
        .unwrap();
    assert!(lhs.max_abs_diff(expm_hermitian(&h, t1 - t2).unwrap().matrix()) < 1e-12);
}

#[test]
fn three_level_sandwiches_match_accumulated_phase_operators() {
    let b = 2.3;
    let (t1, t2, t3) = (0.21, 0.13, 0.07);
    let h = ComplexMatrix::from_diag(&[b, 0.0, -b]);
    let e = |t: f64| expm_hermitian(&h, t).unwrap().into_inner();
    let u12 = UnitaryMatrix::swap(3, 0, 1).into_inner();
    let u23 = UnitaryMatrix::swap(3, 1, 2).into_inner();
    let chain = |ms: &[&ComplexMatrix]| ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.try_mul(m).unwrap());

    let one = chain(&[&u12, &e(t2), &u12, &e(t1)]);
    let l2 = ComplexMatrix::from_diag(&[b * t1, b * t2, -b * (t1 + t2)]);
    assert!(one.max_abs_diff(expm_hermitian(&l2, 1.0).unwrap().matrix()) < 1e-12);

    let two = chain(&[&u23, &u12, &e(t3), &u12, &e(t2), &u23, &e(t1)]);
    let l3 = ComplexMatrix::from_diag(&[b * (t1 + t2), -b * (t2 + t3), -b * (t1 - t3)]);
    assert!(two.max_abs_diff(expm_hermitian(&l3, 1.0).unwrap().matrix()) < 1e-12);
}

#[test]
fn general_dim4_cycle_permutation_is_identity() {
    let mut pairs = BTreeMap::new();
    pairs.insert((0, 1), 0.003);
    pairs.insert((0, 3), 0.002);
    pairs.insert((1, 2), 0.004);
    pairs.insert((2, 3), 0.001);
    let waits = GeneralWaits { t0: 0.005, pairs };
    let s = build_general_schedule(4, 1.5, &waits, 0.01, 5).unwrap();
    let mut p = ComplexMatrix::identity(4);
    for item in s.cycle() {
        if let CycleItem::Gate(g) = item {
            p = UnitaryMatrix::swap(4, g.i, g.j).into_inner().try_mul(&p).unwrap();
        }
    }
    assert!(p.max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);
}

#[test]
fn one_channel_mu_half_lambda_gives_unit_coefficient() {
    let s = build_one_channel_schedule(2.0, 1.0, 0.01, 10, 3).unwrap();
    let c = pair_coefficients(&s, &sz()).unwrap();
    assert!((c.get(0, 1) - 1.0).abs() < 1e-12);
}

#[test]
fn two_channel_example_coefficients() {
    let s = build_two_channel_schedule(1.0, 0.4, 0.8, 0.01, 10).unwrap();
    let c = pair_coefficients(&s, &sz()).unwrap();
    let w = brute_force_weights(&s, &sz());
    for (i, j, expect) in [(0, 1, 2.4), (0, 2, 2.4), (1, 2, 0.0)] {
        assert!((c.get(i, j) - expect).abs() < 1e-12);
        assert!((w[i] - w[j] - expect).abs() < 1e-9);
    }
}

#[test]
fn amplify_effective_hamiltonian_scales_the_noise() {
    let model = QuditModel::new(vec![0.4, 0.0, -0.2], vec![Coupling { i: 0, j: 1, value: 0.3 }], sz()).unwrap();
    let b = 0.9;
    let h = effective_hamiltonian(&build_amplify_schedule(2.0, 0.01, 5, 3).unwrap(), &model, b).unwrap();
    let expect = &model.system_hamiltonian() + &ComplexMatrix::from_diag(&[3.0 * b, 0.0, -3.0 * b]);
    assert!(h.max_abs_diff(&expect) < 1e-12);
}

#[test]
fn quoted_field_gives_quoted_t2() {
    let sigma = gauss_to_rate(0.2, GAMMA_E);
    assert!((sigma - 3.5217).abs() < 1e-4);
    let c = pair_coefficients(&build_amplify_schedule(0.0, 0.01, 1, 2).unwrap(), &[1.0, -1.0]).unwrap();
    assert!((analytic_t2(c.get(0, 1), sigma) - 0.2008).abs() < 1e-4);
}

#[test]
fn trotter_error_is_first_order() {
    let model = QuditModel::new(
        vec![0.5, 0.0, -0.3],
        vec![Coupling { i: 0, j: 1, value: 2.0 }, Coupling { i: 1, j: 2, value: 1.2 }],
        sz(),
    )
    .unwrap();
    let (b, t) = (1.1, 1.0);
    let error = |n: usize| {
        let s = build_one_channel_schedule(1.0, 0.3, t / n as f64, n, 3).unwrap();
        let h = effective_hamiltonian(&s, &model, b).unwrap();
        let exact = expm_hermitian(&h, t).unwrap();
        let u = schedule_propagator(&s, &model, b).unwrap();
        (u.matrix() - exact.matrix()).spectral_norm()
    };
    let mut prev = error(32);
    for n in [64, 128, 256] {
        let e = error(n);
        let ratio = prev / e;
        assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "n = {n}: ratio {ratio}");
        prev = e;
    }
}

#[test]
fn dsl_program_matches_builder() {
    let src = "# echo inside the window\ndim 3\ndt 0.02\nparam lambda 3\nparam tau 0.5\n\
        repeat 40 {\n  sys on dt\n  sys off (lambda - mu) * dt\n  gate 1 2\n  sys off mu * dt; gate 1 2\n}\n";
    let parsed = parse_schedule(src).unwrap();
    let built = build_one_channel_schedule(3.0, 0.75, 0.02, 40, 3).unwrap();
    assert!(parsed.approx_eq(&built, 1e-15));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn coefficients_match_brute_force_phases((s, dephase) in random_balanced_schedule()) {
        let w = level_weights(&s, &dephase).unwrap();
        let brute = brute_force_weights(&s, &dephase);
        let c = pair_coefficients(&s, &dephase).unwrap();
        for i in 0..s.dim() {
            prop_assert!((w[i] - brute[i]).abs() < 1e-9, "{w:?} vs {brute:?}");
            for j in i + 1..s.dim() {
                prop_assert!((c.get(i, j) - (w[i] - w[j])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_channel_coefficients_follow_the_formulas(lambda in 0.0f64..5.0, frac in 0.0f64..=1.0) {
        let mu = frac * lambda;
        let s = build_one_channel_schedule(lambda, mu, 0.01, 4, 3).unwrap();
        let c = pair_coefficients(&s, &sz()).unwrap();
        prop_assert!((c.get(0, 1) - (1.0 + lambda - 2.0 * mu)).abs() < 1e-12);
        prop_assert!((c.get(0, 2) - (2.0 + 2.0 * lambda - mu)).abs() < 1e-12);
        prop_assert!((c.get(1, 2) - (1.0 + lambda + mu)).abs() < 1e-12);
        let q = build_one_channel_schedule(lambda, mu, 0.01, 4, 2).unwrap();
        let cq = pair_coefficients(&q, &[1.0, -1.0]).unwrap();
        prop_assert!((cq.get(0, 1) - 2.0 * (1.0 + lambda - 2.0 * mu)).abs() < 1e-12);
    }

    #[test]
    fn two_channel_coefficients_follow_the_formulas(lambda in 0.0f64..5.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (mu1, mu2) = (a.min(b) * lambda, a.max(b) * lambda);
        let s = build_two_channel_schedule(lambda, mu1, mu2, 0.01, 4).unwrap();
        let c = pair_coefficients(&s, &sz()).unwrap();
        prop_assert!((c.get(0, 1) - (1.0 + lambda - (mu1 - mu2))).abs() < 1e-12);
        prop_assert!((c.get(0, 2) - (2.0 + 2.0 * lambda - (2.0 * mu1 + mu2))).abs() < 1e-12);
        prop_assert!((c.get(1, 2) - (1.0 + lambda - (mu1 + 2.0 * mu2))).abs() < 1e-12);
    }

    #[test]
    fn effective_hamiltonian_is_hermitian_and_linear_in_b(
        (s, dephase) in random_balanced_schedule(),
        b1 in -3.0f64..3.0,
        b2 in -3.0f64..3.0,
        eps in prop::collection::vec(-1.0f64..1.0, 5),
        j in 0.0f64..2.0,
    ) {
        let d = s.dim();
        let model = QuditModel::new(eps[..d].to_vec(), vec![Coupling { i: 0, j: 1, value: j }], dephase).unwrap();
        let h1 = effective_hamiltonian(&s, &model, b1).unwrap();
        let h2 = effective_hamiltonian(&s, &model, b2).unwrap();
        let h12 = effective_hamiltonian(&s, &model, b1 + b2).unwrap();
        let h0 = effective_hamiltonian(&s, &model, 0.0).unwrap();
        prop_assert!(h1.hermiticity_residual() < 1e-12);
        let sum = &(&h1 + &h2) - &h0;
        prop_assert!(sum.max_abs_diff(&h12) < 1e-10);
    }

    #[test]
    fn dsl_round_trips((s, _) in random_balanced_schedule()) {
        let text = emit_schedule(&s);
        let back = parse_schedule(&text).unwrap();
        prop_assert!(back.approx_eq(&s, 1e-11), "{}", text);
    }

    #[test]
    fn t2_depends_only_on_coefficients(lambda in 0.1f64..4.0, frac in 0.0f64..=1.0, dt in 0.001f64..0.1) {
        let sigma = 2.0;
        let a = build_one_channel_schedule(lambda, frac * lambda, dt, 3, 3).unwrap();
        let b = build_one_channel_schedule(lambda, frac * lambda, 2.0 * dt, 7, 3).unwrap();
        let (ca, cb) = (pair_coefficients(&a, &sz()).unwrap(), pair_coefficients(&b, &sz()).unwrap());
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (ta, tb) = (analytic_t2(ca.get(i, j), sigma), analytic_t2(cb.get(i, j), sigma));
            prop_assert!(ta == tb || (ta - tb).abs() < 1e-12 * ta);
        }
    }
}
