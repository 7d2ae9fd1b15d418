//! Closed-form ratios against the recurrence simulation and against plain
//! recurrence arithmetic.

use dualmem::analysis::{
    check_constraints, m_bound, sweep, trace_synthetic, zeta_best, zeta_worst, Scenario, ScenarioKind, ScenarioSpec,
    SweepGrid,
};
use dualmem::{Kappa, Rational};
use num_traits::One;
use proptest::prelude::*;

fn kappa(n: i64, d: i64) -> Kappa {
    Kappa::new(Rational::new(n, d)).unwrap()
}

fn worst(a: usize, t: u64, k: Kappa, horizon: u64) -> ScenarioSpec {
    ScenarioSpec {
        kind: ScenarioKind::Worst,
        action_count: a,
        t_stage: t,
        kappa: k,
        horizon,
    }
}

/// The counts follow from the recurrences alone:
/// `m_s[t] = 1` at staging steps and `m_s[t-1] + 1` otherwise,
/// `m_L[t] = m_L[t-1] + I[t] floor(kappa m_s[t-1])`, `m_Q[t] = t + 1`.
#[test]
fn worst_trace_matches_recurrence_arithmetic() {
    for (a, t_stage, k) in [
        (8, 10, kappa(1, 1)),
        (4, 4, kappa(1, 2)),
        (16, 20, kappa(1, 4)),
        (5, 7, kappa(2, 3)),
    ] {
        let series = trace_synthetic(&worst(a, t_stage, k, 300)).unwrap();
        let (mut m_s, mut m_l) = (1u64, 0u64);
        for (t, s) in series.iter().enumerate() {
            let t = t as u64;
            if t > 0 {
                if t.is_multiple_of(t_stage) {
                    let num = *k.value().numer() as u64;
                    let den = *k.value().denom() as u64;
                    m_l += num * m_s / den;
                    m_s = 1;
                } else {
                    m_s += 1;
                }
            }
            assert_eq!(
                (s.m_s, s.m_l, s.m_q),
                (m_s, m_l, t + 1),
                "t={t} a={a} T={t_stage} k={k}"
            );
            assert_eq!(s.msize_dual, 3 * m_l + a as u64 * m_s);
        }
    }
}

#[test]
fn worst_closed_form_equals_trace() {
    for a in [3usize, 4, 5, 8, 16] {
        for t_stage in [3u64, 4, 6, 8, 10] {
            for k in [kappa(1, 4), kappa(1, 2), kappa(1, 1), kappa(1, 3)] {
                if !k.is_integral_for(t_stage) {
                    continue;
                }
                let series = trace_synthetic(&worst(a, t_stage, k, 50 * t_stage)).unwrap();
                for n in 1..=50u64 {
                    let z = zeta_worst::<Rational>(n, a, t_stage, k);
                    assert_eq!(series[(n * t_stage) as usize].zeta(), Some(z.zeta1));
                    assert_eq!(series[(n * t_stage - 1) as usize].zeta(), Some(z.zeta2));
                }
            }
        }
    }
}

#[test]
fn best_closed_form_equals_trace_after_full_staging() {
    for a in [4usize, 5, 6, 8, 12] {
        for t_stage in [3u64, 4, 5, 10] {
            let bound = m_bound(a, t_stage).unwrap().ceil().to_integer() as u64;
            for m in [bound, bound + 1, 2 * bound + 3] {
                let spec = ScenarioSpec {
                    kind: ScenarioKind::Best { m_unique: m },
                    action_count: a,
                    t_stage,
                    kappa: Kappa::one(),
                    horizon: m + 25 * t_stage,
                };
                let series = trace_synthetic(&spec).unwrap();
                // First staging step with every unique state in LTM.
                let onset = m.div_ceil(t_stage) * t_stage;
                assert_eq!(series[onset as usize].m_l, m);
                let z = zeta_best::<Rational>(m, a, t_stage);
                for n in 1..=20 {
                    let t = onset + n * t_stage;
                    assert_eq!(series[t as usize].m_l, m);
                    assert_eq!(
                        series[t as usize].zeta(),
                        Some(z.zeta1),
                        "a={a} T={t_stage} M={m} t={t}"
                    );
                    assert_eq!(
                        series[t as usize - 1].zeta(),
                        Some(z.zeta2),
                        "a={a} T={t_stage} M={m} t={t}"
                    );
                }
            }
        }
    }
}

#[test]
fn first_sample_has_unit_ratio() {
    for spec in [
        worst(8, 10, Kappa::one(), 0),
        ScenarioSpec {
            kind: ScenarioKind::Best { m_unique: 1 },
            ..worst(4, 3, kappa(1, 2), 0)
        },
        ScenarioSpec {
            kind: ScenarioKind::Replay {
                states: vec!["x".into()],
            },
            ..worst(6, 5, kappa(1, 5), 0)
        },
    ] {
        let series = trace_synthetic(&spec).unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].zeta(), Some(Rational::one()));
    }
}

#[test]
fn zeta1_dominates_zeta2_above_threshold() {
    // Worst case: zeta1 >= zeta2 whenever |A| >= 3 kappa (T + 2) / (T - 2), T > 2.
    let mut checked = 0;
    for a in 1..=40usize {
        for t_stage in 3..=24u64 {
            for k in [kappa(1, 4), kappa(1, 2), kappa(3, 4), kappa(1, 1)] {
                let threshold =
                    Rational::from_integer(3) * k.value() * Rational::new(t_stage as i64 + 2, t_stage as i64 - 2);
                if Rational::from_integer(a as i64) < threshold {
                    continue;
                }
                for n in 1..=30 {
                    let z = zeta_worst::<Rational>(n, a, t_stage, k);
                    assert!(z.zeta1 >= z.zeta2, "a={a} T={t_stage} k={k} n={n}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn sweep_zeta1_grows_with_action_space() {
    let grid = SweepGrid {
        scenario: Scenario::Worst,
        action_counts: (3..=40).collect(),
        kappas: vec![kappa(1, 2)],
        t_stages: vec![10],
        points: vec![5],
    };
    let rows = sweep(&grid).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].zeta1 > w[0].zeta1);
    }
    let grid = SweepGrid {
        scenario: Scenario::Worst,
        action_counts: vec![3],
        kappas: vec![Kappa::one()],
        t_stages: vec![4, 8],
        points: (1..=10).collect(),
    };
    assert!(sweep(&grid).unwrap().iter().all(|r| r.zeta1 == Rational::one()));
}

proptest! {
    #[test]
    fn shaded_exactly_below_bound(a in 4usize..40, t_stage in 1u64..30, m in 1u64..400) {
        let z = zeta_best::<Rational>(m, a, t_stage);
        let below = Rational::from_integer(m as i64) < m_bound(a, t_stage).unwrap();
        prop_assert_eq!(z.zeta2 < Rational::one(), below);
        let report = check_constraints(a, Kappa::one(), t_stage, Some(m));
        prop_assert_eq!(
            report.get(dualmem::analysis::ConstraintKind::UniqueStates).unwrap().satisfied,
            !below
        );
    }

    #[test]
    fn worst_ratio_at_least_one_when_action_space_large(
        a in 1usize..30, t_stage in 1u64..30, n in 1u64..60, num in 1i64..8, den in 1i64..8,
    ) {
        prop_assume!(num <= den);
        let k = kappa(num, den);
        prop_assume!(Rational::from_integer(a as i64) >= Rational::from_integer(3) * k.value());
        let z = zeta_worst::<Rational>(n, a, t_stage, k);
        prop_assert!(z.zeta1 >= Rational::one());
        prop_assert!(z.zeta2 >= Rational::one());
    }
}
