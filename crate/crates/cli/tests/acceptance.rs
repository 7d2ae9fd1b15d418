//! Acceptance suite. Prints one PASS/FAIL line per criterion; run with
//! `cargo test -p dualmem-cli --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use dualmem::analysis::{
    check_constraints, m_bound, sweep, trace_stream, trace_synthetic, zeta_best, zeta_worst, ConstraintKind, Scenario,
    ScenarioKind, ScenarioSpec, SweepGrid,
};
use dualmem::approach::ActionSpace;
use dualmem::{HyperParams, Kappa, Rational, RawState, SarsaAgentF64, SymmetryGroup, TabularAgent};
use dualmem_cli::{cmd_simulate, simulate, AgentKind, RunConfig, SimulateArgs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, u64);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn kappa(n: i64, d: i64) -> Kappa {
    Kappa::new(Rational::new(n, d)).unwrap()
}

fn int(x: u64) -> Rational {
    Rational::from_integer(x as i64)
}

fn worst_spec(a: usize, t_stage: u64, k: Kappa, horizon: u64) -> ScenarioSpec {
    ScenarioSpec {
        kind: ScenarioKind::Worst,
        action_count: a,
        t_stage,
        kappa: k,
        horizon,
    }
}

fn worst_case_exact() -> Outcome {
    let mut checked = 0;
    for a in [4usize, 8, 16] {
        for t_stage in [4u64, 8, 10, 20] {
            for k in [kappa(1, 4), kappa(1, 2), kappa(1, 1)] {
                if !k.is_integral_for(t_stage) {
                    continue;
                }
                let series = trace_synthetic(&worst_spec(a, t_stage, k, 50 * t_stage)).map_err(|e| e.to_string())?;
                for n in 1..=50u64 {
                    let z = zeta_worst::<Rational>(n, a, t_stage, k);
                    let after = series[(n * t_stage) as usize].zeta();
                    let before = series[(n * t_stage - 1) as usize].zeta();
                    ensure!(
                        after == Some(z.zeta1),
                        "|A|={a} T={t_stage} k={k} n={n}: zeta1 {after:?} vs {}",
                        z.zeta1
                    );
                    ensure!(
                        before == Some(z.zeta2),
                        "|A|={a} T={t_stage} k={k} n={n}: zeta2 {before:?} vs {}",
                        z.zeta2
                    );
                    checked += 2;
                }
            }
        }
    }
    Ok(format!("{checked} exact comparisons"))
}

/// The trace reaches `m_L = M` at the first staging step after every unique
/// state has been seen, with full staging; comparisons start there.
fn best_case_exact() -> Outcome {
    let mut checked = 0;
    for a in [4usize, 6, 8] {
        for t_stage in [3u64, 5, 10] {
            let bound = m_bound(a, t_stage).unwrap().ceil().to_integer() as u64;
            for m in [bound, bound + 1, 4 * bound] {
                let onset = m.div_ceil(t_stage) * t_stage;
                let spec = ScenarioSpec {
                    kind: ScenarioKind::Best { m_unique: m },
                    action_count: a,
                    t_stage,
                    kappa: Kappa::one(),
                    horizon: onset + 20 * t_stage,
                };
                let series = trace_synthetic(&spec).map_err(|e| e.to_string())?;
                let z = zeta_best::<Rational>(m, a, t_stage);
                for n in 1..=20u64 {
                    let t = (onset + n * t_stage) as usize;
                    ensure!(
                        series[t].m_l == m,
                        "|A|={a} T={t_stage} M={m} t={t}: m_L = {}",
                        series[t].m_l
                    );
                    ensure!(
                        series[t].zeta() == Some(z.zeta1),
                        "|A|={a} T={t_stage} M={m} t={t}: zeta1"
                    );
                    ensure!(
                        series[t - 1].zeta() == Some(z.zeta2),
                        "|A|={a} T={t_stage} M={m} t={}: zeta2",
                        t - 1
                    );
                    checked += 3;
                }
            }
        }
    }
    Ok(format!("{checked} exact comparisons"))
}

fn anchor_values() -> Outcome {
    let z = zeta_worst::<Rational>(1, 8, 10, Kappa::one());
    ensure!(z.zeta2 == Rational::from_integer(1), "zeta2 = {}", z.zeta2);
    ensure!(z.zeta1 == Rational::new(88, 38), "zeta1 = {}", z.zeta1);
    let series = trace_synthetic(&worst_spec(8, 10, Kappa::one(), 10)).map_err(|e| e.to_string())?;
    ensure!(
        series[10].zeta() == Some(Rational::new(88, 38)),
        "trace zeta1 = {:?}",
        series[10].zeta()
    );
    ensure!(
        series[9].zeta() == Some(Rational::from_integer(1)),
        "trace zeta2 = {:?}",
        series[9].zeta()
    );

    for t_stage in [3u64, 4, 5, 8, 10] {
        let series = trace_synthetic(&worst_spec(3, t_stage, Kappa::one(), 50 * t_stage)).map_err(|e| e.to_string())?;
        for n in 1..=50 {
            let z = zeta_worst::<Rational>(n, 3, t_stage, Kappa::one());
            ensure!(
                z.zeta1 == Rational::from_integer(1),
                "|A|=3 T={t_stage} n={n}: zeta1 = {}",
                z.zeta1
            );
            ensure!(
                series[(n * t_stage) as usize].zeta() == Some(z.zeta1),
                "|A|=3 T={t_stage} n={n}: trace"
            );
        }
    }
    Ok("zeta1 = 88/38, zeta2 = 1; |A| = 3 kappa gives zeta1 = 1".into())
}

/// Random parameters within the environment and hyperparameter conditions.
fn random_params(rng: &mut ChaCha8Rng) -> (usize, Kappa, u64) {
    loop {
        let a = rng.gen_range(4..=16usize);
        let t_stage = rng.gen_range(3..=20u64);
        let den = rng.gen_range(1..=8i64);
        let num = rng.gen_range(1..=den);
        let k = kappa(num, den);
        if check_constraints(a, k, t_stage, None).all_satisfied() {
            return (a, k, t_stage);
        }
    }
}

fn comparison_ratio_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_points, mut best_points) = (0usize, 0usize);
    for i in 0..1000 {
        let (a, k, t_stage) = random_params(&mut rng);
        if i % 2 == 0 {
            let len = rng.gen_range(1..=400usize);
            // Random labels, never repeated.
            let mut seen = BTreeSet::new();
            let mut stream = Vec::with_capacity(len);
            while stream.len() < len {
                let s: u64 = rng.gen();
                if seen.insert(s) {
                    stream.push(s);
                }
            }
            let series = trace_stream(stream, a, t_stage, k).map_err(|e| e.to_string())?;
            for s in &series {
                ensure!(s.m_q == s.t + 1, "stream {i}: worst-case stream repeated a state");
                ensure!(
                    s.msize_dual <= s.msize_q,
                    "stream {i} |A|={a} T={t_stage} k={k} t={}: {} > {}",
                    s.t,
                    s.msize_dual,
                    s.msize_q
                );
                worst_points += 1;
            }
        } else {
            let bound = m_bound(a, t_stage).unwrap().ceil().to_integer() as u64;
            let m = rng.gen_range(bound..=4 * bound);
            let tau = m - 1;
            let len = (tau + t_stage + 1 + rng.gen_range(1..=300)) as usize;
            // Every unique state in random order, then uniform draws among them.
            let mut stream: Vec<u64> = (0..m).collect();
            for j in (1..stream.len()).rev() {
                stream.swap(j, rng.gen_range(0..=j));
            }
            while stream.len() < len {
                stream.push(rng.gen_range(0..m));
            }
            let series = trace_stream(stream, a, t_stage, k).map_err(|e| e.to_string())?;
            for s in series.iter().filter(|s| s.t > tau + t_stage) {
                ensure!(
                    s.msize_dual <= s.msize_q,
                    "stream {i} |A|={a} T={t_stage} k={k} M={m} t={}: {} > {}",
                    s.t,
                    s.msize_dual,
                    s.msize_q
                );
                best_points += 1;
            }
        }
    }
    Ok(format!(
        "1000 streams, {worst_points} worst-case and {best_points} best-case points, 0 violations"
    ))
}

fn shaded_region_boundary() -> Outcome {
    let mut checked = 0;
    for a in 4..=20usize {
        for t_stage in 1..=25u64 {
            let bound = m_bound(a, t_stage).unwrap();
            let limit = 2 * bound.ceil().to_integer() as u64 + 5;
            let grid = SweepGrid {
                scenario: Scenario::Best,
                action_counts: vec![a],
                kappas: vec![Kappa::one()],
                t_stages: vec![t_stage],
                points: (1..=limit).collect(),
            };
            let rows = sweep(&grid).map_err(|e| e.to_string())?;
            let mut csv = Vec::new();
            dualmem::analysis::write_sweep_csv(&mut csv, &rows).map_err(|e| e.to_string())?;
            let flags: Vec<bool> = String::from_utf8(csv)
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| l.ends_with(",1"))
                .collect();
            for (row, flag) in rows.iter().zip(flags) {
                let below = int(row.n_or_m) < bound;
                let direct = zeta_best::<Rational>(row.n_or_m, a, t_stage).zeta2 < Rational::from_integer(1);
                ensure!(
                    direct == below,
                    "|A|={a} T={t_stage} M={}: zeta2 < 1 is {direct}",
                    row.n_or_m
                );
                ensure!(
                    flag == below,
                    "|A|={a} T={t_stage} M={}: CSV shaded flag {flag}",
                    row.n_or_m
                );
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} grid points, flag flips at T|A|/(|A|-3)"))
}

fn constraint_checker() -> Outcome {
    let ok = check_constraints(8, kappa(1, 2), 10, Some(20));
    ensure!(ok.all_satisfied(), "valid configuration rejected:\n{ok}");
    ensure!(ok.items.len() == 4, "expected four conditions, got {}", ok.items.len());

    let singular = check_constraints(3, kappa(1, 2), 10, Some(1000));
    let env = singular.get(ConstraintKind::ActionSpace).unwrap();
    ensure!(
        !env.satisfied && env.margin == Some(Rational::from_integer(0)),
        "|A|=3 environment condition"
    );
    let unique = singular.get(ConstraintKind::UniqueStates).unwrap();
    ensure!(
        !unique.satisfied && unique.margin.is_none(),
        "|A|=3 bound must be undefined"
    );

    use ConstraintKind::*;
    // kappa <= 1, so the staging-ratio condition can only fail for |A| < 3.
    let cases: [(usize, Kappa, u64, u64, &[ConstraintKind]); 5] = [
        (2, kappa(1, 2), 10, 1000, &[ActionSpace, UniqueStates]),
        (2, kappa(1, 1), 10, 1000, &[ActionSpace, StagingRatio, UniqueStates]),
        (8, kappa(1, 2), 2, 1000, &[StagingPeriod]),
        (8, kappa(1, 2), 10, 15, &[UniqueStates]),
        (5, kappa(1, 1), 1, 1, &[StagingPeriod, UniqueStates]),
    ];
    for (a, k, t, m, failing) in cases {
        let report = check_constraints(a, k, t, Some(m));
        for c in &report.items {
            let expect = !failing.contains(&c.kind);
            ensure!(
                c.satisfied == expect,
                "|A|={a} k={k} T={t} M={m}: {} reported {}",
                c.kind,
                c.satisfied
            );
        }
    }
    // Boundaries are inclusive exactly where the inequalities are.
    ensure!(
        check_constraints(6, kappa(1, 1), 3, Some(6)).all_satisfied(),
        "boundary values"
    );
    ensure!(
        !check_constraints(6, kappa(1, 1), 3, Some(5)).all_satisfied(),
        "M just below bound"
    );
    Ok("four conditions, |A| = 3 reported environment-invalid".into())
}

fn simulation_trend() -> Outcome {
    let cfg = RunConfig::default();
    let hp = cfg.hyper_params().map_err(|e| e.to_string())?;
    let bound = m_bound(hp.action_count, hp.t_stage).ok_or("bound undefined for default action space")?;
    let seed = cfg.grid.seed;
    let mut steps = 5000;
    let mut dual = simulate(&cfg, AgentKind::Dual, steps, seed).map_err(|e| e.to_string())?;
    let min_m = |r: &dualmem_cli::SimulationRun| *r.unique_canonical.iter().min().unwrap();
    if int(min_m(&dual) as u64) < bound {
        steps = 20_000;
        dual = simulate(&cfg, AgentKind::Dual, steps, seed).map_err(|e| e.to_string())?;
    }
    ensure!(
        int(min_m(&dual) as u64) >= bound,
        "unique canonical states {:?} below bound {bound} after {steps} steps",
        dual.unique_canonical
    );
    let sarsa = simulate(&cfg, AgentKind::Sarsa, steps, seed).map_err(|e| e.to_string())?;
    for (i, (d, s)) in dual
        .record
        .per_intersection
        .iter()
        .zip(&sarsa.record.per_intersection)
        .enumerate()
    {
        let (d, s) = (d.last().unwrap(), s.last().unwrap());
        ensure!(
            d.msize_dual < s.msize_q,
            "intersection {i}: dual {} vs replay {}",
            d.msize_dual,
            s.msize_q
        );
    }
    let (d, s) = (dual.record.mean.last().unwrap(), sarsa.record.mean.last().unwrap());
    ensure!(
        d.msize_dual < s.msize_q,
        "mean: dual {} vs replay {}",
        d.msize_dual,
        s.msize_q
    );
    Ok(format!(
        "{steps} steps, min unique canonical {} >= {bound}; mean final {:.1} vs {:.1}",
        min_m(&dual),
        dualmem::num::rational_to_f64(d.msize_dual),
        dualmem::num::rational_to_f64(s.msize_q)
    ))
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn equivalence_oracle() -> Outcome {
    let g = SymmetryGroup::dihedral(&ActionSpace::protected(), 3).map_err(|e| e.to_string())?;
    let states = g.shape().enumerate();
    ensure!(states.len() == 81 * 4, "state space has {} states", states.len());
    let index: BTreeMap<RawState, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut parent: Vec<usize> = (0..states.len()).collect();
    for (i, s) in states.iter().enumerate() {
        for e in g.elements() {
            let j = index[&e.apply(s)];
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            parent[ri] = rj;
        }
    }
    let roots: BTreeSet<usize> = (0..states.len()).map(|i| find(&mut parent, i)).collect();
    ensure!(
        g.class_count() == roots.len(),
        "class count {} vs orbit partition {}",
        g.class_count(),
        roots.len()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let s = RawState::new(std::array::from_fn(|_| rng.gen_range(0..3)), rng.gen_range(0..4));
        let c = g.canonicalize(&s);
        ensure!(g.canonicalize(&c.raw()) == c, "not idempotent on {s:?}");
        let e = g.element(rng.gen_range(0..g.len()));
        ensure!(
            g.canonicalize(&e.apply(&s)) == c,
            "not invariant under {} on {s:?}",
            e.label()
        );
        ensure!(
            find(&mut parent, index[&s]) == find(&mut parent, index[&c.raw()]),
            "representative outside orbit"
        );
    }
    Ok(format!(
        "{} classes over {} states; 10000 random states",
        roots.len(),
        states.len()
    ))
}

fn sarsa_sanity() -> Outcome {
    let hp = HyperParams {
        action_count: 1,
        kappa: Kappa::one(),
        t_stage: 10,
        alpha: 0.1,
        gamma: 0.9,
        epsilon: 0.0,
    };
    let s = [RawState::new([0; 4], 0), RawState::new([1, 0, 0, 0], 0)];
    let mut agent = SarsaAgentF64::new(hp, 1).map_err(|e| e.to_string())?;
    let mut state = 0;
    let mut a = agent.begin(&s[state]);
    for _ in 0..10_000 {
        let reward = if state == 0 { 1.0 } else { 0.0 };
        a = agent
            .advance(&s[state], a, reward, &s[1 - state])
            .map_err(|e| e.to_string())?;
        state = 1 - state;
    }
    // q0 = 1 + g q1, q1 = g q0
    let q0 = 1.0 / (1.0 - 0.81);
    let q1 = 0.9 * q0;
    let got = (
        agent.table().row(&s[0]).unwrap()[0],
        agent.table().row(&s[1]).unwrap()[0],
    );
    let err = (got.0 - q0).abs().max((got.1 - q1).abs());
    ensure!(err.is_finite() && err <= 1e-3, "q = {got:?}, fixed point ({q0}, {q1}), error {err}");
    Ok(format!("max error {err:.2e}"))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let args = SimulateArgs {
            config: None,
            agent: Some(AgentKind::Dual),
            steps: Some(1000),
            seed: Some(42),
            seeds: None,
            out_dir: dir.path().to_path_buf(),
            svg: false,
        };
        cmd_simulate(&args).map_err(|e| e.to_string())?;
    }
    let (a, b) = (files(dirs[0].path()), files(dirs[1].path()));
    ensure!(a.len() == 10, "expected 10 CSV files, found {}", a.len());
    ensure!(a == b, "outputs differ");
    Ok(format!("{} files byte-identical", a.len()))
}

#[test]
fn acceptance_criteria() {
    std::env::remove_var(dualmem_cli::SEED_ENV);
    let criteria: [Criterion; 10] = [
        ("1 worst-case closed form equals trace", worst_case_exact, 1),
        ("2 best-case closed form equals trace", best_case_exact, 1),
        ("3 anchor values", anchor_values, 1),
        (
            "4 dual memory never exceeds replay table",
            comparison_ratio_property,
            10,
        ),
        ("5 shaded region boundary", shaded_region_boundary, 5),
        ("6 constraint checker", constraint_checker, 1),
        ("7 simulation trend", simulation_trend, 30),
        ("8 equivalence oracle", equivalence_oracle, 5),
        ("9 SARSA fixed point", sarsa_sanity, 1),
        ("10 deterministic simulate", determinism, 10),
    ];
    println!();
    let mut failed = Vec::new();
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed > Duration::from_secs(limit) {
                Err(format!("{detail}; took {elapsed:.2?}, limit {limit} s"))
            } else {
                Ok(detail)
            }
        });
        match result {
            Ok(detail) => println!("PASS  {name:<42} {elapsed:>9.2?}  {detail}"),
            Err(detail) => {
                println!("FAIL  {name:<42} {elapsed:>9.2?}  {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
