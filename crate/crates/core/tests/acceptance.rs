//! Acceptance gate. Runs every criterion, prints one line each, and exits
//! non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use mqrc::correction::ParityTable;
use mqrc::files::{events_json, execute, ConfigFile, TargetFile, TranscriptFile};
use mqrc::oracle::{
    collapse_table, derive_table, reference_table1, reference_table2, sweep, ShapeReport,
    SweepConfig,
};
use mqrc::protocol::{
    bob_cnot_measure, bob_prepare, correction_lookup, run, OperationSpec, Scenario, Target,
};
use mqrc::statevector::{OneQubitGate, Outcome, OutcomeSource, Pauli};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

const EXACT: f64 = 1e-12;
const ALPHA: f64 = 0.6;
const BETA: f64 = 0.8;
const THETA_A: f64 = 0.3;
const THETA_C: f64 = 0.5;
const SWEEP_SEED: u64 = 20_130_101;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn max_diff(got: &[Complex64], want: &[Complex64]) -> f64 {
    assert_eq!(got.len(), want.len());
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

fn basis_vec(len: usize, entries: &[(usize, Complex64)]) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); len];
    for &(i, a) in entries {
        v[i] = a;
    }
    v
}

fn worked_scenario() -> Scenario {
    Scenario::from_ops(
        Target::real(ALPHA, BETA).unwrap(),
        vec![
            vec![OperationSpec::u1(THETA_A)],
            vec![OperationSpec::u0(THETA_C)],
        ],
    )
    .unwrap()
}

fn c1_bob_step() -> Check {
    let start = Instant::now();
    let scenario = Scenario::from_ops(
        Target::real(ALPHA, BETA).unwrap(),
        vec![vec![OperationSpec::u0(0.0)]; 2],
    )
    .map_err(|e| e.to_string())?;
    let (a, b) = (Complex64::new(ALPHA, 0.0), Complex64::new(BETA, 0.0));
    let mut worst = 0.0f64;
    for (outcome, want) in [
        (Outcome::Zero, basis_vec(8, &[(0b000, a), (0b111, b)])),
        (Outcome::One, basis_vec(8, &[(0b111, a), (0b000, b)])),
    ] {
        let prepared = bob_prepare(&scenario);
        let out = bob_cnot_measure(&prepared, &mut OutcomeSource::forced([outcome]))
            .map_err(|e| e.to_string())?;
        let d = max_diff(out.register.state().amplitudes(), &want);
        worst = worst.max(d);
        ensure(d <= EXACT, || format!("{outcome} branch off by {d:e}"))?;
        let p = out.measurement.probability;
        ensure((p - 0.5).abs() <= EXACT, || {
            format!("{outcome} branch probability {p}")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("max deviation {worst:e}, {elapsed:?}"))
}

fn c2_golden_states() -> Check {
    use mqrc::protocol::controller_step;
    let scenario = worked_scenario();
    let mut source = OutcomeSource::forced_from_str("0++").unwrap();
    let prepared = bob_prepare(&scenario);
    let bob = bob_cnot_measure(&prepared, &mut source).map_err(|e| e.to_string())?;
    let scripts = scenario.scripts();
    let alice = controller_step(1, &bob.register, bob.mr_b, 0, &scripts[0], &mut source)
        .map_err(|e| e.to_string())?;

    // register is now [q_c, q_b]; the |+⟩ branch is −αe^{−iθa}|00⟩ + βe^{iθa}|11⟩
    let want7 = basis_vec(
        4,
        &[
            (0b00, -ALPHA * Complex64::cis(-THETA_A)),
            (0b11, BETA * Complex64::cis(THETA_A)),
        ],
    );
    let d7 = max_diff(alice.register.state().amplitudes(), &want7);
    ensure(d7 <= EXACT, || format!("post-Alice state off by {d7:e}"))?;

    let charlie = controller_step(
        2,
        &alice.register,
        bob.mr_b,
        alice.outgoing_parity,
        &scripts[1],
        &mut source,
    )
    .map_err(|e| e.to_string())?;
    let big = THETA_A + THETA_C;
    let want8 = [-ALPHA * Complex64::cis(-big), BETA * Complex64::cis(big)];
    let d8 = max_diff(charlie.register.state().amplitudes(), &want8);
    ensure(d8 <= EXACT, || format!("pre-correction q_b off by {d8:e}"))?;

    // the full driver agrees, and σx lands exactly on U0(θc)U1(θa)|ψ⟩
    let full = run(&scenario.with_outcomes(OutcomeSource::forced_from_str("0++").unwrap()))
        .map_err(|e| e.to_string())?;
    let dr = max_diff(full.pre_correction.amplitudes(), &want8);
    ensure(dr <= EXACT, || {
        format!("driver pre-correction off by {dr:e}")
    })?;
    ensure(full.correction == Pauli::X, || {
        format!("correction {}", full.correction)
    })?;
    let direct = [BETA * Complex64::cis(big), -ALPHA * Complex64::cis(-big)];
    let df = max_diff(full.final_qb.amplitudes(), &direct);
    ensure(df <= EXACT, || format!("corrected q_b off by {df:e}"))?;
    Ok(format!(
        "post-Alice {d7:e}, pre-correction {d8:e}, corrected {df:e}"
    ))
}

fn c3_table1() -> Check {
    let rows = derive_table(0).map_err(|e| e.to_string())?;
    let reference = reference_table1();
    ensure(rows.len() == 16, || format!("{} rows", rows.len()))?;
    for (got, want) in rows.iter().zip(&reference) {
        ensure(got == want, || format!("derived {got} expected {want}"))?;
    }
    let status = Command::new(env!("CARGO_BIN_EXE_mqrc"))
        .arg("table")
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(status.code() == Some(0), || {
        format!("mqrc table exited {status}")
    })?;
    Ok("16/16 rows, mqrc table exit 0".into())
}

fn c4_table2() -> Check {
    let rows = derive_table(1).map_err(|e| e.to_string())?;
    let collapsed = collapse_table(&rows).map_err(|e| e.to_string())?;
    ensure(collapsed == reference_table2(), || format!("{collapsed:?}"))?;
    Ok(collapsed
        .iter()
        .map(|(k, p)| format!("({},{})->{}", k.type_parity, k.minus_parity, p))
        .collect::<Vec<_>>()
        .join(" "))
}

fn c5_end_to_end(reports: &[ShapeReport], elapsed: Duration) -> Check {
    let shapes = reports.len();
    ensure(shapes == 24, || format!("{shapes} shapes"))?;
    let configs: usize = reports.iter().map(|r| r.reports.len()).sum();
    let branches: usize = reports.iter().map(ShapeReport::branch_count).sum();
    let failed: usize = reports.iter().map(ShapeReport::failed_branches).sum();
    let complex = reports.iter().filter(|r| r.shape.complex_target).count();
    ensure(complex == 12, || format!("{complex} complex-target shapes"))?;
    for r in reports {
        let want = 1 << (r.shape.controllers + 1);
        ensure(r.reports.iter().all(|v| v.branches.len() == want), || {
            format!("{} has a report without {want} branches", r.shape)
        })?;
    }
    let min = reports
        .iter()
        .map(ShapeReport::min_overlap)
        .fold(f64::INFINITY, f64::min);
    ensure(failed == 0, || {
        format!("{failed} of {branches} branches failed")
    })?;
    ensure(min >= 1.0 - 1e-9, || format!("min overlap {min}"))?;
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{configs} configs, {branches} branches, min overlap {min:.15}, {elapsed:?}"
    ))
}

fn c6_gate_algebra() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let iy = Pauli::IY.gate();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let theta = rng.gen_range(-std::f64::consts::TAU..std::f64::consts::TAU);
        let phi = rng.gen_range(-std::f64::consts::TAU..std::f64::consts::TAU);
        let u0 = OneQubitGate::u0(theta).map_err(|e| e.to_string())?;
        let u1 = OneQubitGate::u1(theta).map_err(|e| e.to_string())?;
        let checks = [
            u0.unitarity_deviation(),
            u1.unitarity_deviation(),
            (u0 * OneQubitGate::u0(phi).unwrap())
                .max_deviation(&OneQubitGate::u0(theta + phi).unwrap()),
            u1.max_deviation(&(u0 * iy)),
        ];
        for d in checks {
            worst = worst.max(d);
        }
    }
    worst = worst
        .max(OneQubitGate::u1(0.0).unwrap().max_deviation(&iy))
        .max(
            OneQubitGate::u0(0.0)
                .unwrap()
                .max_deviation(&OneQubitGate::identity()),
        );
    ensure(worst <= EXACT, || format!("max deviation {worst:e}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("max deviation {worst:e}, {elapsed:?}"))
}

fn c7_mr_b_one(reports: &[ShapeReport]) -> Check {
    let mut checked = 0;
    for shape in reports {
        for report in &shape.reports {
            for b in report.branches.iter().filter(|b| b.mr_b == 1) {
                let lookup = correction_lookup(b.key);
                ensure(b.searched == Some(lookup), || {
                    format!(
                        "{} branch {}: lookup {} search {:?}",
                        report.summary, b.outcomes, lookup, b.searched
                    )
                })?;
                checked += 1;
            }
        }
    }
    ensure(checked > 0, || "no MR_B = 1 branches".into())?;
    Ok(format!("{checked} MR_B = 1 branches agree with search"))
}

fn c8_replay() -> Check {
    let config = ConfigFile {
        target: TargetFile {
            alpha: Complex64::new(0.48, 0.36),
            beta: Complex64::new(-0.64, 0.48),
        },
        controllers: vec![
            vec![OperationSpec::u1(1.2), OperationSpec::u0(-0.4)],
            vec![OperationSpec::u0(2.5)],
            vec![OperationSpec::u1(-3.1)],
        ],
        seed: Some(424_242),
        forced: None,
    };
    let sampled = execute(&config, &ParityTable).map_err(|e| e.to_string())?;
    let written = sampled.file.to_json();
    let reread = TranscriptFile::from_json(&written).map_err(|e| e.to_string())?;
    let replay_cfg = reread.replay_config().map_err(|e| e.to_string())?;
    let replayed = mqrc::files::execute_config(reread.config.clone(), &replay_cfg, &ParityTable)
        .map_err(|e| e.to_string())?;
    let a = events_json(&sampled.file.events);
    let b = events_json(&replayed.file.events);
    ensure(a == b, || "replayed events differ".into())?;
    ensure(reread.events_json() == a, || {
        "events change across a write/read cycle".into()
    })?;
    Ok(format!(
        "{} events, {} bytes identical, outcomes {}",
        sampled.file.events.len(),
        a.len(),
        reread.forced_string()
    ))
}

fn main() {
    let sweep_start = Instant::now();
    let sweep_config = SweepConfig {
        seed: SWEEP_SEED,
        ..SweepConfig::default()
    };
    let sweep_result = sweep(&sweep_config, &ParityTable);
    let sweep_elapsed = sweep_start.elapsed();

    let criteria: Vec<Criterion> = vec![
        (
            "C1 Bob CNOT + Z measurement branches",
            Box::new(c1_bob_step),
        ),
        (
            "C2 worked-example golden states",
            Box::new(c2_golden_states),
        ),
        ("C3 two-controller table (16 rows)", Box::new(c3_table1)),
        ("C4 parity table (4 rows)", Box::new(c4_table2)),
        (
            "C5 exhaustive end-to-end sweep",
            Box::new(|| match &sweep_result {
                Ok(r) => c5_end_to_end(r, sweep_elapsed),
                Err(e) => Err(e.to_string()),
            }),
        ),
        ("C6 gate algebra", Box::new(c6_gate_algebra)),
        (
            "C7 MR_B = 1 correction key",
            Box::new(|| match &sweep_result {
                Ok(r) => c7_mr_b_one(r),
                Err(e) => Err(e.to_string()),
            }),
        ),
        (
            "C8 sampled run replays byte-identically",
            Box::new(c8_replay),
        ),
    ];

    let mut failures = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
