//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS] criterion N` line (visible with `--nocapture`).
//!
//! Run with `cargo test -p cavnet --test acceptance`.

use cavnet::dynamics::{
    effective_hamiltonian_matrix, effective_unitary, EffectiveGateParams, FullModelParams,
    THETA_BELL, THETA_TRANSFER,
};
use cavnet::linalg::{identity, CMat};
use cavnet::protocols::{
    prepare_bell, transfer_n_qubit, transfer_single, transfer_two_qubit, ye_guo_teleport,
    Correction, Payload,
};
use cavnet::qstate::{StateVector, SubsystemLabel};
use cavnet::validation::{
    decay_sweep, detuning_sweep, SweepParameter, SweepProtocol, SweepSpec,
};
use ndarray::Array1;
use num_complex::Complex64;
use std::process::Command;
use std::time::Instant;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pass(n: u32, what: &str, started: Instant) {
    println!(
        "[PASS] criterion {n}: {what} ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_1_bell_preparation_amplitudes() {
    let started = Instant::now();
    let state = prepare_bell(THETA_BELL);
    let inv = 1.0 / 2.0_f64.sqrt();
    let overall = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let expected = [
        c(0.0, 0.0),
        overall * c(0.0, -inv),
        overall * inv,
        c(0.0, 0.0),
    ];
    for (k, (got, want)) in state.amplitudes().iter().zip(expected.iter()).enumerate() {
        assert!(
            (got - want).norm() <= 1e-12,
            "amplitude {k}: got {got}, want {want}"
        );
    }
    pass(1, "bell preparation amplitudes within 1e-12", started);
}

#[test]
fn criterion_2_single_qubit_transfer() {
    let started = Instant::now();
    let gate = effective_unitary(&EffectiveGateParams::new(THETA_TRANSFER).unwrap());
    for payload in Payload::random_set(1, 100, 20_01) {
        let result = transfer_single(&payload).unwrap();
        assert!(
            result.payload_fidelity >= 1.0 - 1e-11,
            "fidelity {}",
            result.payload_fidelity
        );
        assert!(result.carriers_ok());
        let phase = result.global_phase.expect("product final state");
        assert!((phase - c(1.0, 0.0)).norm() < 1e-10, "phase {phase}");

        // intermediate after the first hop: −|1⟩₁(α|0⟩₂+β|1⟩₂)|1⟩₃,
        // with the leading minus checked entrywise
        let initial = payload
            .to_state_named(&["1"])
            .unwrap()
            .tensor(&StateVector::basis(vec![SubsystemLabel::qubit("2")], &[1]).unwrap())
            .unwrap()
            .tensor(&StateVector::basis(vec![SubsystemLabel::qubit("3")], &[1]).unwrap())
            .unwrap();
        let mid = initial.apply_local_unitary(&["1", "2"], &gate).unwrap();
        let alpha = payload.coefficients()[0];
        let beta = payload.coefficients()[1];
        let mut expected: Array1<Complex64> = Array1::zeros(8);
        expected[5] = -alpha; // |101⟩
        expected[7] = -beta; // |111⟩
        for (k, (got, want)) in mid.amplitudes().iter().zip(expected.iter()).enumerate() {
            assert!(
                (got - want).norm() <= 1e-12,
                "intermediate amplitude {k}: got {got}, want {want}"
            );
        }
    }
    pass(
        2,
        "single-qubit transfer exact for 100 random payloads, intermediate sign matched",
        started,
    );
}

#[test]
fn criterion_3_teleportation_statistics() {
    let started = Instant::now();
    for payload in Payload::random_set(1, 100, 30_01) {
        let alpha = payload.coefficients()[0];
        let beta = payload.coefficients()[1];
        let result = ye_guo_teleport(&payload).unwrap();
        assert!(
            (result.success_probability - 0.5).abs() <= 1e-12,
            "success probability {}",
            result.success_probability
        );

        let identity_branch = result.branch((1, 0)).unwrap();
        assert_eq!(identity_branch.correction, Correction::Identity);
        assert!((identity_branch.corrected_fidelity.unwrap() - 1.0).abs() <= 1e-12);

        let flip_branch = result.branch((0, 1)).unwrap();
        assert_eq!(flip_branch.correction, Correction::PhaseFlip);
        assert!((flip_branch.corrected_fidelity.unwrap() - 1.0).abs() <= 1e-12);

        let fail_00 = result.branch((0, 0)).unwrap();
        assert_eq!(fail_00.correction, Correction::Failure);
        assert!(
            (fail_00.record.probability - alpha.norm_sqr() / 2.0).abs() <= 1e-12,
            "p(0,0) = {} vs |α|²/2 = {}",
            fail_00.record.probability,
            alpha.norm_sqr() / 2.0
        );
        let fail_11 = result.branch((1, 1)).unwrap();
        assert_eq!(fail_11.correction, Correction::Failure);
        assert!((fail_11.record.probability - beta.norm_sqr() / 2.0).abs() <= 1e-12);
    }
    pass(
        3,
        "teleportation: success 1/2, branch fidelities and failure probabilities exact",
        started,
    );
}

#[test]
fn criterion_4_two_qubit_transfer() {
    let started = Instant::now();
    let gate = effective_unitary(&EffectiveGateParams::new(THETA_TRANSFER).unwrap());
    let inv = 1.0 / 2.0_f64.sqrt();
    let mut payloads = Payload::random_set(2, 50, 40_01);
    payloads.push(
        Payload::new(vec![c(inv, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(inv, 0.0)]).unwrap(),
    );
    payloads.push(
        Payload::new(vec![c(0.0, 0.0), c(inv, 0.0), c(-inv, 0.0), c(0.0, 0.0)]).unwrap(),
    );
    for payload in &payloads {
        let result = transfer_two_qubit(payload).unwrap();
        assert!(result.payload_fidelity >= 1.0 - 1e-11);
        let phase = result.global_phase.expect("product final state");
        assert!((phase - c(1.0, 0.0)).norm() < 1e-10, "phase {phase}");
        assert!(result.carriers_ok());

        // intermediate after the (a1,b1) gate, register order (a1,a2,b1,b2):
        // amplitude of |1, m2, m1, 1⟩ is −c_{m1 m2}
        let names = ["a1", "a2", "b1", "b2"];
        let mut state = payload.to_state_named(&names[..2]).unwrap();
        for carrier in &names[2..] {
            state = state
                .tensor(&StateVector::basis(vec![SubsystemLabel::qubit(*carrier)], &[1]).unwrap())
                .unwrap();
        }
        let mid = state.apply_local_unitary(&["a1", "b1"], &gate).unwrap();
        let mut expected: Array1<Complex64> = Array1::zeros(16);
        for m1 in 0..2 {
            for m2 in 0..2 {
                let coeff = payload.coefficients()[m1 * 2 + m2];
                expected[8 + m2 * 4 + m1 * 2 + 1] = -coeff;
            }
        }
        for (k, (got, want)) in mid.amplitudes().iter().zip(expected.iter()).enumerate() {
            assert!(
                (got - want).norm() <= 1e-12,
                "intermediate amplitude {k}: got {got}, want {want}"
            );
        }
    }
    pass(
        4,
        "two-qubit transfer exact for random and entangled payloads, intermediate sign matched",
        started,
    );
}

#[test]
fn criterion_5_n_qubit_induction() {
    let started = Instant::now();
    for n in 3..=6usize {
        let au: u64 = n as u64;
        for payload in Payload::random_set(n, 5, 50_00 + au) {
            let result = transfer_n_qubit(&payload).unwrap();
            assert!(
                result.payload_fidelity >= 1.0 - 1e-11,
                "fidelity at n={n}: {}",
                result.payload_fidelity
            );
            let phase = result.global_phase.expect("product final state");
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!(
                (phase - c(sign, 0.0)).norm() < 1e-10,
                "phase at n={n}: {phase}"
            );
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "n-qubit suite took {elapsed:.2}s (budget 5s)");
    pass(
        5,
        "n-qubit transfer for n=3..6 with alternating global sign",
        started,
    );
}

/// Test-local matrix exponential: Taylor series with scaling and squaring,
/// independent of the eigendecomposition used elsewhere.
fn expm_oracle(m: &CMat, scale: Complex64) -> CMat {
    let a = m.mapv(|z| z * scale);
    let bound: f64 = a.iter().map(|z| z.norm()).sum();
    let squarings = bound.log2().ceil().max(0.0) as i32;
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));
    let mut term = identity(m.nrows());
    let mut sum = identity(m.nrows());
    for k in 1..=24 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    sum
}

#[test]
fn criterion_6_gate_matches_exponential_oracle() {
    let started = Instant::now();
    let h = effective_hamiltonian_matrix();
    let mut theta: f64 = 0.6180339887;
    for trial in 0..100 {
        theta = (theta * 9.869604401089358).rem_euclid(std::f64::consts::TAU);
        let analytic = effective_unitary(&EffectiveGateParams::new(theta).unwrap());
        let oracle = expm_oracle(&h, c(0.0, -theta));
        let max_diff = analytic
            .iter()
            .zip(oracle.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(
            max_diff <= 1e-12,
            "trial {trial}, theta {theta}: max entry diff {max_diff:.3e}"
        );
    }
    pass(
        6,
        "analytic gate equals the matrix-exponential oracle for 100 angles",
        started,
    );
}

#[test]
fn criterion_7_dispersive_validation() {
    let started = Instant::now();
    let base = FullModelParams::for_gate_angle(1.0, 20.0, 0.0, 5, THETA_TRANSFER).unwrap();
    let spec = SweepSpec {
        parameter: SweepParameter::DetuningRatio,
        values: vec![10.0, 20.0, 30.0, 40.0],
        base,
        protocol: SweepProtocol::SingleGate,
        payloads: 10,
        seed: 42,
    };
    // the sweep itself enforces the N vs N+2 Fock-convergence guard
    let rows = detuning_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 4);
    for pair in rows.windows(2) {
        assert!(
            pair[1].mean_infidelity < pair[0].mean_infidelity,
            "infidelity must decrease with detuning: {} then {}",
            pair[0].mean_infidelity,
            pair[1].mean_infidelity
        );
    }
    for row in &rows {
        assert!(row.mean_infidelity > 0.0);
        assert!(row.mean_infidelity <= row.max_infidelity);
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "detuning sweep took {elapsed:.2}s (budget 30s)");
    pass(
        7,
        "single-gate infidelity strictly decreases over detuning ratios 10..40",
        started,
    );
}

#[test]
fn criterion_8_decay_validation() {
    let started = Instant::now();
    let base = FullModelParams::for_gate_angle(1.0, 20.0, 0.0, 5, THETA_TRANSFER).unwrap();
    let spec = SweepSpec {
        parameter: SweepParameter::KappaOverG,
        values: vec![0.0, 0.05, 0.1, 0.2],
        base,
        protocol: SweepProtocol::SingleGate,
        payloads: 10,
        seed: 42,
    };
    let rows = decay_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 4);
    for pair in rows.windows(2) {
        assert!(
            pair[1].mean_infidelity >= pair[0].mean_infidelity,
            "infidelity must not decrease with decay: {} then {}",
            pair[0].mean_infidelity,
            pair[1].mean_infidelity
        );
    }

    // zero-decay row against the closed-system sweep at the same point
    let closed_spec = SweepSpec {
        parameter: SweepParameter::DetuningRatio,
        values: vec![20.0],
        base,
        protocol: SweepProtocol::SingleGate,
        payloads: 10,
        seed: 42,
    };
    let closed = detuning_sweep(&closed_spec).unwrap();
    let zero_gap = (rows[0].mean_infidelity - closed[0].mean_infidelity).abs();
    assert!(
        zero_gap <= 1e-7,
        "κ=0 row differs from the closed system by {zero_gap:.3e}"
    );

    // the payload survives a decaying cavity far better than it would if the
    // cavity were really excited: infidelity ≪ 0.5·κt
    let kappa_t = 0.1 * base.t();
    let row_01 = rows.iter().find(|r| (r.parameter_value - 0.1).abs() < 1e-12).unwrap();
    assert!(
        row_01.mean_infidelity < 0.5 * kappa_t,
        "infidelity {} vs excitation-loss bound {}",
        row_01.mean_infidelity,
        0.5 * kappa_t
    );

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "decay sweep took {elapsed:.2}s (budget 120s)");
    pass(
        8,
        "decay sweep monotone, κ=0 row matches closed system, loss bound respected",
        started,
    );
}

#[test]
fn criterion_9_cli_determinism() {
    let started = Instant::now();
    let dir = std::env::temp_dir().join(format!("cavnet-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let run = |prefix: &str| {
        let output = Command::new(env!("CARGO_BIN_EXE_cavnet"))
            .args([
                "validate",
                "--sweep",
                "detuning",
                "--values",
                "10,20",
                "--payloads",
                "4",
                "--seed",
                "7",
                "--format",
                "both",
                "--output",
            ])
            .arg(dir.join(prefix))
            .output()
            .expect("run cavnet");
        assert!(
            output.status.success(),
            "cavnet failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };
    run("a");
    run("b");

    // CSV: identical once the wall-time column is dropped
    let strip_csv = |name: &str| {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        text.lines()
            .map(|line| line.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip_csv("a.data.csv"), strip_csv("b.data.csv"));

    // JSON mirror: identical once wall_time_s is dropped
    let strip_json = |name: &str| {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        if let Some(rows) = value.get_mut("rows").and_then(|r| r.as_array_mut()) {
            for row in rows {
                row.as_object_mut().unwrap().remove("wall_time_s");
            }
        }
        value.to_string()
    };
    assert_eq!(strip_json("a.data.json"), strip_json("b.data.json"));

    // the summary carries no timing at all and must match byte for byte
    let summary_a = std::fs::read(dir.join("a.summary.json")).unwrap();
    let summary_b = std::fs::read(dir.join("b.summary.json")).unwrap();
    assert_eq!(summary_a, summary_b);

    let _ = std::fs::remove_dir_all(&dir);
    pass(
        9,
        "repeated CLI runs with one seed produce byte-identical data files",
        started,
    );
}
