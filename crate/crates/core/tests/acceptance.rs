//! End-to-end acceptance checks at desk scale. Prints one PASS/FAIL line per
//! check and exits non-zero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Instant, SystemTime};

use blindcal::channels::{half_probability_length, IdentityChannel};
use blindcal::harness::{default_run_config, run, ScenarioName};
use blindcal::protocol::{
    decode_message, decode_prefix, encode_message, OptimizerKind, ParamVector, ProtocolMessage,
    TerminateReason,
};
use blindcal::qcore::{from_bloch, measure_pauli, trace_distance, BellIndex, Pauli, PauliString};
use blindcal::scenarios::{
    entswap_error_rate, scenario_bb84, scenario_bb84_shots_sweep, scenario_entswap,
    scenario_multipartite, scenario_random_states, scenario_theorem1, swap_once, Bb84Evaluation,
    MultipartiteKind, ScenarioConfig, ScenarioResult,
};
use blindcal::tomography::{reconstruct, sample_basis, ExpectationTable, MeasurementRecord};
use common::{random_state, rng};
use rand::Rng;

struct Check {
    passed: bool,
    detail: String,
}

impl Check {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn column(
    result: &ScenarioResult,
    keep: impl Fn(&blindcal::scenarios::ResultRow) -> bool,
) -> (Vec<f64>, Vec<f64>) {
    result
        .rows
        .iter()
        .filter(|r| keep(r))
        .map(|r| (r.value_uncalibrated, r.value_calibrated))
        .unzip()
}

fn bb84_rotation_only() -> Check {
    let config = ScenarioConfig {
        lengths: vec![25.0, 50.0, 100.0],
        trials: 20,
        ..ScenarioConfig::default()
    };
    let result = scenario_bb84(&config, Bb84Evaluation::default()).unwrap();
    let mut passed = true;
    let mut detail = Vec::new();
    for l in [25.0, 50.0, 100.0] {
        let (uncal, cal) = column(&result, |r| r.length_km == l);
        let (u, c) = (mean(&uncal), mean(&cal));
        passed &= c <= 0.05;
        if l == 100.0 {
            passed &= (0.3..=0.7).contains(&u);
        }
        detail.push(format!("L={l}: uncal {u:.4} cal {c:.4}"));
    }
    Check::new(passed, detail.join("; "))
}

fn flip_bifurcation() -> Check {
    let mut config = ScenarioConfig {
        lengths: vec![40.0, 50.0, 90.0, 120.0],
        trials: 20,
        ..ScenarioConfig::default()
    };
    config.noise.flips = true;
    let result = scenario_bb84(&config, Bb84Evaluation::default()).unwrap();
    // 1 - 10^(-mu L / 10) = 1/2
    let l_star = 10.0 * std::f64::consts::LN_2 / (0.05 * std::f64::consts::LN_10);
    let mut passed =
        (half_probability_length(0.05) - l_star).abs() < 1e-9 && l_star > 50.0 && l_star < 90.0;
    let mut detail = vec![format!("L*={l_star:.4}")];
    for l in [40.0, 50.0, 90.0, 120.0] {
        let (uncal, cal) = column(&result, |r| r.length_km == l);
        let (u, c) = (mean(&uncal), mean(&cal));
        passed &= if l < l_star {
            (c - u).abs() <= 0.03
        } else {
            c <= u - 0.05
        };
        detail.push(format!("L={l}: uncal {u:.4} cal {c:.4}"));
    }
    Check::new(passed, detail.join("; "))
}

/// Ratio of the traced infidelity at `iteration` (or the last one recorded)
/// to the initial infidelity, per trial.
fn infidelity_ratios(result: &ScenarioResult, trials: usize, iteration: usize) -> Vec<f64> {
    (0..trials)
        .map(|t| {
            let trace: Vec<f64> = result
                .rows
                .iter()
                .filter(|r| r.trial == t && r.metric.starts_with("infidelity_iter_"))
                .map(|r| r.value_calibrated)
                .collect();
            trace[iteration.min(trace.len() - 1)] / trace[0]
        })
        .collect()
}

fn random_states_convergence() -> Check {
    let trials = 10;
    let exact = ScenarioConfig {
        trials,
        exact_mode: true,
        ..ScenarioConfig::default()
    };
    let exact_ratios = infidelity_ratios(&scenario_random_states(&exact).unwrap(), trials, 100);
    let sampled = ScenarioConfig {
        trials,
        batch_size: 15_000,
        ..ScenarioConfig::default()
    };
    let sampled_ratios = infidelity_ratios(&scenario_random_states(&sampled).unwrap(), trials, 250);
    let exact_worst = exact_ratios.iter().cloned().fold(0.0, f64::max);
    let sampled_ok = sampled_ratios.iter().filter(|&&r| r <= 0.1).count();
    Check::new(
        exact_worst <= 0.1 && sampled_ok * 10 >= trials * 8,
        format!("exact worst ratio at 100 {exact_worst:.4}; sampled {sampled_ok}/{trials} within 0.1 at 250"),
    )
}

fn shots_plateau() -> Check {
    let mut config = ScenarioConfig {
        lengths: vec![120.0],
        trials: 10,
        i_max: 20,
        ..ScenarioConfig::default()
    };
    config.noise.flips = true;
    let result =
        scenario_bb84_shots_sweep(&config, &[2000, 10_000], 120.0, Bb84Evaluation::default())
            .unwrap();
    let m = |n: usize| median(&column(&result, |r| r.shots == n).1);
    let (a, b) = (m(2000), m(10_000));
    Check::new(
        (a - b).abs() <= 0.02,
        format!("median QBER N=2000 {a:.4}, N=10000 {b:.4}"),
    )
}

fn blinded_pooled_tomography() -> Check {
    let s_p = vec![
        from_bloch([0.0, 0.0, 1.0]).unwrap(),
        from_bloch([1.0, 0.0, 0.0]).unwrap(),
    ];
    let ns = [1000usize, 10_000, 100_000];
    let result = scenario_theorem1(&s_p, &ns, 100, 0).unwrap();
    let mut passed = true;
    let mut medians = Vec::new();
    let mut detail = Vec::new();
    for n in ns {
        let blinded = column(&result, |r| r.shots == n).1;
        let bound = 3.0 / (n as f64).sqrt();
        let within = blinded.iter().filter(|&&d| d <= bound).count();
        passed &= within * 100 >= blinded.len() * 95;
        medians.push(median(&blinded));
        detail.push(format!(
            "N={n}: {within}/{} within {bound:.4}, median {:.5}",
            blinded.len(),
            median(&blinded)
        ));
    }
    passed &= medians.windows(2).all(|w| w[1] < w[0]);
    Check::new(passed, detail.join("; "))
}

fn tomography_equivalence() -> Check {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let rho = random_state(1 + i % 3, &mut r);
        let back = reconstruct(&ExpectationTable::exact(&rho), rho.n_qubits()).unwrap();
        worst = worst.max(trace_distance(&back, &rho).unwrap());
    }
    let shots = 100_000;
    let distances: Vec<f64> = (0..30)
        .map(|i| {
            let n = 1 + i % 3;
            let truth = random_state(n, &mut r);
            let mut table = ExpectationTable::new(n);
            for t in 0..shots {
                let basis = sample_basis(n, &mut r);
                let outcomes = measure_pauli(&truth, &basis, &mut r).unwrap();
                table
                    .add(&MeasurementRecord::new(t as u32, basis, outcomes).unwrap())
                    .unwrap();
            }
            trace_distance(&reconstruct(&table, n).unwrap(), &truth).unwrap()
        })
        .collect();
    let m = median(&distances);
    Check::new(
        worst < 1e-10 && m <= 0.02,
        format!("exact worst {worst:.2e} over 200 states; sampled median {m:.4} at N={shots}"),
    )
}

fn entanglement_swap() -> Check {
    let config = ScenarioConfig {
        lengths: vec![50.0],
        trials: 10,
        ..ScenarioConfig::default()
    };
    let result = scenario_entswap(&config).unwrap();
    let ok = result
        .rows
        .iter()
        .filter(|r| r.value_calibrated <= 0.05 && r.value_calibrated <= r.value_uncalibrated)
        .count();
    let worst = result
        .rows
        .iter()
        .map(|r| r.value_calibrated)
        .fold(0.0, f64::max);
    let mut r = rng(7);
    let identity = IdentityChannel(4);
    let zero = ParamVector::zeros(6);
    let noiseless = BellIndex::ALL
        .iter()
        .all(|&b| (0..200).all(|_| swap_once(b, &identity, &zero, &mut r).unwrap() == b))
        && entswap_error_rate(&identity, &zero).unwrap() < 1e-12;
    Check::new(
        ok == result.rows.len() && noiseless,
        format!("{ok}/{} trials calibrated within 0.05 and below uncalibrated (worst {worst:.4}); noiseless swap exact: {noiseless}", result.rows.len()),
    )
}

fn multipartite() -> Check {
    let mut config = ScenarioConfig {
        lengths: vec![50.0],
        trials: 100,
        exact_mode: true,
        i_max: 2000,
        ..ScenarioConfig::default()
    };
    config.optimizer.kind = OptimizerKind::NelderMead;
    let ns = [2usize, 3, 4, 5];
    let mut passed = true;
    let mut detail = Vec::new();
    for kind in [MultipartiteKind::Ghz, MultipartiteKind::W] {
        let result = scenario_multipartite(kind, &ns, &config).unwrap();
        let mut medians = Vec::new();
        let mut worst = 0.0f64;
        for n in ns {
            let metric = format!("infidelity_n{n}");
            let (uncal, cal) = column(&result, |r| r.metric == metric);
            worst = worst.max(cal.iter().cloned().fold(0.0, f64::max));
            medians.push(median(&uncal));
        }
        passed &= worst <= 0.05 && medians.windows(2).all(|w| w[1] >= w[0]);
        let shown: Vec<String> = medians.iter().map(|m| format!("{m:.3}")).collect();
        detail.push(format!(
            "{}: worst calibrated {worst:.2e}, uncalibrated medians [{}]",
            kind.name(),
            shown.join(", ")
        ));
    }
    Check::new(passed, detail.join("; "))
}

/// Newest executable in `dir` built from the test target `name`.
fn find_test_binary(dir: &Path, name: &str) -> Option<PathBuf> {
    let prefix = format!("{name}-");
    std::fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            let file = p.file_name().and_then(|f| f.to_str()).unwrap_or("");
            file.starts_with(&prefix) && p.extension().is_none_or(|x| x == "exe") && p.is_file()
        })
        .max_by_key(|p| {
            p.metadata()
                .and_then(|m| m.modified())
                .unwrap_or(SystemTime::UNIX_EPOCH)
        })
}

fn property_suites() -> Check {
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().unwrap();
    let mut passed = true;
    let mut detail = Vec::new();
    for suite in [
        "qcore_props",
        "channel_props",
        "tomography_props",
        "protocol_props",
    ] {
        let Some(bin) = find_test_binary(dir, suite) else {
            passed = false;
            detail.push(format!("{suite}: not built (run the whole test suite)"));
            continue;
        };
        let out = Command::new(&bin)
            .env_remove("PROPTEST_CASES")
            .output()
            .unwrap();
        let stdout = String::from_utf8_lossy(&out.stdout);
        let summary = stdout
            .lines()
            .find(|l| l.starts_with("test result:"))
            .unwrap_or("no summary")
            .trim_start_matches("test result: ");
        passed &= out.status.success();
        detail.push(format!(
            "{suite}: {}",
            summary.split(';').take(2).collect::<Vec<_>>().join(";")
        ));
    }
    Check::new(passed, detail.join("; "))
}

fn random_message<R: Rng>(r: &mut R) -> ProtocolMessage {
    let iteration = r.random();
    match r.random_range(0..3) {
        0 => {
            let records = (0..r.random_range(0..20))
                .map(|_| {
                    let n = r.random_range(1..=5);
                    let basis = PauliString::new(
                        (0..n)
                            .map(|_| [Pauli::X, Pauli::Y, Pauli::Z][r.random_range(0..3)])
                            .collect(),
                    );
                    let outcomes = (0..n).map(|_| if r.random() { 1 } else { -1 }).collect();
                    MeasurementRecord::new(r.random(), basis, outcomes).unwrap()
                })
                .collect();
            ProtocolMessage::MeasurementReport { iteration, records }
        }
        1 => ProtocolMessage::CostReport {
            iteration,
            cost: f64::from_bits(r.random()),
        },
        _ => ProtocolMessage::Terminate {
            iteration,
            reason: [
                TerminateReason::Converged,
                TerminateReason::MaxIterations,
                TerminateReason::Error,
            ][r.random_range(0..3)],
        },
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = Vec::new();
    for scenario in ScenarioName::ALL {
        let mut config = default_run_config(scenario);
        let sc = &mut config.scenario_config;
        sc.trials = 2;
        sc.seed = 99;
        if scenario != ScenarioName::Theorem1 {
            sc.lengths.truncate(2);
            sc.i_max = sc.i_max.min(15);
            sc.batch_size = 300;
        }
        config.shot_counts = vec![200, 400];
        config.n_range = vec![2, 3];
        config.transmissions = vec![500, 5000];
        config.eval = Bb84Evaluation {
            rounds: 2,
            qubits: 200,
        };
        let mut bytes = Vec::new();
        for (i, threads) in [1usize, 3].into_iter().enumerate() {
            config.output_path = dir.path().join(format!("{scenario}-{i}.csv"));
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run(&config)).unwrap();
            bytes.push(std::fs::read(&config.output_path).unwrap());
        }
        identical.push((scenario, bytes[0] == bytes[1]));
    }
    let mut r = rng(10);
    let mut round_trips = 0;
    for _ in 0..10_000 {
        let msg = random_message(&mut r);
        let frame = encode_message(&msg);
        if decode_message(&frame).is_ok_and(|back| encode_message(&back) == frame) {
            round_trips += 1;
        }
        // corrupted and random input must be rejected or decoded, never panic
        let mut damaged = frame.clone();
        let at = r.random_range(0..damaged.len());
        damaged[at] ^= 1 << r.random_range(0..8);
        let _ = decode_message(&damaged);
        let junk: Vec<u8> = (0..r.random_range(0..40)).map(|_| r.random()).collect();
        let _ = decode_prefix(&junk);
    }
    let differing: Vec<String> = identical
        .iter()
        .filter(|(_, same)| !same)
        .map(|(s, _)| s.to_string())
        .collect();
    Check::new(
        differing.is_empty() && round_trips == 10_000,
        format!(
            "{}/{} scenarios byte-identical across runs and thread counts{}; {round_trips}/10000 codec round trips",
            identical.len() - differing.len(),
            identical.len(),
            if differing.is_empty() { String::new() } else { format!(" (differ: {})", differing.join(", ")) }
        ),
    )
}

fn main() {
    type Named = (&'static str, fn() -> Check);
    let checks: [Named; 10] = [
        ("bb84 rotation-only QBER", bb84_rotation_only),
        ("flip-noise bifurcation", flip_bifurcation),
        ("random-state convergence", random_states_convergence),
        ("shot-count plateau", shots_plateau),
        ("blinded pooled tomography", blinded_pooled_tomography),
        ("tomography oracle equivalence", tomography_equivalence),
        ("entanglement swap", entanglement_swap),
        ("multipartite distribution", multipartite),
        ("property suites", property_suites),
        ("determinism and codec fuzzing", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let c = check();
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{:>2}. {verdict} {name} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            c.detail
        );
        failures += usize::from(!c.passed);
    }
    if failures > 0 {
        println!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
