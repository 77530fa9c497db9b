//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p spdsim-cli --test acceptance`; pass criterion
//! numbers after `--` to run a subset.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use spdsim::constants::K_B;
use spdsim::detector::{estimate_escape_rate, simulate_event_level, DetectorModel, SdeConfig};
use spdsim::escape::{thermal_escape_rate, PrefactorModel};
use spdsim::pat::{
    bessel_j_squared_weights, build_calibration, default_probe_voltage, reconstruct_response, simulate_calibration,
    simulate_sweep, tien_gordon_iv, IvSource, PatDrive,
};
use spdsim::ratefit::{contribution_crossover, fit, FitOptions};
use spdsim::seed::derive_seed;
use spdsim::source::{reference_modes, sample_cox_stream, SourceConfig};
use spdsim::stats::{fano_factor, fit_power_law, interval_stats, ks_exponential, waiting_time_histogram, Binning, Histogram};
use spdsim::{EventLabel, JunctionParams};
use spdsim_cli::commands::simulate_rate_table;
use spdsim_cli::config::{linspace, ExperimentConfig};
use spdsim_cli::{execute, Command as CliCommand};

/// Seed base for every stochastic criterion, fixed before the suite was first run.
const SEED: u64 = 20240917;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn photon_pulse() -> Outcome {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut worst = String::new();
    for c in linspace(60e-15, 100e-15, 9) {
        let p = JunctionParams { capacitance: c, ..JunctionParams::default() };
        for i in linspace(0.70, 0.85, 16) {
            let di = p.photon_current_pulse(i * p.critical_current, 13.95e9).map_err(|e| e.to_string())? * 1e9;
            if di < lo {
                lo = di;
                worst = format!("C = {:.0} fF, i = {i:.2}", c * 1e15);
            }
            hi = hi.max(di);
        }
    }
    check(
        lo >= 50.0 && hi <= 70.0,
        format!("ΔI over C in [60, 100] fF and i in [0.70, 0.85] spans [{lo:.2}, {hi:.2}] nA (minimum at {worst})"),
    )
}

fn mode_crossover() -> Outcome {
    let m = reference_modes();
    let t = contribution_crossover(&m[0], &m[1]).map_err(|e| e.to_string())?;
    check((t - 0.054).abs() <= 0.002, format!("T* = {:.3} mK", t * 1e3))
}

fn fit_round_trip() -> Outcome {
    let cfg = ExperimentConfig::default();
    let reps = 200;
    let mut sq = 0.0;
    let mut worst_dark: f64 = 0.0;
    for k in 0..reps {
        let data = simulate_rate_table(&cfg, derive_seed(SEED, &[3, k])).map_err(|e| e.to_string())?;
        let r = fit(&data, &cfg.modes, &FitOptions::default()).map_err(|e| e.to_string())?;
        sq += (r.params.efficiencies[1] - 0.45).powi(2);
        worst_dark = worst_dark.max((r.params.dark_rate / cfg.sweep_temp.dark_rate - 1.0).abs());
    }
    let rms = (sq / reps as f64).sqrt();
    check(
        rms <= 0.05 && worst_dark <= 0.30,
        format!("η₂ RMS error {rms:.4}, worst r_DC relative error {worst_dark:.3} over {reps} fits"),
    )
}

fn poissonian_control() -> Outcome {
    let rate = 1.0 / 9.026;
    let n_events = 1e5;
    let source = SourceConfig { modes: vec![], dark_rate: 0.0, temperature: 0.021 };
    let detector = DetectorModel { detection_probabilities: vec![], dark_rate: rate, ..default_detector() };
    let seeds = 200;
    let mut rejected = 0;
    let mut ratio = f64::NAN;
    for k in 0..seeds {
        let s = simulate_event_level(&source, &detector, n_events / rate, derive_seed(SEED, &[4, k]))
            .map_err(|e| e.to_string())?;
        if k == 0 {
            ratio = interval_stats(&s).map_err(|e| e.to_string())?.ratio;
        }
        if ks_exponential(&s).map_err(|e| e.to_string())?.p_value < 0.01 {
            rejected += 1;
        }
    }
    let frac = rejected as f64 / seeds as f64;
    check(
        (ratio - 1.0).abs() <= 0.01 && (0.005..=0.02).contains(&frac),
        format!("τ/σ = {ratio:.4}; KS rejections at 1%: {rejected}/{seeds} = {:.1}%", frac * 100.0),
    )
}

fn default_detector() -> DetectorModel {
    DetectorModel { detection_probabilities: vec![], dead_time: ExperimentConfig::default().detector.dead_time, dark_rate: 0.0 }
}

fn bunching() -> Outcome {
    let tau_int = 1e-3;
    let rate = 0.5 / tau_int;
    let s = sample_cox_stream(rate, tau_int, 1e5 / rate, EventLabel::Mode(1), derive_seed(SEED, &[5]))
        .map_err(|e| e.to_string())?;
    let f = fano_factor(&s, 40.0 * tau_int).map_err(|e| e.to_string())?;
    let ratio = interval_stats(&s).map_err(|e| e.to_string())?.ratio;

    // t^-0.75 density on [1e-3, 10] by inverse CDF
    let (a, b, alpha) = (1e-3f64, 10.0f64, 0.75f64);
    let e = 1.0 - alpha;
    let n = 200_000;
    let mut times = Vec::with_capacity(n + 1);
    let mut t = 0.0;
    times.push(t);
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        let u = (u + spdsim::seed::mix(derive_seed(SEED, &[6, k as u64])) as f64 / u64::MAX as f64).fract();
        t += (a.powf(e) + u * (b.powf(e) - a.powf(e))).powf(1.0 / e);
        times.push(t);
    }
    let stream = spdsim::EventStream::uniform(times, EventLabel::Dark, t).map_err(|e| e.to_string())?;
    let h: Histogram = waiting_time_histogram(&stream, Binning::Log, 40).map_err(|e| e.to_string())?;
    let pl = fit_power_law(&h, 3e-3, 3.0).map_err(|e| e.to_string())?;
    check(
        (f - 2.0).abs() <= 0.1 && ratio < 1.0 && (pl.alpha - 0.75).abs() <= 0.02,
        format!("Fano(40 τ_int) = {f:.3}, τ/σ = {ratio:.3}, power-law α = {:.4}", pl.alpha),
    )
}

fn sde_vs_theory() -> Outcome {
    let p = JunctionParams::default();
    let i = 0.8;
    let q = p.dynamic_quality_factor(i).map_err(|e| e.to_string())?;
    let du = p.barrier_height(i).map_err(|e| e.to_string())?;
    let cfg = SdeConfig { timestep: 0.2, max_time: 1e9, ..SdeConfig::default() };
    let xs = [8.0, 10.0, 12.0];
    let mut ln_tau = Vec::new();
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, &x) in xs.iter().enumerate() {
        let t = du / (K_B * x);
        let est = estimate_escape_rate(&p, i, t, 500, &cfg, derive_seed(SEED, &[7, k as u64])).map_err(|e| e.to_string())?;
        let theory = thermal_escape_rate(&p, i, t, PrefactorModel::TransitionState).map_err(|e| e.to_string())?;
        let r = est.rate / theory;
        ok &= est.switches >= 500 && (1.0 / 3.0..=3.0).contains(&r);
        ln_tau.push(-est.rate.ln());
        parts.push(format!("x = {x}: {} switches, SDE/theory = {r:.3}", est.switches));
    }
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ln_tau.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ln_tau).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    ok &= (slope - 1.0).abs() <= 0.1;
    check(ok, format!("Q = {q:.2}; {}; slope of ln τ = {slope:.4}", parts.join("; ")))
}

fn pat_round_trip() -> Outcome {
    let cfg = ExperimentConfig::default();
    let dark = cfg.dark_iv_model();
    let o = &cfg.pat;
    let mut parts = Vec::new();
    let mut ok = true;
    for (f0, q) in [(8.81e9, 7340.0), (13.95e9, 4650.0)] {
        let vp = default_probe_voltage(dark.gap_voltage(), f0);
        let powers = linspace(o.power_min_db, o.power_max_db, 35);
        let pairs = simulate_calibration(&dark, f0, o.alpha_ref, &powers, vp).map_err(|e| e.to_string())?;
        let cal = build_calibration(&pairs).map_err(|e| e.to_string())?;
        let half = o.span_linewidths * f0 / q;
        let freqs = linspace(f0 - half, f0 + half, o.sweep_points);
        let sweep = simulate_sweep(&dark, &freqs, o.alpha_source, Some((f0, q)), &[vp]).map_err(|e| e.to_string())?;
        let fitted = reconstruct_response(&sweep, &cal, vp).map_err(|e| e.to_string())?.fit;
        let (df, dq) = (fitted.f0 - f0, fitted.q / q - 1.0);
        ok &= df.abs() <= 1e6 && dq.abs() <= 0.05;
        parts.push(format!("{:.2} GHz: Δf0 = {:.1} kHz, ΔQ/Q = {:.4}", f0 / 1e9, df / 1e3, dq));
    }
    let grid = linspace(0.0, 0.6e-3, 601);
    let iv0 = tien_gordon_iv(&dark, &grid, &PatDrive::new(13.95e9, 0.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let identity = grid.iter().zip(iv0.current_samples()).all(|(v, i)| dark.current(*v) == *i);
    ok &= identity;
    let mut min_sum: f64 = 1.0;
    for alpha in [0.0, 0.2, 0.5, 1.0, 2.0, 5.0] {
        let w = bessel_j_squared_weights(alpha, 1e-9);
        min_sum = min_sum.min(w[0] + 2.0 * w[1..].iter().sum::<f64>());
    }
    ok &= min_sum >= 1.0 - 1e-9;
    check(ok, format!("{}; α = 0 identity {}; min Σ J_n² = {min_sum:.12}", parts.join("; "), if identity { "exact" } else { "broken" }))
}

fn dynamic_range() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig { output_dir: Some(dir.path().to_path_buf()), ..ExperimentConfig::default() };
    let (_, summary) = execute(&cfg, &CliCommand::SweepBias).map_err(|e| e.to_string())?;
    let ratio = summary["dynamic_range"].as_f64().ok_or("no dynamic range")?;
    let bias = summary["optimal_bias"].as_f64().ok_or("no optimal bias")?;
    check((1e3..=1e6).contains(&ratio), format!("rate(80 mK)/rate(21 mK) = {ratio:.3e} at i = {bias:.2}"))
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                let mut bytes = std::fs::read(&p).unwrap();
                if rel == "manifest.json" {
                    let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                    v.as_object_mut().unwrap().remove("wall_time_s");
                    bytes = serde_json::to_vec(&v).unwrap();
                }
                out.insert(rel, bytes);
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_spdsim");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |args: &[&str], out: &Path| -> Result<(), String> {
        let status = Command::new(bin)
            .args(args)
            .arg("--seed")
            .arg("7")
            .arg("--out")
            .arg(out)
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if status.success() {
            Ok(())
        } else {
            Err(format!("{args:?} exited with {status}"))
        }
    };
    run(&["sweep-temp"], &dir.path().join("input"))?;
    let rates = dir.path().join("input/rates.csv");
    let rates = rates.to_str().ok_or("non-UTF-8 temp path")?;
    let commands: Vec<Vec<&str>> = vec![
        vec!["iv"],
        vec!["pat"],
        vec!["sweep-bias"],
        vec!["sweep-temp"],
        vec!["distribution"],
        vec!["fit-rate", "--input", rates],
        vec!["demo-paper"],
    ];
    let mut files = 0;
    for args in &commands {
        let a = dir.path().join(format!("{}-a", args[0]));
        let b = dir.path().join(format!("{}-b", args[0]));
        run(args, &a)?;
        run(args, &b)?;
        let (ta, tb) = (read_tree(&a), read_tree(&b));
        if ta != tb {
            let diff: Vec<&String> = ta.keys().filter(|k| ta.get(*k) != tb.get(*k)).collect();
            return Err(format!("{} differs in {diff:?}", args[0]));
        }
        files += ta.len();
    }
    Ok(format!("{} commands rerun with identical config and seed, {files} files byte-identical", commands.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("photon pulse amplitude", photon_pulse),
        ("mode crossover", mode_crossover),
        ("rate fit round trip", fit_round_trip),
        ("Poissonian control", poissonian_control),
        ("bunching", bunching),
        ("SDE vs escape theory", sde_vs_theory),
        ("PAT pipeline round trip", pat_round_trip),
        ("dynamic range", dynamic_range),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let n = k + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("acceptance {n} PASS {name} ({secs:.1} s): {d}"),
            Err(d) => {
                failed += 1;
                println!("acceptance {n} FAIL {name} ({secs:.1} s): {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
