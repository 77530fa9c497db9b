//! The experiment commands. Each writes its files through [`Output`] under
//! `prefix` and returns a JSON summary.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use spdsim::detector::{optimal_bias, simulate_event_level, sweep_bias, BiasCalibration, DetectorModel};
use spdsim::escape::EscapeConfig;
use spdsim::io::{fmt_f64, write_events_csv, write_histogram_csv, write_iv_csv, write_numeric, write_rates_csv, RESPONSE_HEADER, SWEEP_HEADER};
use spdsim::pat::{
    build_calibration, default_probe_voltage, extract_step_current, reconstruct_response, simulate_calibration,
    simulate_sweep, tien_gordon_iv, PatDrive,
};
use spdsim::ratefit::{contribution_crossover, fit, model_rate, parametric_spread, FitOptions, RateDataPoint, RateParams};
use spdsim::seed::{derive_seed, rng_from};
use spdsim::source::SourceConfig;
use spdsim::stats::{
    fano_factor, fit_exponential, fit_power_law, interval_stats_with, ks_exponential, waiting_time_histogram,
    Bootstrap, IntervalOptions,
};

use crate::config::{linspace, ExperimentConfig};
use crate::error::CliError;
use crate::output::Output;

/// Seed path components of the commands.
pub mod streams {
    pub const PAT: u64 = 2;
    pub const SWEEP_BIAS: u64 = 3;
    pub const SWEEP_TEMP: u64 = 4;
    pub const DISTRIBUTION: u64 = 5;
    pub const FIT_RATE: u64 = 6;
}

fn comments(out: &Output, extra: &[(&str, String)]) -> Vec<String> {
    let mut c = vec![out.manifest_comment()];
    c.extend(extra.iter().map(|(k, v)| format!("{k}: {v}")));
    c
}

pub fn iv(cfg: &ExperimentConfig, out: &mut Output, prefix: &str) -> Result<Value, CliError> {
    let o = &cfg.iv;
    let dark = cfg.dark_iv_model();
    let grid = linspace(o.v_min, o.v_max, o.points);
    let v_probe = default_probe_voltage(dark.gap_voltage(), o.frequency);
    let mut steps = Vec::with_capacity(o.alphas.len());
    for (k, &alpha) in o.alphas.iter().enumerate() {
        let drive = PatDrive::new(o.frequency, alpha)?;
        let curve = tien_gordon_iv(&dark, &grid, &drive)?;
        let c = comments(out, &[("alpha", fmt_f64(alpha)), ("frequency_Hz", fmt_f64(o.frequency))]);
        out.write(&format!("{prefix}iv_alpha_{k}.csv"), |w| Ok(write_iv_csv(w, &curve, &c)?))?;
        let at_probe = tien_gordon_iv(&dark, &[v_probe], &drive)?;
        steps.push(vec![alpha, extract_step_current(&at_probe, v_probe)?]);
    }
    let c = comments(out, &[("v_probe_V", fmt_f64(v_probe))]);
    out.write(&format!("{prefix}step_currents.csv"), |w| Ok(write_numeric(w, &c, &["alpha", "step_current_A"], &steps)?))?;
    Ok(json!({
        "v_probe_V": v_probe,
        "gap_voltage_V": dark.gap_voltage(),
        "step_currents": steps.iter().map(|s| json!({"alpha": s[0], "current_A": s[1]})).collect::<Vec<_>>(),
    }))
}

pub fn pat(cfg: &ExperimentConfig, out: &mut Output, prefix: &str) -> Result<Value, CliError> {
    let o = &cfg.pat;
    let dark = cfg.dark_iv_model();
    let n_powers = ((o.power_max_db - o.power_min_db) / o.power_step_db).round() as usize + 1;
    let powers = linspace(o.power_min_db, o.power_max_db, n_powers);
    let mut modes = Vec::with_capacity(cfg.modes.len());
    for (k, m) in cfg.modes.iter().enumerate() {
        let (f0, q) = (m.frequency, m.quality_factor);
        let v_probe = default_probe_voltage(dark.gap_voltage(), f0);
        let pairs = simulate_calibration(&dark, f0, o.alpha_ref, &powers, v_probe)?;
        let cal = build_calibration(&pairs)?;
        let rows: Vec<Vec<f64>> = pairs.iter().map(|&(p, i)| vec![p, i]).collect();
        let c = comments(out, &[("frequency_Hz", fmt_f64(f0)), ("v_probe_V", fmt_f64(v_probe))]);
        out.write(&format!("{prefix}calibration_mode{k}.csv"), |w| {
            Ok(write_numeric(w, &c, &["power_dB", "step_current_A"], &rows)?)
        })?;

        let half = o.span_linewidths * f0 / q;
        let freqs = linspace(f0 - half, f0 + half, o.sweep_points);
        let sweep = simulate_sweep(&dark, &freqs, o.alpha_source, Some((f0, q)), &[v_probe])?;
        let resp = reconstruct_response(&sweep, &cal, v_probe)?;
        let rows: Vec<Vec<f64>> = resp.freq.iter().zip(&resp.power_db).map(|(f, p)| vec![*f, *p]).collect();
        out.write(&format!("{prefix}response_mode{k}.csv"), |w| Ok(write_numeric(w, &c, &RESPONSE_HEADER, &rows)?))?;
        modes.push(json!({
            "mode": k,
            "frequency_Hz": f0,
            "quality_factor": q,
            "v_probe_V": v_probe,
            "calibration": cal,
            "fit": resp.fit,
            "f0_error_Hz": resp.fit.f0 - f0,
            "q_relative_error": resp.fit.q / q - 1.0,
        }));
    }
    let summary = json!({ "modes": modes });
    out.json(&format!("{prefix}pat_summary.json"), &summary)?;
    Ok(summary)
}

pub fn sweep_bias_cmd(cfg: &ExperimentConfig, out: &mut Output, prefix: &str) -> Result<Value, CliError> {
    let o = &cfg.sweep_bias;
    let d = &cfg.detector;
    let calibration = match &o.calibration_table {
        Some(t) => BiasCalibration::Table(t.clone()),
        None => BiasCalibration::Simulated {
            params: cfg.junction,
            junction_temperature: d.junction_temperature,
            escape: EscapeConfig {
                prefactor_model: d.prefactor_model,
                include_mqt: d.include_mqt,
                temperature: d.junction_temperature,
            },
            dark_floor: d.dark_floor,
            trials: o.trials,
            sde: cfg.sde,
        },
    };
    let biases = o.biases();
    let seed = derive_seed(cfg.master_seed, &[streams::SWEEP_BIAS]);
    let (points, rows) = sweep_bias(&calibration, &cfg.modes, &o.temperatures, &biases, seed)?;
    let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.bias_ratio, r.temp_k, r.rate_hz, r.rate_err_hz]).collect();
    let c = comments(out, &[]);
    out.write(&format!("{prefix}sweep_bias.csv"), |w| Ok(write_numeric(w, &c, &SWEEP_HEADER, &table)?))?;
    out.json(&format!("{prefix}bias_calibration.json"), &points)?;

    let t_cold = o.temperatures.iter().copied().fold(f64::INFINITY, f64::min);
    let t_hot = o.temperatures.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = optimal_bias(&rows, t_hot, t_cold);
    let summary = json!({
        "t_hot_K": t_hot,
        "t_cold_K": t_cold,
        "optimal_bias": best.map(|b| b.0),
        "dynamic_range": best.map(|b| b.1),
    });
    out.json(&format!("{prefix}sweep_bias_summary.json"), &summary)?;
    Ok(summary)
}

/// Simulated rate-vs-temperature table with multiplicative log-normal noise.
pub fn simulate_rate_table(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<RateDataPoint>, CliError> {
    let o = &cfg.sweep_temp;
    let truth = RateParams { efficiencies: cfg.modes.iter().map(|m| m.efficiency).collect(), dark_rate: o.dark_rate };
    let sigma = o.relative_noise.max(1e-6);
    let mut rng = rng_from(seed, &[]);
    o.temperatures()
        .into_iter()
        .map(|t| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            let r = model_rate(t, &cfg.modes, &truth) * (o.relative_noise * xi).exp();
            Ok(RateDataPoint::new(t, r, sigma * r)?)
        })
        .collect()
}

fn crossover(cfg: &ExperimentConfig) -> Option<f64> {
    match cfg.modes.as_slice() {
        [a, b, ..] => contribution_crossover(a, b).ok(),
        _ => None,
    }
}

pub fn sweep_temp(cfg: &ExperimentConfig, out: &mut Output, prefix: &str) -> Result<Value, CliError> {
    let data = simulate_rate_table(cfg, derive_seed(cfg.master_seed, &[streams::SWEEP_TEMP]))?;
    let c = comments(out, &[("relative_noise", fmt_f64(cfg.sweep_temp.relative_noise))]);
    out.write(&format!("{prefix}rates.csv"), |w| Ok(write_rates_csv(w, &data, &c)?))?;
    let fitted = if cfg.sweep_temp.fit {
        let r = fit(&data, &cfg.modes, &FitOptions::default())?;
        out.json(&format!("{prefix}fit.json"), &r)?;
        Some(r)
    } else {
        None
    };
    let summary = json!({
        "crossover_K": crossover(cfg),
        "true_efficiencies": cfg.modes.iter().map(|m| m.efficiency).collect::<Vec<_>>(),
        "true_dark_rate": cfg.sweep_temp.dark_rate,
        "fitted": fitted.as_ref().map(|f| &f.params),
        "std_errors": fitted.as_ref().map(|f| &f.std_errors),
    });
    out.json(&format!("{prefix}sweep_temp_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct Fano {
    window_s: f64,
    value: f64,
}

pub fn distribution(cfg: &ExperimentConfig, out: &mut Output, prefix: &str) -> Result<Value, CliError> {
    let o = &cfg.distribution;
    let seed = derive_seed(cfg.master_seed, &[streams::DISTRIBUTION]);
    let source = SourceConfig { modes: cfg.modes.clone(), dark_rate: 0.0, temperature: o.temperature };
    let detector = DetectorModel {
        detection_probabilities: o.detection_probabilities.clone().unwrap_or_else(|| vec![1.0; cfg.modes.len()]),
        dead_time: cfg.detector.dead_time,
        dark_rate: o.dark_rate,
    };
    let stream = simulate_event_level(&source, &detector, o.duration, seed)?;
    let c = comments(out, &[("temperature_K", fmt_f64(o.temperature))]);
    out.write(&format!("{prefix}events.csv"), |w| Ok(write_events_csv(w, &stream, &c)?))?;

    let bootstrap = (o.bootstrap_resamples >= 2).then(|| Bootstrap {
        resamples: o.bootstrap_resamples,
        level: 0.95,
        seed: derive_seed(seed, &[1]),
    });
    let intervals = interval_stats_with(&stream, &IntervalOptions { dead_time_correction: None, bootstrap }).ok();
    let histogram = waiting_time_histogram(&stream, o.binning, o.bins).ok();
    if let Some(h) = &histogram {
        out.write(&format!("{prefix}histogram.csv"), |w| Ok(write_histogram_csv(w, h, &c)?))?;
    }
    let power_law = match (&histogram, o.power_law_range) {
        (Some(h), Some((a, b))) => fit_power_law(h, a, b).ok(),
        _ => None,
    };
    let tau = fit_exponential(&stream).ok();
    let fano = tau.and_then(|tau| {
        let window = o.fano_window.unwrap_or((10.0 * tau).min(stream.duration() / 20.0));
        fano_factor(&stream, window).ok().map(|value| Fano { window_s: window, value })
    });
    let summary = json!({
        "n_events": stream.len(),
        "duration_s": stream.duration(),
        "rate_Hz": stream.rate(),
        "tau_exponential_s": tau,
        "intervals": intervals,
        "ks": ks_exponential(&stream).ok(),
        "fano": fano,
        "power_law": power_law,
    });
    out.json(&format!("{prefix}distribution_summary.json"), &summary)?;
    Ok(summary)
}

pub fn fit_rate(cfg: &ExperimentConfig, out: &mut Output, prefix: &str) -> Result<Value, CliError> {
    let path = cfg
        .fit_rate
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("fit-rate needs an input table (fit_rate.input or --input)".into()))?;
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let data = spdsim::io::read_rates_csv(std::io::BufReader::new(file))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    out.record_input(path)?;
    let result = fit(&data, &cfg.modes, &FitOptions::default())?;
    let spread = if cfg.fit_rate.resamples >= 2 {
        let seed = derive_seed(cfg.master_seed, &[streams::FIT_RATE]);
        Some(parametric_spread(&data, &cfg.modes, &result, cfg.fit_rate.resamples, seed)?)
    } else {
        None
    };
    let doc = json!({ "fit": result, "parametric_spread": spread });
    out.json(&format!("{prefix}fit.json"), &doc)?;
    let model: Vec<Vec<f64>> = data
        .iter()
        .map(|p| vec![p.temp_k, model_rate(p.temp_k, &cfg.modes, &result.params)])
        .collect();
    let c = comments(out, &[]);
    out.write(&format!("{prefix}fit_curve.csv"), |w| Ok(write_numeric(w, &c, &["temp_K", "model_rate_Hz"], &model)?))?;
    Ok(doc)
}

pub fn demo_paper(cfg: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    let iv = iv(cfg, out, "iv/")?;
    let pat = pat(cfg, out, "pat/")?;
    let bias = sweep_bias_cmd(cfg, out, "sweep_bias/")?;
    let temp = sweep_temp(cfg, out, "sweep_temp/")?;
    let dist = distribution(cfg, out, "distribution/")?;
    let summary = json!({
        "iv": iv,
        "pat": pat,
        "sweep_bias": bias,
        "sweep_temp": temp,
        "distribution": dist,
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}
