//! Acceptance suite. Each criterion drives the `qzeno` binary, checks its
//! output against independently computed values and prints one line.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use serde_json::Value as Json;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

struct Run {
    stdout: String,
    elapsed: Duration,
}

fn qzeno(args: &[&str]) -> Result<Run, String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_qzeno"))
        .args(args)
        .env_remove("QZENO_SEED")
        .output()
        .map_err(|e| format!("cannot start qzeno: {e}"))?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "qzeno {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(Run {
        stdout: String::from_utf8(out.stdout).map_err(|e| e.to_string())?,
        elapsed,
    })
}

fn json(run: &Run) -> Result<Json, String> {
    serde_json::from_str(&run.stdout).map_err(|e| format!("output is not JSON: {e}"))
}

fn column(doc: &Json, name: &str) -> Result<Vec<f64>, String> {
    let cols = doc["columns"].as_array().ok_or("no columns")?;
    let idx = cols
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| format!("no column {name}"))?;
    doc["rows"]
        .as_array()
        .ok_or("no rows")?
        .iter()
        .map(|r| r[idx].as_f64().ok_or_else(|| format!("non-numeric {name}")))
        .collect()
}

fn result_f64(doc: &Json, key: &str) -> Result<f64, String> {
    doc["results"][key]
        .as_f64()
        .ok_or_else(|| format!("missing result {key}"))
}

fn result_str<'a>(doc: &'a Json, key: &str) -> Result<&'a str, String> {
    doc["results"][key]
        .as_str()
        .ok_or_else(|| format!("missing result {key}"))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Values as written: 12 significant digits.
fn printed_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-11 * b.abs().max(1e-300)
}

fn survival_exact(n: u64) -> f64 {
    (PI / (2.0 * n as f64)).cos().powi(2).powi(n as i32)
}

fn fig2() -> Outcome {
    let run = qzeno(&["fig2", "--format", "json"])?;
    let doc = json(&run)?;
    let n = column(&doc, "n")?;
    let exact = column(&doc, "survival_exact")?;
    let approx = column(&doc, "survival_approx")?;
    check(n.len() == 100 && n[0] == 1.0 && n[99] == 100.0, || {
        format!("expected n = 1..100, got {} rows", n.len())
    })?;
    let mut worst: f64 = 0.0;
    for i in 0..n.len() {
        let k = n[i] as u64;
        let e = survival_exact(k);
        let a = (-PI * PI / (4.0 * k as f64)).exp();
        check(k == 1 || printed_eq(exact[i], e), || format!("exact({k}) = {} not {e}", exact[i]))?;
        check(printed_eq(approx[i], a), || format!("approx({k}) = {} not {a}", approx[i]))?;
        if k >= 10 {
            worst = worst.max((exact[i] - approx[i]).abs());
        }
    }
    check(worst < 0.002, || format!("max |exact - approx| for n >= 10 is {worst}"))?;
    check(exact[0] == 0.0, || format!("exact(1) = {}", exact[0]))?;
    check(exact.windows(2).all(|w| w[1] > w[0]), || "exact not increasing".into())?;
    check(run.elapsed < Duration::from_secs(1), || format!("took {:?}", run.elapsed))?;
    Ok(format!("max diff n>=10 {worst:.2e}, {:?}", run.elapsed))
}

fn fig3() -> Outcome {
    let omega = 2.0 * PI;
    let run = qzeno(&["fig3", "--format", "json"])?;
    let doc = json(&run)?;
    let t = column(&doc, "t")?;
    let t_end = *t.last().ok_or("empty table")?;
    check((t_end - PI / omega).abs() < 1e-12, || format!("curve ends at {t_end}"))?;
    let mut worst: f64 = 0.0;
    for k in [50u64, 100] {
        let dt = PI / (k as f64 * omega);
        let exact = column(&doc, &format!("stepwise_exact_dt{k}"))?;
        let approx = column(&doc, &format!("exponential_approx_dt{k}"))?;
        let mut boundaries = 0;
        for i in 0..t.len() {
            let probes = t[i] / dt;
            if (probes - probes.round()).abs() > 1e-9 {
                continue;
            }
            boundaries += 1;
            let reference = (0.5 * omega * dt).cos().powi(2).powf(probes.round());
            check(printed_eq(exact[i], reference), || {
                format!("dt{k} at t = {}: {} vs {reference}", t[i], exact[i])
            })?;
            worst = worst.max(((exact[i] - approx[i]) / exact[i]).abs());
        }
        check(boundaries == k as usize + 1, || {
            format!("dt{k}: {boundaries} probe boundaries, expected {}", k + 1)
        })?;
    }
    check(worst < 0.01, || format!("relative gap {worst}"))?;

    let tc = result_f64(&doc, "decay_time_dt50")?;
    let expected = 200.0 / (PI * omega);
    check(printed_eq(tc, expected), || format!("t_c = {tc}, expected {expected}"))?;
    let lib = qzeno::pulsed::effective_decay_time(omega, PI / (50.0 * omega))
        .map_err(|e| e.to_string())?;
    check((lib - expected).abs() <= 4.0 * f64::EPSILON * expected, || {
        format!("library t_c = {lib}, expected {expected}")
    })?;
    check(run.elapsed < Duration::from_secs(1), || format!("took {:?}", run.elapsed))?;
    Ok(format!("max relative gap {worst:.2e}, t_c {tc}, {:?}", run.elapsed))
}

/// |A₀(T)|² at Ω = 2π, T = 0.25 for Γ = 50, 100, ..., 500 (matrix-exponential
/// oracle, frozen).
const SURVIVAL_ORACLE: [f64; 10] = [
    0.4982295743,
    0.6918866147,
    0.7781976309,
    0.8267912366,
    0.8579329820,
    0.8795879064,
    0.8955164071,
    0.9077240644,
    0.9173780269,
    0.9252035943,
];

fn fig4() -> Outcome {
    let run = qzeno(&["fig4", "--threads", "1", "--format", "json"])?;
    let doc = json(&run)?;
    check(doc["parameters"]["runs"] == 1000, || "runs is not 1000".into())?;
    let gamma = column(&doc, "gamma")?;
    let counts = column(&doc, "no_jump_count")?;
    let oracle = column(&doc, "oracle_count")?;
    check(gamma.len() == 10, || format!("{} grid points", gamma.len()))?;
    let mut worst_z: f64 = 0.0;
    for i in 0..10 {
        let g = 50.0 + 50.0 * i as f64;
        let p = SURVIVAL_ORACLE[i];
        check((gamma[i] - g).abs() < 1e-9, || format!("gamma[{i}] = {}", gamma[i]))?;
        check((oracle[i] / 1000.0 - p).abs() < 1e-9, || {
            format!("oracle count {} at gamma {g}, expected {}", oracle[i], 1000.0 * p)
        })?;
        let sigma = (1000.0 * p * (1.0 - p)).sqrt();
        let z = (counts[i] - 1000.0 * p) / sigma;
        worst_z = if z.abs() > worst_z.abs() { z } else { worst_z };
        check(z.abs() <= 3.0, || {
            format!("gamma {g}: count {} vs {:.1} (z = {z:.2})", counts[i], 1000.0 * p)
        })?;
    }
    check(counts.windows(2).all(|w| w[1] > w[0]), || format!("counts not increasing: {counts:?}"))?;
    check(counts[9] >= 900.0, || format!("count at gamma 500 is {}", counts[9]))?;
    check(run.elapsed < Duration::from_secs(60), || format!("took {:?}", run.elapsed))?;
    Ok(format!("counts {counts:?}, worst z {worst_z:.2}, {:?} single-threaded", run.elapsed))
}

fn oracles() -> Outcome {
    let doc = json(&qzeno(&["validate", "--format", "json"])?)?;
    let mut worst: f64 = 0.0;
    for key in ["max_dev_closed_vs_series", "max_dev_closed_vs_rk4", "max_dev_series_vs_rk4"] {
        let d = result_f64(&doc, key)?;
        check(d < 1e-8, || format!("{key} = {d}"))?;
        worst = worst.max(d);
    }
    let derived = result_f64(&doc, "coefficient_dev_derived")?;
    let printed = result_f64(&doc, "coefficient_dev_printed")?;
    check(derived <= 1e-10, || format!("derived coefficient deviates by {derived}"))?;
    check(printed > 1e-10, || format!("printed coefficient deviates by only {printed}"))?;
    let decision = result_str(&doc, "coefficient_decision")?;
    let rejected = result_str(&doc, "coefficient_rejected")?;
    check(decision == "gamma/(4h)" && rejected == "gamma/(2h)", || {
        format!("decision {decision}, rejected {rejected}")
    })?;
    check(result_str(&doc, "coefficient_shipped")? == decision, || "shipped variant differs".into())?;
    Ok(format!("max oracle deviation {worst:.1e}, {decision} kept, {rejected} off by {printed:.3}"))
}

fn rate_equivalence() -> Outcome {
    let doc = json(&qzeno(&["equivalence", "--format", "json"])?)?;
    let omega_p = doc["parameters"]["omega-pulsed"].as_f64().ok_or("no omega-pulsed")?;
    let dt = column(&doc, "dt")?;
    let ratio = column(&doc, "gamma_over_omega_continuous")?;
    let gap = column(&doc, "relative_gap")?;
    let rate_p = column(&doc, "rate_pulsed")?;
    let rate_c = column(&doc, "rate_continuous")?;
    check(dt[0] / dt[dt.len() - 1] >= 100.0 * (1.0 - 1e-9), || "dt spans under two decades".into())?;
    let omega_c = omega_p / 2.0;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..dt.len() {
        let gamma = 4.0 / dt[i];
        let h = ((gamma / 4.0).powi(2) - omega_c * omega_c).sqrt();
        let continuous = 2.0 * (gamma / 4.0 - h);
        let pulsed = omega_p * omega_p * dt[i] / 4.0;
        check((rate_c[i] - continuous).abs() <= 1e-8 * continuous, || {
            format!("continuous rate {} vs {continuous}", rate_c[i])
        })?;
        check((rate_p[i] - pulsed).abs() <= 1e-10 * pulsed, || format!("pulsed rate {} vs {pulsed}", rate_p[i]))?;
        if ratio[i] >= 20.0 {
            checked += 1;
            worst = worst.max(gap[i]);
            check(gap[i] < 0.05, || format!("gap {} at gamma/omega {}", gap[i], ratio[i]))?;
        }
    }
    check(checked == dt.len(), || format!("only {checked} of {} points reach 20 omega", dt.len()))?;
    check(dt.windows(2).all(|w| w[1] < w[0]), || "dt grid not decreasing".into())?;
    check(gap.windows(2).all(|w| w[1] < w[0]), || format!("gap not shrinking: {gap:?}"))?;
    Ok(format!("{checked} points, max gap {worst:.2e}, min gap {:.2e}", gap[gap.len() - 1]))
}

fn statistics_and_determinism() -> Outcome {
    let doc = json(&qzeno(&["pulsed-sim", "--format", "json"])?)?;
    let runs = doc["parameters"]["runs"].as_f64().ok_or("no runs")?;
    check(runs == 1e5 && doc["parameters"]["n-probes"] == 10, || "not 1e5 runs of 10 probes".into())?;
    let ideal = doc["parameters"]["epsilon0"].as_f64() == Some(0.0) && doc["parameters"]["eta"].as_f64() == Some(0.0);
    check(ideal, || "probes not ideal".into())?;
    let survived = result_f64(&doc, "survived")?;
    let p = survival_exact(10);
    let sigma = (runs * p * (1.0 - p)).sqrt();
    let z = (survived - runs * p) / sigma;
    check(z.abs() <= 3.0, || format!("survived {survived} vs {:.1} (z = {z:.2})", runs * p))?;

    let mut outputs = Vec::new();
    for threads in ["1", "2", "8"] {
        let run = qzeno(&["fig4", "--seed", "1234", "--threads", threads])?;
        outputs.push(strip_timestamp(&run.stdout));
    }
    check(outputs[0] == outputs[1] && outputs[0] == outputs[2], || {
        "fig4 output differs between thread counts".into()
    })?;
    check(!outputs[0].contains("threads"), || "thread count leaks into output".into())?;
    Ok(format!("pulsed z = {z:.2}, fig4 identical at 1/2/8 threads"))
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# timestamp:"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("1 fig2 survival after n probes", fig2),
        ("2 fig3 stepwise vs exponential", fig3),
        ("3 fig4 no-jump counts at full scale", fig4),
        ("4 closed form vs oracles", oracles),
        ("5 pulsed/continuous rate equivalence", rate_equivalence),
        ("6 statistics and determinism", statistics_and_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 6 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
