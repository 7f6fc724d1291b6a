//! Acceptance criteria for the toolkit, one PASS/FAIL line each.
//!
//! Run with `cargo test -p bubblelink-cli --test acceptance`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use bubblelink::channel::mean_flow_velocity;
use bubblelink::dsp::{
    detect_peak_indices, kalman_filter, moving_average, KalmanParams, KalmanState, MafParams, Peak,
    PeakDetectParams, PeakSet,
};
use bubblelink::metrics::{bsr, match_peaks};
use bubblelink::modem::{
    duty_efficiency, effective_bit_rate, max_channel_bit_rate, raw_bit_rate, time_overhead,
    uniform_avg_bit_duration, Injection, InjectionSchedule, TimingParams,
};
use bubblelink::rng::SimRng;
use bubblelink::SensorTrace;
use bubblelink_cli::config::ExperimentConfig;
use bubblelink_cli::pipeline::{self, Branch};
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{name} = {got:.9}, expected {want} ± {tol:e}")
    })
}

fn c1_rate_formulas() -> Outcome {
    let t = TimingParams::framed(0.3, 2.0).map_err(|e| e.to_string())?;
    within("raw_bit_rate", raw_bit_rate(&t), 0.434783, 1e-6)?;
    within("effective_bit_rate", effective_bit_rate(&t), 0.869565, 1e-6)?;
    within("time_overhead", time_overhead(&t), 0.869565, 1e-6)?;
    ensure(uniform_avg_bit_duration(&t) == 1.15, || {
        format!(
            "uniform_avg_bit_duration = {}",
            uniform_avg_bit_duration(&t)
        )
    })?;
    within("duty_efficiency", duty_efficiency(&t), 0.260870, 1e-6)?;
    // Printed figures: 0.43 bit/s, 0.87 bit/s, 87 %, 1.15 s, 26 %.
    within("raw rate (printed)", raw_bit_rate(&t), 0.43, 0.005)?;
    within(
        "effective rate (printed)",
        effective_bit_rate(&t),
        0.87,
        0.005,
    )?;
    within("overhead (printed)", time_overhead(&t) * 100.0, 87.0, 0.5)?;
    within("duty (printed)", duty_efficiency(&t) * 100.0, 26.0, 0.5)?;
    Ok(format!(
        "R_b={:.6} eff={:.6} overhead={:.6} T_avg={} eta={:.6}",
        raw_bit_rate(&t),
        effective_bit_rate(&t),
        time_overhead(&t),
        uniform_avg_bit_duration(&t),
        duty_efficiency(&t)
    ))
}

fn c2_channel_ceiling() -> Outcome {
    let r = max_channel_bit_rate(0.040, 3).map_err(|e| e.to_string())?;
    within("max_channel_bit_rate", r, 8.3333, 1e-3)?;
    within("printed 8.33", r, 8.33, 0.005)?;
    Ok(format!("{r:.4} bit/s"))
}

fn c3_flow_velocity() -> Outcome {
    // Independent oracle: 1.24 L/min = 1.24/60000 m^3/s over a 3/8 inch bore.
    let bore_m: f64 = 3.0 / 8.0 * 0.0254;
    let area = 0.25 * std::f64::consts::PI * bore_m.powi(2);
    let oracle = (1.24 / 60_000.0) / area;
    let v = mean_flow_velocity(1.24, 0.009525);
    within("velocity vs oracle", v, oracle, 1e-12)?;
    within("velocity", v, 0.2901, 0.0005)?;
    Ok(format!("{v:.5} m/s (oracle {oracle:.5})"))
}

fn c4_table_consistency() -> Outcome {
    let rows = [
        ("raw", 0.7679, 0.2321),
        ("kf", 0.1393, 0.8607),
        ("maf", 0.1179, 0.8821),
    ];
    for (name, b, s) in rows {
        within(&format!("bsr({name})"), bsr(b), s, 1e-4)?;
    }
    Ok("bsr = 1 - ber at 76.79/13.93/11.79 %".into())
}

fn paper_like() -> Result<ExperimentConfig, String> {
    ExperimentConfig::preset("paper-like").map_err(|e| e.to_string())
}

fn c5_noiseless_round_trip() -> Outcome {
    let mut cfg = paper_like()?;
    cfg.apply_overrides([
        "channel.noise_std=0",
        "channel.spike_rate=0",
        "bits.length=64",
        "bits.preamble=1",
    ])
    .map_err(|e| e.to_string())?;
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = pipeline::run(&cfg, dir.path()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.payload.len() == 64, || {
        format!("payload length {}", out.payload.len())
    })?;
    for b in &out.branches {
        ensure(b.report.ber == 0.0, || {
            format!("{} ber = {}", b.branch.name(), b.report.ber)
        })?;
        ensure(b.payload == out.payload, || {
            format!(
                "{} payload differs in {} bits",
                b.branch.name(),
                b.payload_errors
            )
        })?;
    }
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "3 branches BER 0, payload exact, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn c6_calibrated_ordering() -> Outcome {
    let cfg = paper_like()?;
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = pipeline::run(&cfg, dir.path()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let raw = out.branch(Branch::Raw).report.clone();
    let maf = out.branch(Branch::MovingAverage).report.clone();
    let kf = out.branch(Branch::Kalman).report.clone();
    ensure(raw.peaks_total == 50, || {
        format!("peaks_total = {}", raw.peaks_total)
    })?;
    ensure(raw.ber > 0.5, || format!("ber(raw) = {}", raw.ber))?;
    ensure(kf.ber <= 0.2, || format!("ber(kalman) = {}", kf.ber))?;
    ensure(maf.ber <= 0.2, || format!("ber(maf) = {}", maf.ber))?;
    ensure(raw.ber > kf.ber.max(maf.ber), || {
        "raw not worse than filtered".into()
    })?;
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "seed {}: ber raw={:.4} kalman={:.4} maf={:.4} (f1 {:.3}/{:.3}/{:.3})",
        cfg.channel.rng_seed, raw.ber, kf.ber, maf.ber, raw.f1, kf.f1, maf.f1
    ))
}

fn random_trace(rng: &mut SimRng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| rng.standard_normal() * 3.0 + 1.0)
        .collect()
}

fn c7_filter_oracles() -> Outcome {
    let mut rng = SimRng::new(7, 100);
    for case in 0..100 {
        let len = 1 + (rng.uniform() * 10_000.0) as usize;
        let x = random_trace(&mut rng, len);
        let w = 1 + (rng.uniform() * 50.0) as usize;
        let trace = SensorTrace::new(0.04, 0.0, x.clone()).unwrap();
        let y = moving_average(&trace, &MafParams::new(w).unwrap());
        for n in 0..len {
            // Brute force: explicit loop over the trailing window.
            let lo = (n + 1).saturating_sub(w);
            let mut acc = 0.0;
            let mut count = 0usize;
            let mut j = lo;
            while j <= n {
                acc += x[j];
                count += 1;
                j += 1;
            }
            let want = acc / count as f64;
            ensure(y.samples()[n] == want, || {
                format!("maf case {case} n={n}: {} != {want}", y.samples()[n])
            })?;
        }
    }

    let kf = KalmanParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
    let out = kalman_filter(&SensorTrace::new(0.04, 0.0, vec![1.0, 1.0]).unwrap(), &kf);
    within("kf[0]", out.samples()[0], 2.0 / 3.0, 1e-9)?;
    within("kf[1]", out.samples()[1], 0.875, 1e-9)?;

    for (q, r) in [(1.0, 1.0), (1e-4, 1e-2), (0.3, 7.0), (5.0, 0.01)] {
        let mut s = KalmanState {
            estimate: 0.0,
            variance: 1.0,
        };
        for _ in 0..1000 {
            s.step(0.0, q, r);
        }
        let p = s.variance;
        within(
            &format!("fixed point q={q} r={r}"),
            p,
            (p + q) * r / (p + q + r),
            1e-9,
        )?;
    }
    Ok("MAF exact on 100 traces; KF [0.666667, 0.875]; variance fixed point".into())
}

/// Exhaustive suppression oracle: among all subsets of candidates that keep
/// pairwise spacing, pick the one that is lexicographically greatest in
/// amplitude-then-time priority order.
fn peaks_oracle(x: &[f64], threshold: f64, min_distance: usize) -> Vec<usize> {
    let mut cands = Vec::new();
    for i in 0..x.len() {
        if x[i] < threshold || (i > 0 && x[i - 1] == x[i]) {
            continue;
        }
        let mut end = i;
        while end + 1 < x.len() && x[end + 1] == x[i] {
            end += 1;
        }
        let left_ok = i == 0 || x[i - 1] < x[i];
        let right_ok = end + 1 == x.len() || x[end + 1] < x[i];
        if left_ok && right_ok {
            cands.push(i);
        }
    }
    cands.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap().then(a.cmp(&b)));
    let k = cands.len();
    let mut best: Option<u64> = None;
    for mask in 0u64..(1u64 << k) {
        let chosen: Vec<usize> = (0..k)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| cands[b])
            .collect();
        let valid = chosen.iter().enumerate().all(|(i, &a)| {
            chosen[i + 1..]
                .iter()
                .all(|&b| a.abs_diff(b) >= min_distance)
        });
        if !valid {
            continue;
        }
        // Bit-reverse so priority 0 is the most significant position.
        let key = (0..k).fold(0u64, |acc, b| (acc << 1) | (mask >> b & 1));
        if best.is_none_or(|bk| key > bk) {
            best = Some(key);
        }
    }
    let key = best.unwrap_or(0);
    let mut out: Vec<usize> = (0..k)
        .filter(|b| key >> (k - 1 - b) & 1 == 1)
        .map(|b| cands[b])
        .collect();
    out.sort_unstable();
    out
}

fn max_matching(truth: &[f64], det: &[f64], tol: f64, i: usize, used: &mut Vec<bool>) -> usize {
    if i == truth.len() {
        return 0;
    }
    let mut best = max_matching(truth, det, tol, i + 1, used);
    for j in 0..det.len() {
        if !used[j] && (det[j] - truth[i]).abs() <= tol {
            used[j] = true;
            best = best.max(1 + max_matching(truth, det, tol, i + 1, used));
            used[j] = false;
        }
    }
    best
}

fn c8_peak_and_matching_oracles() -> Outcome {
    let mut rng = SimRng::new(8, 100);
    for case in 0..200 {
        let len = 1 + (rng.uniform() * 30.0) as usize;
        // Coarse levels make plateaus and ties common.
        let x: Vec<f64> = (0..len).map(|_| (rng.uniform() * 6.0).floor()).collect();
        let threshold = (rng.uniform() * 4.0).floor();
        let md = 1 + (rng.uniform() * 6.0) as usize;
        let got = detect_peak_indices(&x, &PeakDetectParams::new(threshold, md).unwrap());
        let want = peaks_oracle(&x, threshold, md);
        ensure(got == want, || {
            format!("detect case {case}: x={x:?} thr={threshold} md={md}: {got:?} != {want:?}")
        })?;
    }

    let mut instances = 0;
    for case in 0..2000 {
        let tol = 0.1 + rng.uniform() * 0.9;
        let n_truth = (rng.uniform() * 9.0) as usize;
        let mut mids = Vec::with_capacity(n_truth);
        let mut t = 1.0;
        for _ in 0..n_truth {
            t += 2.0 * tol + rng.uniform() * 2.0;
            mids.push(t);
        }
        let n_det = (rng.uniform() * 9.0) as usize;
        let mut det: Vec<f64> = (0..n_det).map(|_| rng.uniform() * (t + 2.0)).collect();
        det.sort_by(f64::total_cmp);
        det.dedup();
        let truth = InjectionSchedule::from_events(
            mids.iter()
                .map(|&m| Injection {
                    start: m - 0.05,
                    duration: 0.1,
                    dose: 1.0,
                })
                .collect(),
        )
        .unwrap();
        let peaks = PeakSet::new(
            det.iter()
                .map(|&time| Peak {
                    time,
                    amplitude: 1.0,
                })
                .collect(),
        )
        .unwrap();
        let m = match_peaks(&peaks, &truth, tol).unwrap();
        let truth_mids: Vec<f64> = truth.events().iter().map(Injection::midpoint).collect();
        let best = max_matching(&truth_mids, &det, tol, 0, &mut vec![false; det.len()]);
        ensure(m.tp == best, || {
            format!("match case {case}: greedy {} != optimum {best}", m.tp)
        })?;
        instances += 1;
    }
    Ok(format!(
        "200 peak traces and {instances} matching instances agree"
    ))
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn c9_determinism() -> Outcome {
    let cfg = paper_like()?;
    let a = TempDir::new().map_err(|e| e.to_string())?;
    let b = TempDir::new().map_err(|e| e.to_string())?;
    pipeline::run(&cfg, a.path()).map_err(|e| e.to_string())?;
    pipeline::run(&cfg, b.path()).map_err(|e| e.to_string())?;
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    ensure(!ta.is_empty() && ta == tb, || "output trees differ".into())?;

    let mut reseeded = cfg.clone();
    reseeded.channel.rng_seed += 1;
    let c = TempDir::new().map_err(|e| e.to_string())?;
    pipeline::run(&reseeded, c.path()).map_err(|e| e.to_string())?;
    let tc = read_tree(c.path());
    ensure(tc["raw/trace.csv"] != ta["raw/trace.csv"], || {
        "changing the seed left the raw trace unchanged".into()
    })?;
    Ok(format!(
        "{} files byte-identical; new seed changes raw trace",
        ta.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 rate formulas", c1_rate_formulas),
        ("2 channel ceiling", c2_channel_ceiling),
        ("3 flow derivation", c3_flow_velocity),
        ("4 table consistency", c4_table_consistency),
        ("5 noiseless round trip", c5_noiseless_round_trip),
        ("6 calibrated ordering", c6_calibrated_ordering),
        ("7 filter oracles", c7_filter_oracles),
        ("8 peak/matching oracles", c8_peak_and_matching_oracles),
        ("9 determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
