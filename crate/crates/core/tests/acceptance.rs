//! Acceptance checks, one line per criterion. Runs with its own harness so the
//! summary is printed even when the output of passing tests would be captured.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use anc_chain::experiment::{self, ExperimentConfig};
use anc_chain::gains::{modified_gains, DelayTaps};
use anc_chain::optimize::{optimize, optimize_sequential_equal_gains};
use anc_chain::rate::{evaluate, exact_rate, tangent_bounds, zeroth_rate};
use anc_chain::simulate::{impulse_response, Origin};
use anc_chain::topology::{count_relay_paths, count_source_paths, enumerate_paths, relay_delay_range, source_delay_range};
use anc_chain::{Budget, ChainNetwork, Method, NormalizedPoint, Objective, ScalingVector, SpectralRatio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_net(rng: &mut ChaCha8Rng, n: usize, k: usize, ps: f64) -> ChainNetwork {
    ChainNetwork::from_gain_fn(n, k, 1.0, ps, vec![ps; n], |_, _| rng.sample(StandardNormal)).unwrap()
}

fn random_topology(rng: &mut ChaCha8Rng, max_n: usize) -> (usize, usize) {
    let n = rng.gen_range(1..=max_n);
    (n, rng.gen_range(1..=n + 1))
}

fn random_beta(rng: &mut ChaCha8Rng, net: &ChainNetwork) -> ScalingVector {
    let theta = (0..net.n_relays()).map(|_| rng.gen::<f64>()).collect();
    NormalizedPoint::new(theta).unwrap().to_scaling(net).unwrap()
}

fn random_ps(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-1.0..3.0))
}

// |Σ h_d e^{-idλ}|² by direct complex summation.
fn transfer_power(taps: &DelayTaps, lam: f64) -> f64 {
    let (re, im) = taps
        .iter()
        .fold((0.0, 0.0), |(re, im), (d, h)| (re + h * (d as f64 * lam).cos(), im - h * (d as f64 * lam).sin()));
    re * re + im * im
}

fn criterion_1() -> Check {
    let mut classes = 0;
    for n in 1..=8 {
        for k in 1..=n + 1 {
            let net = ChainNetwork::new(n, k, 1.0, 1.0, vec![1.0; n]).unwrap();
            let dest = net.destination();
            let paths = enumerate_paths(&net, 0, dest).unwrap();
            for d in 0..=n + 1 {
                let counted = paths.get(&d).map_or(0, |v| v.len() as u64);
                let formula = count_source_paths(n, k, d);
                ensure(formula == counted, || format!("source ({n},{k}) d={d}: {formula} vs {counted}"))?;
                ensure(counted == 0 || source_delay_range(n, k).contains(&d), || format!("range ({n},{k}) d={d}"))?;
                classes += 1;
            }
            for m in 1..=n {
                let paths = enumerate_paths(&net, m, dest).unwrap();
                for d in 0..=n + 2 {
                    let counted = paths.get(&d).map_or(0, |v| v.len() as u64);
                    let formula = count_relay_paths(n, k, m, d);
                    ensure(formula == counted, || format!("relay ({n},{k}) m={m} d={d}: {formula} vs {counted}"))?;
                    ensure(counted == 0 || relay_delay_range(n, k, m).contains(&d), || {
                        format!("range ({n},{k}) m={m} d={d}")
                    })?;
                    classes += 1;
                }
            }
        }
    }
    Ok(format!("{classes} delay classes agree exactly"))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (n, k) = random_topology(&mut rng, 6);
        let ps = random_ps(&mut rng);
        let net = random_net(&mut rng, n, k, ps);
        let beta = random_beta(&mut rng, &net);
        let profile = modified_gains(&net, &beta, net.destination()).unwrap();
        let origins = std::iter::once((Origin::Source, &profile.source))
            .chain((1..=n).map(|m| (Origin::Relay(m), profile.noise_from(m))));
        for (origin, taps) in origins {
            let sim = impulse_response(&net, &beta, origin).unwrap();
            for d in 0..=n + 2 {
                let a = sim.get(&d).copied().unwrap_or(0.0);
                let b = taps.get(d);
                worst = worst.max((a - b).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max tap error {worst:e}"))?;
    Ok(format!("max tap error {worst:.1e} over 200 instances"))
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (n, k) = random_topology(&mut rng, 6);
        let ps = random_ps(&mut rng);
        let net = random_net(&mut rng, n, k, ps);
        let beta = random_beta(&mut rng, &net);
        let profile = modified_gains(&net, &beta, net.destination()).unwrap();
        let sr = SpectralRatio::build(&net, &beta).unwrap();
        // Error is measured against the largest value the sum can take, (Σ|h|)².
        let scale = |taps: &[&DelayTaps]| {
            taps.iter().map(|t| t.iter().map(|(_, h)| h.abs()).sum::<f64>().powi(2)).sum::<f64>()
        };
        let a_scale = scale(&[&profile.source]).max(f64::MIN_POSITIVE);
        let noise: Vec<&DelayTaps> = profile.noise.iter().collect();
        let b_scale = 1.0 + scale(&noise);
        for _ in 0..64 {
            let lam = rng.gen_range(0.0..2.0 * PI);
            let u = lam.cos();
            let a_direct = transfer_power(&profile.source, lam);
            let b_direct = 1.0 + profile.noise.iter().map(|t| transfer_power(t, lam)).sum::<f64>();
            worst = worst.max((sr.numerator().eval(u) - a_direct).abs() / a_scale);
            worst = worst.max((sr.denominator().eval(u) - b_direct).abs() / b_scale);
        }
    }
    ensure(worst <= 1e-10, || format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e} over 200 x 64 frequencies"))
}

fn trapezoid_rate(net: &ChainNetwork, beta: &ScalingVector, points: usize) -> f64 {
    let p = modified_gains(net, beta, net.destination()).unwrap();
    let integrand = |lam: f64| {
        let noise: f64 = p.noise.iter().map(|t| transfer_power(t, lam)).sum();
        (1.0 + net.snr_scale() * transfer_power(&p.source, lam) / (1.0 + noise)).log2()
    };
    let h = PI / points as f64;
    let inner: f64 = (1..points).map(|j| integrand(j as f64 * h)).sum();
    h * (inner + 0.5 * (integrand(0.0) + integrand(PI))) / (2.0 * PI)
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_flat = 0.0f64;
    for _ in 0..50 {
        let ps = random_ps(&mut rng);
        let net = random_net(&mut rng, 1, 1, ps);
        let beta = random_beta(&mut rng, &net);
        let (hs1, h1t, b) = (net.gain(0, 1).unwrap(), net.gain(1, 2).unwrap(), beta.get(1));
        let f = ps / net.noise_var() * (hs1 * b * h1t).powi(2) / (1.0 + (b * h1t).powi(2));
        let want = 0.5 * (1.0 + f).log2();
        let sr = SpectralRatio::build(&net, &beta).unwrap();
        let r = evaluate(&sr, 1e-12).unwrap();
        for got in [r.exact, r.zeroth, r.upper, r.lower] {
            worst_flat = worst_flat.max((got - want).abs());
        }
    }
    ensure(worst_flat <= 1e-9, || format!("(1,1) closed form off by {worst_flat:e}"))?;
    let mut worst_trap = 0.0f64;
    for _ in 0..20 {
        let (n, k) = random_topology(&mut rng, 4);
        let ps = random_ps(&mut rng);
        let net = random_net(&mut rng, n, k, ps);
        let beta = random_beta(&mut rng, &net);
        let sr = SpectralRatio::build(&net, &beta).unwrap();
        let quad = exact_rate(&sr, 1e-12).unwrap();
        worst_trap = worst_trap.max((quad - trapezoid_rate(&net, &beta, 1_000_000)).abs());
    }
    ensure(worst_trap <= 1e-7, || format!("trapezoid mismatch {worst_trap:e}"))?;
    Ok(format!("(1,1) error {worst_flat:.1e}; trapezoid error {worst_trap:.1e} on 20 instances"))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut min_slack = f64::INFINITY;
    for i in 0..1000 {
        let (n, k) = random_topology(&mut rng, 4);
        let ps = random_ps(&mut rng);
        let net = random_net(&mut rng, n, k, ps);
        let beta = random_beta(&mut rng, &net);
        let r = evaluate(&SpectralRatio::build(&net, &beta).unwrap(), 1e-12).unwrap();
        ensure(r.lower <= r.zeroth && r.zeroth <= r.upper, || format!("instance {i}: chord outside bounds {r:?}"))?;
        ensure(r.lower - 1e-9 <= r.exact && r.exact <= r.upper + 1e-9, || {
            format!("instance {i}: exact outside bounds {r:?}")
        })?;
        min_slack = min_slack.min((r.exact - r.lower).min(r.upper - r.exact));
    }
    Ok(format!("1000 instances sandwiched (min slack {min_slack:.1e})"))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_z, mut worst_b) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let ps = random_ps(&mut rng);
        let net = random_net(&mut rng, 2, 2, ps);
        let beta = random_beta(&mut rng, &net);
        let g = |a, b| net.gain(a, b).unwrap();
        let (b1, b2) = (beta.get(1), beta.get(2));
        let h1 = g(0, 1) * b1 * g(1, 3) + g(0, 2) * b2 * g(2, 3);
        let h2 = g(0, 1) * b1 * g(1, 2) * b2 * g(2, 3);
        let h11 = b1 * g(1, 3);
        let h12 = b1 * g(1, 2) * b2 * g(2, 3);
        let h21 = b2 * g(2, 3);
        let snr = ps / net.noise_var();
        let (a0, a1) = (h1 * h1 + h2 * h2, 2.0 * h1 * h2);
        let (bb0, bb1) = (1.0 + h11 * h11 + h12 * h12 + h21 * h21, 2.0 * h11 * h12);
        let (c0, c1) = (bb0 + snr * a0, bb1 + snr * a1);
        let zeroth = 0.25 * ((c0 * c0 - c1 * c1) / (bb0 * bb0 - bb1 * bb1)).log2();
        let s = 0.5 * ((c0 + c1) / (c0 - c1) * (bb0 - bb1) / (bb0 + bb1)).log2();

        let sr = SpectralRatio::build(&net, &beta).unwrap();
        let z = zeroth_rate(&sr);
        worst_z = worst_z.max((z.rate - zeroth).abs()).max((z.slope - s).abs());
        let t = tangent_bounds(&sr);
        let at = |u: f64| 0.5 * (((c0 + c1 * u) / (bb0 + bb1 * u)).log2() - s * u);
        worst_b = worst_b.max((t.upper - at(t.u_max)).abs()).max((t.lower - at(t.u_min)).abs());
    }
    ensure(worst_z <= 1e-12, || format!("zeroth closed form off by {worst_z:e}"))?;
    ensure(worst_b <= 1e-12, || format!("tangent bounds off by {worst_b:e}"))?;
    Ok(format!("zeroth error {worst_z:.1e}, bound error {worst_b:.1e} on 100 instances"))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let budget = Budget::default();
    let mut worst_gap = f64::NEG_INFINITY;
    for i in 0..100 {
        let ps = 10f64.powf(rng.gen_range(0.0..3.0));
        let net = random_net(&mut rng, 2, 2, ps);
        let ms = Method::MultistartAscent { starts: 8, seed: i };
        let run = |o, m: &Method| optimize(&net, o, m, budget).unwrap().value;
        let exact = run(Objective::Exact, &ms);
        let grid = run(Objective::Exact, &Method::Grid { resolution: 200 });
        worst_gap = worst_gap.max(grid - exact);
        ensure(exact >= grid - 1e-3, || format!("instance {i}: multistart {exact} < grid {grid}"))?;
        let (upper, lower) = (run(Objective::Upper, &ms), run(Objective::Lower, &ms));
        // Same 1e-9 allowance for quadrature round-off as in the sandwich check.
        ensure(upper + 1e-9 >= exact && exact >= lower - 1e-9, || {
            format!("instance {i}: order broken upper {upper} exact {exact} lower {lower}")
        })?;
    }
    Ok(format!("max grid(200) excess over multistart {worst_gap:.1e}; order holds on 100 instances"))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let budget = Budget::default();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let ps = [1.0, 10.0, 100.0][i % 3];
        let per_node: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let net = ChainNetwork::from_gain_fn(4, 2, 1.0, ps, vec![ps; 4], |j, _| per_node[j]).unwrap();
        let seq = optimize_sequential_equal_gains(&net, budget).unwrap().value;
        let ms = optimize(&net, Objective::Zeroth, &Method::MultistartAscent { starts: 64, seed: i as u64 }, budget)
            .unwrap()
            .value;
        worst = worst.max((seq - ms).abs());
        ensure((seq - ms).abs() <= 1e-3, || format!("instance {i}: sequential {seq} vs multistart {ms}"))?;
    }
    Ok(format!("max |sequential - multistart(64)| = {worst:.1e} on 50 instances"))
}

fn sweep_config(n: usize, k: usize) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"chain": {{"n": {n}, "k": {k}}}, "ps_db": {{"start": 0, "stop": 30, "step": 5}},
            "instances": 100, "seed": 2024,
            "optimizer": {{"method": "multistart_ascent", "starts": 8}}}}"#
    ))
    .unwrap()
}

fn criterion_9() -> Check {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (n, k) in [(2, 2), (3, 2), (3, 3)] {
        let table = experiment::run_sweep(&sweep_config(n, k)).unwrap();
        let gaps: Vec<f64> = table.rows.iter().map(|r| r.gap_ub_lb.unwrap()).collect();
        let zgaps: Vec<f64> = table.rows.iter().map(|r| r.gap_zeroth_exact.unwrap()).collect();
        for r in &table.rows {
            println!(
                "    ({n},{k}) {:>4} dB  exact {:.4}  zeroth {:.4}  ub {:.4}  lb {:.4}  ub-lb {:.4}  |z-e| {:.4}",
                r.ps_db,
                r.exact_mean.unwrap(),
                r.zeroth_mean.unwrap(),
                r.ub_mean.unwrap(),
                r.lb_mean.unwrap(),
                r.gap_ub_lb.unwrap(),
                r.gap_zeroth_exact.unwrap()
            );
        }
        let max_gap = gaps.iter().copied().fold(0.0, f64::max);
        let max_z = zgaps.iter().copied().fold(0.0, f64::max);
        if (n, k) == (2, 2) {
            summary.push(format!("(2,2) max ub-lb {max_gap:.3} (envelope 0.08, reported 0.04)"));
            if max_gap > 0.08 {
                failures.push(format!("(2,2) ub-lb {max_gap:.3} > 0.08"));
            }
        } else {
            summary.push(format!(
                "({n},{k}) max |z-e| {max_z:.3} (envelope 0.10, reported 0.05), max ub-lb {max_gap:.3} (envelope 0.25, reported 0.15)"
            ));
            if max_z > 0.10 {
                failures.push(format!("({n},{k}) |z-e| {max_z:.3} > 0.10"));
            }
            if max_gap > 0.25 {
                failures.push(format!("({n},{k}) ub-lb {max_gap:.3} > 0.25"));
            }
        }
    }
    let summary = summary.join("; ");
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join(", ")))
    }
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Vec<u8> {
        let mut cfg = ExperimentConfig::from_json(
            r#"{"chain": {"n": 3, "k": 2}, "ps_db": {"start": 0, "stop": 20, "step": 10},
                "instances": 4, "seed": 99, "optimizer": {"method": "multistart_ascent", "starts": 2}}"#,
        )
        .unwrap();
        cfg.output.csv = Some(dir.path().join(name));
        let table = experiment::run_sweep(&cfg).unwrap();
        experiment::emit_outputs(&table, &cfg).unwrap();
        std::fs::read(dir.path().join(name)).unwrap()
    };
    let (a, b) = (run("first.csv"), run("second.csv"));
    ensure(a == b, || "CSV bytes differ between runs".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("path counts equal enumeration", criterion_1),
        ("impulse response equals modified gains", criterion_2),
        ("spectral polynomial identity", criterion_3),
        ("quadrature correctness", criterion_4),
        ("bound sandwich", criterion_5),
        ("(2,2) closed forms", criterion_6),
        ("optimizer soundness", criterion_7),
        ("sequential scheme on equal gains", criterion_8),
        ("power sweep envelopes", criterion_9),
        ("deterministic CSV", criterion_10),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (idx, (name, check)) in criteria.iter().enumerate() {
        let id = idx + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
