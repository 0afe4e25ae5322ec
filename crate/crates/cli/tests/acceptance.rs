//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each, and exits nonzero if any fails. Pass criterion numbers
//! as arguments to run a subset (`cargo test --test acceptance -- 3 5`).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use clockvmc::basis::{enumerate, index_to_spins, spins_to_index};
use clockvmc::hamiltonian::{ClockHamiltonian, TfimParams};
use clockvmc::models::{init_with_stddev, ModelKind, ModelSpec, Wavefunction};
use clockvmc::oracle;
use clockvmc::sampling::{ar_direct_sample, derive_seed, metropolis_sample, SamplerConfig};
use clockvmc::vmc::{exact_energy_gradient, local_energy};
use clockvmc::{Hamiltonian, Model};
use num_complex::Complex;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type C = Complex<f64>;
type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

const BIN: &str = env!("CARGO_BIN_EXE_clockvmc");

fn clock(n_s: usize, n_t: usize) -> Hamiltonian {
    ClockHamiltonian::new(TfimParams::with_couplings(n_s, 0.25, 1.0), (1 << n_t) - 1, 3.0).unwrap()
}

fn spec(kind: ModelKind, n: usize) -> ModelSpec {
    match kind {
        ModelKind::Rbm => ModelSpec::rbm(n, 2),
        ModelKind::MpRbm => ModelSpec::mp_rbm(n, 2),
        ModelKind::Ar => ModelSpec::ar(n, 2, 3),
        ModelKind::ArSplit => ModelSpec::ar_split(n, 2, 3),
    }
}

fn model(kind: ModelKind, n: usize, seed: u64, std: f64) -> Model {
    init_with_stddev(&spec(kind, n), seed, std).unwrap()
}

/// Uniform draw in `[lo, hi)` keyed by `(seed, k)`.
fn uniform(seed: u64, k: u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (derive_seed(seed, k) >> 11) as f64 / (1u64 << 53) as f64
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn probabilities(m: &Model) -> Vec<f64> {
    let logs: Vec<f64> = enumerate(m.n_spins()).map(|s| 2.0 * m.log_psi(&s).re).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn ground_energy_and_history_state() -> Outcome {
    let start = Instant::now();
    let h = clock(5, 4);
    let (e0, ground) = oracle::ground_state(&h).map_err(|e| e.to_string())?;
    let history = oracle::build_history_state(&h, &oracle::all_up_physical(5)).map_err(|e| e.to_string())?;
    let fidelity = 1.0 - oracle::infidelity(&ground, &history).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        e0.abs() <= 1e-9 && fidelity >= 1.0 - 1e-9 && elapsed < Duration::from_secs(30),
        format!("E0 = {e0:.3e}, fidelity = 1 - {:.3e}, {:.1} s", 1.0 - fidelity, elapsed.as_secs_f64()),
    )
}

fn diagnostic_trends() -> Outcome {
    let start = Instant::now();
    let mut rows = Vec::new();
    for n_t in 1..=4 {
        let r = oracle::diagnose(&clock(9 - n_t, n_t)).map_err(|e| e.to_string())?;
        rows.push((*r.renyi2_per_spin.last().unwrap(), r.gini, r.coverage_ratio));
    }
    let elapsed = start.elapsed();
    let increasing = |f: fn(&(f64, f64, f64)) -> f64| rows.windows(2).all(|w| f(&w[1]) > f(&w[0]));
    let decreasing = |f: fn(&(f64, f64, f64)) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let table: Vec<String> = rows.iter().map(|(r, g, c)| format!("({r:.3}, {g:.3}, {c:.3})")).collect();
    check(
        increasing(|r| r.0) && decreasing(|r| r.1) && increasing(|r| r.2) && elapsed < Duration::from_secs(120),
        format!("(renyi2, gini, coverage) over N_T=1..4: {}, {:.1} s", table.join(" "), elapsed.as_secs_f64()),
    )
}

fn local_energy_matches_rayleigh_quotient() -> Outcome {
    let mut worst = 0.0f64;
    for kind in ModelKind::ALL {
        for i in 0..20u64 {
            let n_t = 1 + (i % 4) as usize;
            let n_s = 1 + (derive_seed(i, 1) % (8 - n_t as u64 + 1)) as usize;
            let h = clock(n_s, n_t);
            let m = model(kind, n_s + n_t, i, uniform(i, 2, 0.05, 0.8));
            let state = oracle::model_state(&m, h.layout()).map_err(|e| e.to_string())?;
            let rq = oracle::rayleigh_quotient(&h, &state).map_err(|e| e.to_string())?;
            let p = probabilities(&m);
            let mut mean = 0.0;
            for (k, s) in enumerate(n_s + n_t).enumerate() {
                let e = local_energy(&m, &h, &s).ok_or("local energy undefined on a nonzero amplitude")?;
                mean += p[k] * e.re;
            }
            worst = worst.max((mean - rq).abs());
        }
    }
    check(worst <= 1e-10, format!("max |mean E_loc - Rayleigh quotient| = {worst:.2e} over 80 instances"))
}

fn gradients_match_finite_differences() -> Outcome {
    let h = clock(3, 2);
    let mut worst_log = 0.0f64;
    let mut worst_grad = 0.0f64;
    for kind in ModelKind::ALL {
        for case in 0..50u64 {
            let seed = derive_seed(kind as u64, case);
            let std = uniform(seed, 0, 0.05, 0.5);
            // Log-derivatives on a random configuration of a random size.
            let n = 2 + (seed % 5) as usize;
            let mut m = model(kind, n, seed, std);
            let mut spins = vec![0i8; n];
            index_to_spins((derive_seed(seed, 1) % (1 << n)) as usize, &mut spins);
            let mut analytic = vec![C::new(0.0, 0.0); m.n_params()];
            m.log_derivatives(&spins, &mut analytic);
            let base = m.parameters();
            let step = 1e-5;
            let mut fd = Vec::with_capacity(base.len());
            for k in 0..base.len() {
                let mut p = base.clone();
                p[k] += step;
                m.set_parameters(&p).unwrap();
                let up = m.log_psi(&spins);
                p[k] -= 2.0 * step;
                m.set_parameters(&p).unwrap();
                let down = m.log_psi(&spins);
                let mut d = up - down;
                d.im -= (d.im / (2.0 * std::f64::consts::PI)).round() * 2.0 * std::f64::consts::PI;
                fd.push(d / (2.0 * step));
            }
            let flat = |v: &[C]| v.iter().flat_map(|c| [c.re, c.im]).collect::<Vec<_>>();
            worst_log = worst_log.max(rel_err(&flat(&analytic), &flat(&fd)));

            // Exhaustive energy gradient on the 5-spin clock problem.
            let mut m = model(kind, 5, seed, std);
            let (_, grad) = exact_energy_gradient(&m, &h).map_err(|e| e.to_string())?;
            let base = m.parameters();
            let mut fd = Vec::with_capacity(base.len());
            for k in 0..base.len() {
                let mut p = base.clone();
                p[k] += step;
                m.set_parameters(&p).unwrap();
                let up = oracle::exact_variational_energy(&m, &h).map_err(|e| e.to_string())?;
                p[k] -= 2.0 * step;
                m.set_parameters(&p).unwrap();
                let down = oracle::exact_variational_energy(&m, &h).map_err(|e| e.to_string())?;
                fd.push((up - down) / (2.0 * step));
            }
            worst_grad = worst_grad.max(rel_err(&grad, &fd));
        }
    }
    check(
        worst_log <= 1e-6 && worst_grad <= 1e-5,
        format!("max relative error: log-derivatives {worst_log:.2e}, energy gradient {worst_grad:.2e} (200 cases each)"),
    )
}

fn sampler_fidelity() -> Outcome {
    let n = 6;
    let mut tv_worst = 0.0f64;
    for (i, kind) in [ModelKind::Rbm, ModelKind::MpRbm].into_iter().enumerate() {
        let m = model(kind, n, 40 + i as u64, 0.5);
        let p = probabilities(&m);
        let batch = metropolis_sample(&m, &SamplerConfig::new(1_000_000, 16, 7)).map_err(|e| e.to_string())?;
        let mut counts = vec![0usize; 1 << n];
        batch.configurations().for_each(|s| counts[spins_to_index(s)] += 1);
        let tv = 0.5 * counts.iter().zip(&p).map(|(&c, q)| (c as f64 / batch.len() as f64 - q).abs()).sum::<f64>();
        tv_worst = tv_worst.max(tv);
    }

    let mut p_min = 1.0f64;
    let mut sum_err = 0.0f64;
    for (i, kind) in [ModelKind::Ar, ModelKind::ArSplit].into_iter().enumerate() {
        let m = model(kind, n, 50 + i as u64, 0.5);
        let total: f64 = enumerate(n).map(|s| (2.0 * m.log_psi(&s).re).exp()).sum();
        sum_err = sum_err.max((total - 1.0).abs());
        let p = probabilities(&m);
        let n_samples = 100_000;
        let batch = ar_direct_sample(m.as_autoregressive().unwrap(), n_samples, 9).map_err(|e| e.to_string())?;
        let mut counts = vec![0usize; 1 << n];
        batch.configurations().for_each(|s| counts[spins_to_index(s)] += 1);
        // Bins with fewer than 5 expected counts are pooled.
        let (mut stat, mut bins, mut pooled_obs, mut pooled_exp) = (0.0, 0usize, 0.0, 0.0);
        for (&c, q) in counts.iter().zip(&p) {
            let expected = q * n_samples as f64;
            if expected < 5.0 {
                pooled_obs += c as f64;
                pooled_exp += expected;
            } else {
                stat += (c as f64 - expected).powi(2) / expected;
                bins += 1;
            }
        }
        if pooled_exp > 0.0 {
            stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
            bins += 1;
        }
        let p_value = ChiSquared::new((bins - 1) as f64).unwrap().sf(stat);
        p_min = p_min.min(p_value);
    }
    check(
        tv_worst <= 0.02 && p_min >= 1e-3 && sum_err <= 1e-10,
        format!("Metropolis TV {tv_worst:.4}; AR chi-square min p = {p_min:.3}; AR |sum P - 1| = {sum_err:.1e}"),
    )
}

fn cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(BIN).args(args).current_dir(dir).env_remove("CLOCKVMC_SEED").output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("clockvmc {args:?} exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

fn summary_field(path: &Path, field: &str) -> Result<f64, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v["data"][field].as_f64().ok_or_else(|| format!("{field} missing from {}", path.display()))
}

/// Data rows of an emitted CSV keyed by column name.
fn read_rows(path: &Path) -> Result<Vec<std::collections::HashMap<String, String>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<&str> = lines.next().ok_or("empty csv")?.split(',').collect();
    Ok(lines.map(|l| cols.iter().map(|c| c.to_string()).zip(l.split(',').map(String::from)).collect()).collect())
}

fn num(row: &std::collections::HashMap<String, String>, col: &str) -> Result<f64, String> {
    row.get(col).and_then(|v| v.parse().ok()).ok_or_else(|| format!("column {col} missing or empty"))
}

fn infidelity_training(work: &Path) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (ansatz, extra) in [("mp-rbm", "alpha = 4"), ("ar-split", "n_layers = 2\nn_hidden = 8")] {
        let cfg = work.join(format!("{ansatz}.toml"));
        std::fs::write(&cfg, format!("[problem]\nn_s = 5\nn_t = 4\n[model]\n{extra}\n")).unwrap();
        let out = format!("infid_{ansatz}");
        let start = Instant::now();
        cli(&["train", "--mode", "infidelity", "--ansatz", ansatz, "--config", cfg.to_str().unwrap(), "--out", &out], work)?;
        let elapsed = start.elapsed();
        let f = summary_field(&work.join(&out).join("summary.json"), "final_infidelity")?;
        ok &= f <= 1e-2 && elapsed < Duration::from_secs(1800);
        parts.push(format!("{ansatz} {f:.2e} ({:.0} s)", elapsed.as_secs_f64()));
    }
    check(ok, parts.join(", "))
}

fn trainability_trend(work: &Path) -> Outcome {
    let start = Instant::now();
    let cfg = work.join("tune.toml");
    std::fs::write(&cfg, "[tune]\nn_trials = 30\nn_t_values = [1, 2, 3, 4]\ntotal_spins = 9\n").unwrap();
    cli(&["tune", "--ansatz", "rbm", "--config", cfg.to_str().unwrap(), "--out", "tune"], work)?;
    cli(&["report", "--config", cfg.to_str().unwrap(), "--out", "tune"], work)?;
    let rows = read_rows(&work.join("tune/best10_rbm.csv"))?;
    let mut best = Vec::new();
    for n_t in 1..=4 {
        let row = rows
            .iter()
            .find(|r| r["n_t"] == n_t.to_string() && r["rank"] == "1")
            .ok_or_else(|| format!("no completed trial at N_T={n_t}"))?;
        best.push(num(row, "infidelity")?);
    }
    let monotone = best.windows(2).all(|w| w[1] >= w[0]);
    let list: Vec<String> = best.iter().map(|f| format!("{f:.3}")).collect();
    check(
        best[0] <= 0.06 && monotone,
        format!("best-trial infidelity over N_T=1..4: [{}], {:.0} s", list.join(", "), start.elapsed().as_secs_f64()),
    )
}

fn observable_consistency(work: &Path) -> Outcome {
    cli(&["train", "--ansatz", "rbm", "--n-s", "5", "--n-t", "1", "--out", "observable"], work)?;
    let rows = read_rows(&work.join("observable/magnetization.csv"))?;
    let mut worst_z = 0.0f64;
    for r in &rows {
        let diff = (num(r, "sampled")? - num(r, "exact_variational")?).abs();
        let se = num(r, "sampled_stderr")?;
        let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    let ed0 = num(&rows[0], "ed")?;
    check(
        worst_z <= 3.0 && (ed0 - 1.0).abs() <= 1e-9,
        format!("max |sampled - exact| / SE = {worst_z:.2} over {} steps; ED m(0) - 1 = {:.1e}", rows.len(), ed0 - 1.0),
    )
}

/// Every output file except for header lines, in path order.
fn bodies(dir: &Path) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let text = std::fs::read_to_string(&p).unwrap();
                let body = if p.extension().is_some_and(|x| x == "json") {
                    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                    v["data"].to_string()
                } else {
                    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
                };
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), body));
            }
        }
    }
    out.sort();
    out
}

fn determinism(work: &Path) -> Outcome {
    let cfg = work.join("det.toml");
    std::fs::write(
        &cfg,
        "seed = 11\n[problem]\nn_s = 3\nn_t = 2\n[model]\nalpha = 1\n\
         [train]\niterations_per_stage = 4\nschedule_stages = 3\nn_samples = 128\nn_chains = 4\n\
         [infidelity]\nn_iterations = 40\n\
         [tune]\nn_trials = 4\nn_t_values = [1, 2]\ntotal_spins = 5\niterations_per_stage = 2\nschedule_stages = 2\n\
         [diagnose]\nn_s_values = [2, 3]\nn_t_values = [1, 2]\n\
         [evolve]\nn_samples = 500\nn_chains = 4\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    for run in ["det_a", "det_b"] {
        let train = format!("{run}/train");
        let infid = format!("{run}/infid");
        cli(&["diagnose", "--config", c, "--out", run], work)?;
        cli(&["train", "--config", c, "--out", &train], work)?;
        cli(&["evolve", "--config", c, "--out", &train], work)?;
        cli(&["train", "--mode", "infidelity", "--ansatz", "ar", "--config", c, "--out", &infid], work)?;
        cli(&["tune", "--config", c, "--out", run], work)?;
        cli(&["tune", "--sampler", "random", "--ansatz", "mp-rbm", "--config", c, "--out", run], work)?;
        cli(&["report", "--config", c, "--out", run], work)?;
    }
    let a = bodies(&work.join("det_a"));
    let b = bodies(&work.join("det_b"));
    let names: Vec<_> = a.iter().map(|(p, _)| p.clone()).collect();
    if names != b.iter().map(|(p, _)| p.clone()).collect::<Vec<_>>() {
        return Err("the two runs wrote different file sets".into());
    }
    let differing: Vec<String> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.display().to_string()).collect();
    check(differing.is_empty(), format!("{} files compared; differing: {differing:?}", a.len()))
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let work = tempfile::tempdir().unwrap();
    let w = work.path();
    let criteria: Vec<Criterion> = vec![
        ("zero ground energy and history-state identity", Box::new(ground_energy_and_history_state)),
        ("diagnostic trends along N_S+N_T=9", Box::new(diagnostic_trends)),
        ("local-energy mean equals Rayleigh quotient", Box::new(local_energy_matches_rayleigh_quotient)),
        ("gradients match finite differences", Box::new(gradients_match_finite_differences)),
        ("sampler fidelity", Box::new(sampler_fidelity)),
        ("direct infidelity training", Box::new(|| infidelity_training(w))),
        ("VMC trainability trend", Box::new(|| trainability_trend(w))),
        ("observable consistency", Box::new(|| observable_consistency(w))),
        ("determinism", Box::new(|| determinism(w))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {number} ({name}): {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {number} ({name}): {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
