//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//!
//! Tolerances, sizes and time limits are pinned here. Timings are wall-clock
//! for the current build profile.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use actol_core::gradients::{finite_diff_check, min_similarity_gap, LossSpec, DEFAULT_FD_STEP};
use actol_core::rng::derive_seed;
use actol_core::{
    check_bridge_statistics, check_lipschitz, check_lower_bound, check_robustness_random, compare_objectives,
    construct_near_optimal, median, ordering_emergence_run, random_shaped_clip, vlo_loss_on_scores, BridgeInterval,
    BridgeStatsConfig, ClipSequence, NamedObjective, Objective, SyntheticClipSpec, TailMode, TnceConfig, TrainConfig,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn lower_bound_holds() -> Outcome {
    let start = Instant::now();
    let clips: Vec<ClipSequence> =
        (0..1000).map(|k| random_shaped_clip(3..=12, 2..=16, 3, derive_seed(101, k)).unwrap()).collect();
    let r = check_lower_bound(&clips, 1.0).unwrap();
    let t = start.elapsed();
    Outcome {
        pass: r.instances == 1000 && r.violations == 0 && within(t, 10.0),
        detail: format!(
            "{} clips, {} violations, min gap {:.3e}, {:.2?} (limit 10 s)",
            r.instances, r.violations, r.worst_slack, t
        ),
    }
}

fn tightness() -> Outcome {
    let start = Instant::now();
    let ts = [0u64, 1, 2, 3];
    let lb = actol_core::objectives::lower_bound_for_timestamps(&ts);
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [1.0, 0.1, 0.01] {
        let loss = vlo_loss_on_scores(&ts, &construct_near_optimal(&ts, eps).unwrap(), 1.0).unwrap();
        ok &= loss < lb + eps;
        parts.push(format!("eps {eps}: excess {:.3e}", loss - lb));
    }
    let t = start.elapsed();
    Outcome { pass: ok && within(t, 1.0), detail: format!("{}, {:.2?} (limit 1 s)", parts.join(", "), t) }
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let (mut vlo, mut bb) = (0.0f64, 0.0f64);
    let mut redraws = 0;
    for k in 0..100 {
        let base = derive_seed(103, k);
        let clip = (0..)
            .map(|a| random_shaped_clip(3..=12, 2..=16, 3, derive_seed(base, a)).unwrap())
            .find(|c| {
                redraws += 1;
                min_similarity_gap(c).unwrap() >= 1e-2
            })
            .unwrap();
        vlo = vlo.max(finite_diff_check(&LossSpec::Vlo { temperature: 1.0 }, &clip, DEFAULT_FD_STEP).unwrap());
        let full = BridgeInterval::full(&clip);
        bb = bb.max(finite_diff_check(&LossSpec::Bb { interval: full }, &clip, DEFAULT_FD_STEP).unwrap());
    }
    let t = start.elapsed();
    Outcome {
        pass: vlo < 1e-5 && bb < 1e-6 && within(t, 30.0),
        detail: format!(
            "100 clips ({} draws), vlo {vlo:.3e} (< 1e-5), bb {bb:.3e} (< 1e-6), step {DEFAULT_FD_STEP}, {t:.2?} (limit 30 s)",
            redraws
        ),
    }
}

fn ordering_emergence() -> Outcome {
    let ts = [0u64, 1, 6, 10, 23, 26, 34, 41, 53, 55];
    assert_eq!(actol_core::objectives::lower_bound_for_timestamps(&ts), 0.0);
    let cfg =
        TrainConfig { learning_rate: 0.01, steps: 5000, lambda: 0.0, temperature: 0.01, ..TrainConfig::default() };
    let mut passed = 0;
    let mut slowest = Duration::ZERO;
    let mut worst_gap: f64 = 0.0;
    for seed in 0..10 {
        let start = Instant::now();
        let out = ordering_emergence_run(&ts, 8, &cfg, seed).unwrap();
        let t = start.elapsed();
        slowest = slowest.max(t);
        worst_gap = worst_gap.max(out.final_gap);
        if out.passes(0.05) && within(t, 60.0) {
            passed += 1;
        }
    }
    Outcome {
        pass: passed >= 9,
        detail: format!(
            "{passed}/10 seeds reach gap < 0.05 with all triples ordered (need 9), worst gap {worst_gap:.4}, \
             tau 0.01, lr 0.01, slowest seed {slowest:.2?} (limit 60 s)"
        ),
    }
}

fn bridge_statistics() -> Outcome {
    let start = Instant::now();
    let r = check_bridge_statistics(&BridgeStatsConfig { samples: 10_000, seed: 105, ..BridgeStatsConfig::default() })
        .unwrap();
    let t = start.elapsed();
    Outcome {
        pass: r.pass && within(t, 5.0),
        detail: format!(
            "10000 draws, endpoints exact, midpoint variance rel. error {:.3e} (< 0.05), mean max z {:.2}, {t:.2?} (limit 5 s)",
            r.measurement("variance_relative_error").unwrap(),
            r.measurement("worst_mean_z").unwrap()
        ),
    }
}

fn robustness() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut parts = Vec::new();
    for (k, delta) in [0.01, 0.1, 0.5].into_iter().enumerate() {
        let r = check_robustness_random(8, delta, 10_000, derive_seed(106, k as u64)).unwrap();
        violations += r.violations;
        parts.push(format!("delta {delta}: worst ratio {:.3}", r.measurement("worst_random_ratio").unwrap()));
    }
    let t = start.elapsed();
    Outcome {
        pass: violations == 0 && within(t, 5.0),
        detail: format!("3 x 10000 perturbations, {violations} violations, {}, {t:.2?} (limit 5 s)", parts.join(", ")),
    }
}

fn lipschitz() -> Outcome {
    let start = Instant::now();
    let r = check_lipschitz(10_000, 8, 107).unwrap();
    let t = start.elapsed();
    Outcome {
        pass: r.instances == 10_000 && r.violations == 0 && within(t, 2.0),
        detail: format!(
            "10000 triples, {} violations, min slack {:.3e}, {t:.2?} (limit 2 s)",
            r.violations, r.worst_slack
        ),
    }
}

fn drift_away_comparison() -> Outcome {
    let start = Instant::now();
    let cfg = TrainConfig { learning_rate: 0.05, steps: 200, lambda: 0.1, temperature: 1.0, ..TrainConfig::default() };
    let objectives = [
        NamedObjective { name: "actol".into(), objective: Objective::Actol },
        NamedObjective { name: "last_frame".into(), objective: Objective::Tnce(TnceConfig::last_frame(1.0)) },
    ];
    let (mut ours, mut theirs) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let spec = SyntheticClipSpec {
            frames: 10,
            dim: 8,
            completion_index: 5,
            tail_mode: TailMode::DriftAway,
            noise_sigma: 0.05,
            seed,
        };
        let rec = compare_objectives(&spec, &objectives, &TrainConfig { seed, ..cfg.clone() }).unwrap();
        ours.push(rec.outcomes[0].peak_error);
        theirs.push(rec.outcomes[1].peak_error);
    }
    let (m_ours, m_theirs) = (median(&ours).unwrap(), median(&theirs).unwrap());
    let t = start.elapsed();
    Outcome {
        pass: m_ours <= 1.0 && m_theirs > m_ours && within(t, 300.0),
        detail: format!(
            "20 seeds, median peak error actol {m_ours} (<= 1), last-frame {m_theirs} (> actol), 200 steps, {t:.2?} (limit 300 s)"
        ),
    }
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn cli_determinism() -> Outcome {
    let start = Instant::now();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::TempDir::new().unwrap();
    let mut checked = Vec::new();
    let mut ok = true;
    for (cmd, file) in [
        ("train", "train.toml"),
        ("verify", "verify.toml"),
        ("reward", "reward_drift.toml"),
        ("gradcheck", "gradcheck.toml"),
    ] {
        let mut snaps = Vec::new();
        for run in 0..2 {
            let out = tmp.path().join(format!("{cmd}-{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_actol"))
                .args([cmd, "--config"])
                .arg(configs.join(file))
                .arg("--out")
                .arg(&out)
                .args(["--seed", "7"])
                .status()
                .unwrap();
            ok &= status.success();
            snaps.push(snapshot(&out));
        }
        let same = !snaps[0].is_empty() && snaps[0] == snaps[1];
        ok &= same;
        checked.push(format!("{cmd} {} files {}", snaps[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    Outcome { pass: ok, detail: format!("{}, {:.2?}", checked.join(", "), start.elapsed()) }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("lower bound", lower_bound_holds),
        ("tightness", tightness),
        ("gradient oracle", gradient_oracle),
        ("ordering emergence", ordering_emergence),
        ("bridge statistics", bridge_statistics),
        ("robustness", robustness),
        ("lipschitz step", lipschitz),
        ("drift-away comparison", drift_away_comparison),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let out = check();
        failed += usize::from(!out.pass);
        println!("{} {}. {name}: {}", if out.pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
