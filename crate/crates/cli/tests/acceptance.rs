//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness; exits nonzero when any check fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use seeg_rank::dsp::{design_bandpass, frame, wavedec, waverec, FrameSpec, Wavelet};
use seeg_rank::gbdt::{train, train_traced, GbdtModel, Metrics, Tree, TreeNode, DECISION_THRESHOLD};
use seeg_rank::montage::{expand_range, ChannelLabel, Montage};
use seeg_rank::ranking::{elbow, Stage};
use seeg_rank::shapley::{
    coalition_weight, exact_shap_frame, exact_shapley, BackgroundSet, CoalitionGame, CoalitionPlayers,
};
use seeg_rank::GbdtParams;

type Check = std::result::Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let checks: [Criterion; 9] = [
        (1, "shapley oracle equivalence", oracle_equivalence),
        (2, "shapley axioms", axioms),
        (3, "weight identity", weight_identity),
        (4, "synthetic end-to-end recovery", synthetic_recovery),
        (5, "extension nesting and counts", extension_counts),
        (6, "elbow unit suite", elbow_suite),
        (7, "dsp suite", dsp_suite),
        (8, "determinism of run", determinism),
        (9, "gbdt sanity", gbdt_sanity),
    ];
    let mut failed = 0;
    for (id, name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id}: {name} ({detail}; {secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id}: {name} ({detail}; {secs:.1} s)");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

struct TableGame(Vec<f64>, usize);

impl CoalitionGame for TableGame {
    fn n_players(&self) -> usize {
        self.1
    }
    fn value(&self, coalition: u64) -> f64 {
        self.0[coalition as usize]
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn naive_shapley(game: &TableGame) -> Vec<f64> {
    let n = game.n_players();
    (0..n)
        .map(|c| {
            let mut phi = 0.0;
            for s in 0u64..1 << n {
                if s & (1 << c) != 0 {
                    continue;
                }
                let size = s.count_ones() as usize;
                let w = factorial(size) * factorial(n - size - 1) / factorial(n);
                phi += w * (game.value(s | 1 << c) - game.value(s));
            }
            phi
        })
        .collect()
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(3..=10);
        let game = TableGame((0..1 << n).map(|_| rng.random_range(-5.0..5.0)).collect(), n);
        let fast = exact_shapley(&game, 15).map_err(|e| e.to_string())?;
        for (a, b) in fast.iter().zip(naive_shapley(&game)) {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst < 1e-12, "max |diff| {worst:e}");
    ensure!(secs < 10.0, "took {secs:.1} s");
    Ok(format!("50 games, max |diff| {worst:.1e}"))
}

fn players(n: usize, width: usize) -> CoalitionPlayers {
    let labels = (1..=n).map(|i| ChannelLabel::new("LA", i as u32).unwrap()).collect();
    let columns = (0..n).map(|p| p * width..(p + 1) * width).collect();
    CoalitionPlayers::new(labels, columns, n * width).unwrap()
}

fn random_model(seed: u64, n_players: usize, width: usize, active: usize) -> (GbdtModel, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = n_players * width;
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<bool> = rows
        .iter()
        .map(|r| {
            let s: f64 = (0..active * width).map(|j| r[j] * (1.0 + j as f64 * 0.3)).sum();
            s + 0.3 * rng.random_range(-1.0..1.0) > 0.0
        })
        .collect();
    let x: Vec<f64> = rows.iter().flatten().copied().collect();
    let params = GbdtParams {
        n_rounds: 6,
        max_depth: 3,
        ..GbdtParams::default()
    };
    (train(&x, d, &y, &params).unwrap(), rows)
}

fn background(rows: &[Vec<f64>], b: usize) -> BackgroundSet {
    let refs: Vec<&[f64]> = rows.iter().take(b).map(Vec::as_slice).collect();
    BackgroundSet::from_rows(&refs).unwrap()
}

fn mirror(base: &GbdtModel) -> GbdtModel {
    let swap = |j: usize| match j {
        0 => 2,
        1 => 3,
        2 => 0,
        3 => 1,
        j => j,
    };
    let mirrored = base.trees.iter().map(|t| Tree {
        nodes: t
            .nodes
            .iter()
            .map(|node| match *node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    cover,
                } => TreeNode::Split {
                    feature: swap(feature),
                    threshold,
                    left,
                    right,
                    cover,
                },
                ref leaf => leaf.clone(),
            })
            .collect(),
    });
    base.with_trees(base.trees.iter().cloned().chain(mirrored).collect())
}

fn axioms() -> Check {
    const CASES: u64 = 100;
    let (mut eff, mut dummy_players, mut sym, mut lin) = (0.0f64, 0usize, 0.0f64, 0.0f64);
    for case in 0..CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let n = rng.random_range(3..=7);
        let frame = rng.random_range(0..40);

        let (model, rows) = random_model(case, n, 2, 2);
        let p = players(n, 2);
        let bg = background(&rows[60..], 1 + case as usize % 5);
        let v = exact_shap_frame(&model, &rows[frame], &p, &bg, 15).map_err(|e| e.to_string())?;
        eff = eff.max(v.efficiency_gap().abs());
        let used: Vec<usize> = model.trees.iter().flat_map(Tree::split_features).collect();
        for (c, cols) in p.columns().iter().enumerate() {
            if !used.iter().any(|j| cols.contains(j)) {
                ensure!(v.phi[c] == 0.0, "case {case}: dummy player {c} got {}", v.phi[c]);
                dummy_players += 1;
            }
        }

        let (base, mut rows) = random_model(case + 10_000, n, 2, n);
        for r in &mut rows {
            r[2] = r[0];
            r[3] = r[1];
        }
        let sym_model = mirror(&base);
        let bg = background(&rows[60..], 4);
        let v = exact_shap_frame(&sym_model, &rows[frame], &p, &bg, 15).map_err(|e| e.to_string())?;
        sym = sym.max((v.phi[0] - v.phi[1]).abs());

        let (model, rows) = random_model(case + 20_000, n, 2, 3);
        let bg = background(&rows[60..], 3);
        let x = &rows[frame];
        let t = &model.trees;
        ensure!(t.len() >= 2, "case {case}: model has fewer than two trees");
        let phi = |m: GbdtModel| {
            exact_shap_frame(&m, x, &p, &bg, 15)
                .map(|v| v.phi)
                .map_err(|e| e.to_string())
        };
        let a = phi(model.with_trees(vec![t[0].clone()]))?;
        let b = phi(model.with_trees(vec![t[1].clone()]))?;
        let ab = phi(model.with_trees(t[..2].to_vec()))?;
        for c in 0..n {
            lin = lin.max((ab[c] - (a[c] + b[c])).abs());
        }
    }
    ensure!(eff < 1e-9, "efficiency gap {eff:e}");
    ensure!(dummy_players > 0, "no dummy players were exercised");
    ensure!(sym < 1e-12, "symmetry gap {sym:e}");
    ensure!(lin < 1e-12, "linearity gap {lin:e}");
    Ok(format!(
        "{CASES} cases each; efficiency {eff:.1e}, {dummy_players} dummy players exactly 0, symmetry {sym:.1e}, linearity {lin:.1e}"
    ))
}

fn weight_identity() -> Check {
    let mut worst: f64 = 0.0;
    for n in 1..=12usize {
        // sum over subsets of N \ {c}, grouped by size
        let total: f64 = (0..n)
            .map(|s| {
                let subsets = factorial(n - 1) / (factorial(s) * factorial(n - 1 - s));
                subsets * coalition_weight(s, n).unwrap()
            })
            .sum();
        worst = worst.max((total - 1.0).abs());
    }
    ensure!(worst < 1e-12, "max |sum - 1| {worst:e}");
    Ok(format!("n = 1..12, max |sum - 1| {worst:.1e}"))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seeg-rank"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn invoke(args: &[&Path]) -> std::result::Result<(), String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "seeg-rank failed: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn synth(dir: &Path) -> std::result::Result<(), String> {
    invoke(&[
        Path::new("synth"),
        Path::new("--spec"),
        &fixture("recovery.json"),
        Path::new("--out"),
        dir,
    ])
}

fn run_all_stages(data: &Path, out: &Path) -> std::result::Result<(), String> {
    invoke(&[
        Path::new("run"),
        Path::new("--signal"),
        &data.join("signal.csv"),
        Path::new("--sidecar"),
        &data.join("sidecar.json"),
        Path::new("--montage"),
        &data.join("montage.json"),
        Path::new("--out"),
        out,
    ])
}

fn read_json(path: &Path) -> std::result::Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn synthetic_recovery() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path();
    synth(data)?;
    let out = data.join("run");
    run_all_stages(data, &out)?;
    let secs = start.elapsed().as_secs_f64();

    let report = read_json(&out.join("report.json"))?;
    let truth = read_json(&data.join("ground_truth.json"))?;
    let zone = report["stages"]
        .as_array()
        .and_then(|s| s.iter().find(|s| s["stage"] == "zone"))
        .ok_or("no zone stage in report")?;
    ensure!(
        zone["n_channels"] == 12,
        "zone stage has {} channels",
        zone["n_channels"]
    );
    ensure!(report["config"]["cv_folds"] == 5, "not 5 folds");
    let f1 = zone["mean_f1"].as_f64().ok_or("mean_f1 missing")?;
    let mut top: Vec<String> = zone["ranking"].as_array().ok_or("ranking missing")?[..3]
        .iter()
        .map(|r| r["channel"].as_str().unwrap_or_default().to_string())
        .collect();
    let mut expected: Vec<String> = truth["ictal_channels"]
        .as_array()
        .ok_or("ground truth missing")?
        .iter()
        .map(|c| c.as_str().unwrap_or_default().to_string())
        .collect();
    top.sort();
    expected.sort();
    ensure!(f1 >= 0.90, "zone mean F1 {f1:.4} below 0.90");
    ensure!(top == expected, "top-3 {top:?}, ground truth {expected:?}");
    ensure!(secs < 300.0, "wall clock {secs:.0} s");
    Ok(format!(
        "zone mean 5-fold F1 {f1:.4}, top-3 {}, synth + run {secs:.1} s",
        top.join(" ")
    ))
}

fn extension_counts() -> Check {
    let montage = Montage::from_json(
        r#"{"electrodes": [
            {"name": "LA", "contacts": 10, "zone_neighbors": ["LI", "LC"]},
            {"name": "LB", "contacts": 10, "zone_neighbors": ["LI", "LC"]},
            {"name": "LC", "contacts": 16},
            {"name": "LI", "contacts": 16}]}"#,
    )
    .map_err(|e| e.to_string())?;
    let selected = expand_range("LA1, LA2, LB2").map_err(|e| e.to_string())?;
    let clinician = Stage::Clinician
        .channels(&montage, &selected)
        .map_err(|e| e.to_string())?;
    let electrode = Stage::Electrode
        .channels(&montage, &selected)
        .map_err(|e| e.to_string())?;
    let zone = Stage::Zone.channels(&montage, &selected).map_err(|e| e.to_string())?;
    ensure!(
        clinician.iter().all(|c| electrode.contains(c)),
        "clinician set not inside electrode extension"
    );
    ensure!(
        electrode.iter().all(|c| zone.contains(c)),
        "electrode extension not inside zone extension"
    );
    ensure!(
        electrode.len() == 20,
        "electrode extension has {} channels",
        electrode.len()
    );
    ensure!(zone.len() == 52, "zone extension has {} channels", zone.len());
    Ok(format!(
        "{} -> {} -> {} channels",
        clinician.len(),
        electrode.len(),
        zone.len()
    ))
}

fn ranked(values: &[f64]) -> Vec<(ChannelLabel, f64)> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| (ChannelLabel::new("LA", i as u32 + 1).unwrap(), v))
        .collect()
}

fn elbow_suite() -> Check {
    for (values, k) in [
        (&[10.0, 9.0, 2.0, 1.5, 1.0][..], 3),
        (&[5.0; 4][..], 2),
        (&[3.0, 1.0][..], 2),
    ] {
        let e = elbow(&ranked(values), true);
        ensure!(e.k_star == k, "{values:?}: k* {} expected {k}", e.k_star);
        ensure!(e.selected.len() == k, "{values:?}: kept {}", e.selected.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut compared = 0;
    for _ in 0..100 {
        let len = rng.random_range(3..25);
        let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        let a = rng.random_range(0.1..10.0);
        let b = rng.random_range(-10.0..10.0);
        let plain = elbow(&ranked(&v), true);
        let scaled = elbow(&ranked(&v.iter().map(|x| a * x + b).collect::<Vec<_>>()), true);
        let tripled = elbow(&ranked(&v.iter().map(|x| 3.0 * x + 7.0).collect::<Vec<_>>()), true);
        ensure!(
            plain.k_star == scaled.k_star,
            "k* {} vs {} under {a} x + {b}",
            plain.k_star,
            scaled.k_star
        );
        ensure!(
            plain.k_star == tripled.k_star && plain.order == tripled.order,
            "3x + 7 changed the elbow"
        );
        compared += 1;
    }
    Ok(format!("3 examples exact, {compared} random affine cases"))
}

/// Closed-form magnitude of the bilinear Butterworth bandpass with
/// prewarped edges.
fn analytic_gain(f: f64, fs: f64, low: f64, high: f64, order: i32) -> f64 {
    let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * f / fs).tan();
    let (w, wl, wh) = (warp(f), warp(low), warp(high));
    let omega = (w * w - wl * wh) / (w * (wh - wl));
    1.0 / (1.0 + omega.powi(2 * order)).sqrt()
}

fn steady_amplitude(y: &[f64], skip: usize) -> f64 {
    let mid = &y[skip..y.len() - skip];
    (2.0 * mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt()
}

fn dsp_suite() -> Check {
    let fs = 1000.0;
    let filter = design_bandpass(fs, 1.0, 60.0, 4).map_err(|e| e.to_string())?;
    let mut worst_db: f64 = 0.0;
    let mut lines = Vec::new();
    for f in [5.0, 10.0, 30.0, 45.0, 80.0, 120.0] {
        // whole number of periods between the trimmed edges
        let x: Vec<f64> = (0..20_000)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs).sin())
            .collect();
        let y = filter.filtfilt(&x);
        let measured = steady_amplitude(&y, 5000);
        // forward-backward squares the one-way magnitude
        let expected = analytic_gain(f, fs, 1.0, 60.0, 4).powi(2);
        let db = 20.0 * (measured / expected).log10();
        worst_db = worst_db.max(db.abs());
        lines.push((f, measured, expected));
    }
    ensure!(
        worst_db < 0.05,
        "measured gain differs from analytic by {worst_db:.3} dB"
    );
    let pass = lines.iter().find(|l| l.0 == 30.0).unwrap().1;
    ensure!((pass - 1.0).abs() < 0.05, "30 Hz passband gain {pass}");
    let stop_db = 20.0 * lines.iter().find(|l| l.0 == 120.0).unwrap().1.log10();
    ensure!(stop_db < -20.0, "120 Hz only {stop_db:.1} dB down");
    let analytic_120 = 40.0 * analytic_gain(120.0, fs, 1.0, 60.0, 4).log10();
    ensure!(
        (analytic_120 + 51.651).abs() < 0.01,
        "analytic 120 Hz gain {analytic_120:.3} dB"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pr: f64 = 0.0;
    for _ in 0..20 {
        let len = rng.random_range(64..2000);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-100.0..100.0)).collect();
        for wavelet in [Wavelet::Haar, Wavelet::Db2, Wavelet::Db4] {
            let levels = rng.random_range(1..=5);
            let dec = wavedec(&x, wavelet, levels).map_err(|e| e.to_string())?;
            let y = waverec(&dec);
            ensure!(y.len() == x.len(), "reconstruction length {} vs {}", y.len(), x.len());
            for (a, b) in x.iter().zip(&y) {
                pr = pr.max((a - b).abs());
            }
        }
    }
    ensure!(pr < 1e-8, "reconstruction error {pr:e}");

    for _ in 0..20 {
        let n = rng.random_range(0..200_000);
        let len = rng.random_range(1..5000);
        let hop = rng.random_range(1..5000);
        let spec = FrameSpec::from_samples(n, len, hop);
        let expected = if n < len { 0 } else { (n - len) / hop + 1 };
        ensure!(
            spec.n_frames == expected,
            "n={n} L={len} H={hop}: {} frames",
            spec.n_frames
        );
        let signal = vec![0.0; n];
        let frames = frame(&signal, &spec);
        ensure!(frames.len() == expected, "frame() returned {} frames", frames.len());
    }
    Ok(format!(
        "gain within {worst_db:.3} dB of analytic at 6 frequencies, 120 Hz at {stop_db:.2} dB, reconstruction {pr:.1e}, 20 frame counts"
    ))
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path();
    synth(data)?;
    let (a, b) = (data.join("a"), data.join("b"));
    run_all_stages(data, &a)?;
    run_all_stages(data, &b)?;
    let mut compared = Vec::new();
    for stage in Stage::ALL {
        compared.push(format!("attributions_{stage}.ndjson"));
    }
    compared.push("report.json".to_string());
    for name in &compared {
        let x = std::fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = std::fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(!x.is_empty(), "{name} is empty");
        ensure!(x == y, "{name} differs between runs");
    }
    Ok(format!("{} files byte-identical across two runs", compared.len()))
}

fn gbdt_sanity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 400;
    let d = 3;
    let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<bool> = (0..n).map(|i| x[i * d + 1] > 0.2).collect();
    let params = GbdtParams {
        learning_rate: 0.1,
        ..GbdtParams::default()
    };
    let (model, losses) = train_traced(&x, d, &y, &params).map_err(|e| e.to_string())?;
    let predicted: Vec<bool> = x
        .chunks(d)
        .map(|r| model.predict(r, DECISION_THRESHOLD).unwrap())
        .collect();
    let f1 = Metrics::from_predictions(&predicted, &y).f1;
    ensure!(f1 == 1.0, "separable toy F1 {f1}");
    for w in losses.windows(2) {
        ensure!(w[1] <= w[0], "loss rose from {} to {}", w[0], w[1]);
    }

    let json = model.to_json();
    let back = GbdtModel::from_json(&json).map_err(|e| e.to_string())?;
    ensure!(back.to_json() == json, "json changed on round trip");
    for r in x.chunks(d) {
        let (p, q) = (model.raw_margin(r).unwrap(), back.raw_margin(r).unwrap());
        ensure!(p.to_bits() == q.to_bits(), "margin {p} vs {q} after round trip");
    }
    Ok(format!(
        "F1 {f1}, loss {:.4} -> {:.4} over {} rounds, round trip bit-exact",
        losses[0],
        losses[losses.len() - 1],
        losses.len() - 1
    ))
}
