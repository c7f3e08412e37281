//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; failures are thrown as a JSON string
//! `{"error": "<kind>", "message": "..."}`.

use std::fmt::Write;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use seeg_rank::dsp::design_bandpass;
use seeg_rank::montage::{expand_range, parse_channel_label, ChannelLabel};
use seeg_rank::ranking::{elbow, run_workflow, Stage};
use seeg_rank::report::{bar_chart_svg, ranking_svg, Bar};
use seeg_rank::synth::{generate, SynthSpec};
use seeg_rank::{Error, RunConfig};

type Out = std::result::Result<String, String>;

fn fail(err: Error) -> String {
    json!({"error": err.kind(), "message": err.to_string()}).to_string()
}

fn throw(r: Out) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Magnitude response of the bandpass, one-way and forward-backward, as an
/// SVG line plot in dB.
#[wasm_bindgen]
pub fn filter_response(fs: f64, low: f64, high: f64, order: usize) -> std::result::Result<String, JsValue> {
    throw(filter_response_json(fs, low, high, order))
}

pub fn filter_response_json(fs: f64, low: f64, high: f64, order: usize) -> Out {
    let filter = design_bandpass(fs, low, high, order).map_err(fail)?;
    let nyquist = fs / 2.0;
    let points: Vec<(f64, f64)> = (1..=400)
        .map(|i| {
            let f = nyquist * i as f64 / 401.0;
            (f, 20.0 * filter.response(f, fs).norm().max(1e-12).log10())
        })
        .collect();
    let at = |f: f64| 20.0 * filter.response(f, fs).norm().log10();
    Ok(json!({
        "svg": response_svg(&points, nyquist, (low, high)),
        "gain_db": {
            "low_edge": at(low),
            "high_edge": at(high),
            "twice_high": if 2.0 * high < nyquist { Some(at(2.0 * high)) } else { None },
        },
        "sections": filter.sections().len(),
    })
    .to_string())
}

const FLOOR_DB: f64 = -120.0;

fn response_svg(points: &[(f64, f64)], nyquist: f64, band: (f64, f64)) -> String {
    let (w, h, left, top, bottom) = (640.0, 320.0, 56.0, 20.0, 40.0);
    let plot_w = w - left - 20.0;
    let plot_h = h - top - bottom;
    let x = |f: f64| left + f / nyquist * plot_w;
    let y = |db: f64| top + db.max(FLOOR_DB) / FLOOR_DB * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{:.1}" y="{top}" width="{:.1}" height="{plot_h}" fill="#eef5f2"/>"##,
        x(band.0),
        x(band.1) - x(band.0)
    );
    for db in [0.0, -20.0, -40.0, -60.0, -80.0, -100.0, -120.0] {
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" x2="{}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{db}</text>"##,
            left + plot_w,
            y(db),
            y(db),
            left - 4.0,
            y(db) + 4.0
        );
    }
    for (series, colour, dash) in [(1.0, "#7570b3", ""), (2.0, "#1b9e77", r#" stroke-dasharray="5 3""#)] {
        let path: Vec<String> = points
            .iter()
            .map(|&(f, db)| format!("{:.1},{:.1}", x(f), y(series * db)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
            path.join(" ")
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">frequency (Hz), 0 to {nyquist}</text>"#,
        left + plot_w / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">gain (dB)</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Ranks `LABEL: value` pairs (comma, semicolon or newline separated) and
/// applies the elbow cut.
#[wasm_bindgen]
pub fn rank_values(text: &str, inclusive: bool) -> std::result::Result<String, JsValue> {
    throw(rank_values_json(text, inclusive))
}

pub fn rank_values_json(text: &str, inclusive: bool) -> Out {
    let mut pairs: Vec<(ChannelLabel, f64)> = Vec::new();
    for item in text.split([',', ';', '\n']).map(str::trim).filter(|s| !s.is_empty()) {
        let (label, value) = item
            .split_once([':', '='])
            .ok_or_else(|| fail(Error::Domain(format!("expected LABEL: value, got {item:?}"))))?;
        let label = parse_channel_label(label).map_err(fail)?;
        let value: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| fail(Error::Domain(format!("{label}: not a finite number"))))?;
        if pairs.iter().any(|(c, _)| *c == label) {
            return Err(fail(Error::Domain(format!("{label} given twice"))));
        }
        pairs.push((label, value));
    }
    if pairs.is_empty() {
        return Err(fail(Error::EmptySequence));
    }
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let e = elbow(&pairs, inclusive);
    let bars: Vec<Bar> = pairs
        .iter()
        .enumerate()
        .map(|(i, (c, v))| Bar {
            label: c.to_string(),
            value: *v,
            tagged: i < e.selected.len(),
        })
        .collect();
    Ok(json!({
        "svg": bar_chart_svg("Ranked values", &bars, Some(e.k_star), "value"),
        "order": e.order,
        "k_star": e.k_star,
        "selected": e.selected,
        "second_diffs": e.second_diffs,
    })
    .to_string())
}

/// Generates a small synthetic recording and runs the three-stage workflow
/// on it. `ictal` and `clinician` are channel ranges like `"LA2, LB1"`.
#[wasm_bindgen]
pub fn synthetic_demo(ictal: &str, clinician: &str, seed: u64) -> std::result::Result<String, JsValue> {
    throw(synthetic_demo_json(ictal, clinician, seed))
}

pub fn synthetic_demo_json(ictal: &str, clinician: &str, seed: u64) -> Out {
    let ictal = expand_range(ictal).map_err(fail)?;
    let spec = json!({
        "montage": {"electrodes": [
            {"name": "LA", "contacts": 3, "zone_neighbors": ["LB"]},
            {"name": "LB", "contacts": 3},
            {"name": "RC", "contacts": 3}]},
        "fs": 250,
        "duration_s": 120,
        "seizures": [{"onset_s": 50, "offset_s": 75}],
        "ictal_channels": ictal.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "clinician_selected": clinician,
        "modulation": {"kind": "gated", "period_s": 6, "duty": 0.5},
        "onset_lead_s": 10,
        "seed": seed,
    });
    let spec = SynthSpec::from_json(&spec.to_string()).map_err(fail)?;
    let fx = generate(&spec).map_err(fail)?;
    let selected = expand_range(&fx.sidecar.clinician_selected).map_err(fail)?;

    let mut cfg = RunConfig {
        pps_extension_s: 10.0,
        cv_folds: 3,
        background_size: 8,
        seed,
        ..RunConfig::default()
    };
    cfg.gbdt.n_rounds = 30;
    let out = run_workflow(
        &fx.recording,
        &fx.annotations,
        &fx.montage,
        &selected,
        &cfg,
        &Stage::ALL,
    )
    .map_err(fail)?;

    let stages: Vec<Value> = out
        .report
        .stages
        .iter()
        .map(|s| {
            json!({
                "stage": s.stage,
                "n_channels": s.n_channels,
                "mean_f1": s.mean_f1,
                "k_star": s.elbow.k_star,
                "new_findings": s.new_findings,
                "svg": ranking_svg(s),
            })
        })
        .collect();
    Ok(json!({"ictal_channels": ictal, "clinician_selected": selected, "stages": stages}).to_string())
}
