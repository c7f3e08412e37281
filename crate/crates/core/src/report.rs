//! Static SVG bar charts of a stage ranking.

use std::fmt::Write;

use crate::ranking::StageReport;

/// Bars drawn per chart.
pub const TOP_N: usize = 20;

const WIDTH: f64 = 640.0;
const BAR_H: f64 = 18.0;
const GAP: f64 = 4.0;
const TOP: f64 = 48.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 40.0;
const BOTTOM: f64 = 56.0;

const CLINICIAN_FILL: &str = "#d95f02";
const OTHER_FILL: &str = "#1b9e77";

/// One bar: label, value, highlighted.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    pub tagged: bool,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Horizontal bar chart, first bar at the top. `cutoff` draws a dashed line
/// below bar number `cutoff` (1-based) when it falls inside the chart.
pub fn bar_chart_svg(title: &str, bars: &[Bar], cutoff: Option<usize>, axis_label: &str) -> String {
    let bars = &bars[..bars.len().min(TOP_N)];
    let n = bars.len().max(1) as f64;
    let height = TOP + n * (BAR_H + GAP) + BOTTOM;
    let lo = bars.iter().map(|b| b.value).fold(0.0_f64, f64::min);
    let hi = bars.iter().map(|b| b.value).fold(0.0_f64, f64::max);
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let x_of = |v: f64| LEFT + (v - lo) / span * plot_w;
    let zero = x_of(0.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for (i, bar) in bars.iter().enumerate() {
        let y = TOP + i as f64 * (BAR_H + GAP);
        let x = x_of(bar.value);
        let (x0, w) = if x >= zero { (zero, x - zero) } else { (x, zero - x) };
        let fill = if bar.tagged { CLINICIAN_FILL } else { OTHER_FILL };
        let name = if bar.tagged {
            format!("{}*", bar.label)
        } else {
            bar.label.clone()
        };
        let _ = writeln!(
            svg,
            r#"<rect x="{x0:.2}" y="{y:.2}" width="{w:.2}" height="{BAR_H}" fill="{fill}"><title>{} {:.6}</title></rect>"#,
            escape(&name),
            bar.value
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + BAR_H * 0.75,
            escape(&name)
        );
    }
    let axis_y = TOP + n * (BAR_H + GAP);
    let _ = writeln!(
        svg,
        r#"<line x1="{zero:.2}" y1="{TOP}" x2="{zero:.2}" y2="{axis_y:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
        WIDTH - RIGHT
    );
    for v in [lo, 0.0, hi] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x_of(v),
            axis_y + 16.0,
            format_tick(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        axis_y + 40.0,
        escape(axis_label)
    );
    if let Some(k) = cutoff.filter(|&k| k >= 1 && k <= bars.len()) {
        let y = TOP + k as f64 * (BAR_H + GAP) - GAP / 2.0;
        let _ = writeln!(
            svg,
            r##"<line class="elbow" x1="{}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#7570b3" stroke-width="2" stroke-dasharray="6 3"/>"##,
            LEFT - 60.0,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="#7570b3">k*={k}</text>"##,
            WIDTH - RIGHT,
            y - 3.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.3}")
    }
}

/// Chart of a stage's top-ranked channels; clinician-selected channels are
/// marked with `*` and a distinct color.
pub fn ranking_svg(stage: &StageReport) -> String {
    let bars: Vec<Bar> = stage
        .ranking
        .iter()
        .map(|r| Bar {
            label: r.channel.to_string(),
            value: r.mean_shap,
            tagged: r.clinician_selected,
        })
        .collect();
    let title = format!(
        "{} stage: top {} of {} channels (mean F1 {:.3}, * clinician-selected)",
        stage.stage,
        bars.len().min(TOP_N),
        stage.n_channels,
        stage.mean_f1
    );
    bar_chart_svg(
        &title,
        &bars,
        Some(stage.elbow.k_star),
        "mean SHAP value (raw margin, log-odds units)",
    )
}
