import init, { filter_response, rank_values, synthetic_demo } from "./pkg/seeg_rank_wasm.js";

const $ = (id) => document.getElementById(id);

function showError(target, err) {
  let text = String(err);
  try {
    const e = JSON.parse(text);
    text = `${e.error}: ${e.message}`;
  } catch (_) {}
  target.innerHTML = "";
  const p = document.createElement("p");
  p.className = "error";
  p.textContent = text;
  target.appendChild(p);
}

function plotFilter() {
  const info = $("filter-info");
  try {
    const r = JSON.parse(filter_response(+$("fs").value, +$("low").value, +$("high").value, +$("order").value));
    const g = r.gain_db;
    info.textContent = `${r.sections} biquads; low edge ${g.low_edge.toFixed(2)} dB, high edge ${g.high_edge.toFixed(2)} dB` +
      (g.twice_high === null ? "" : `, twice high ${g.twice_high.toFixed(1)} dB`) +
      ". Solid: one pass. Dashed: forward-backward.";
    $("filter-out").innerHTML = r.svg;
  } catch (err) {
    info.textContent = "";
    showError($("filter-out"), err);
  }
}

function rank() {
  const info = $("rank-info");
  try {
    const r = JSON.parse(rank_values($("values").value, $("inclusive").checked));
    const d = r.second_diffs.map((v) => v.toFixed(3)).join(", ");
    info.textContent = `k* = ${r.k_star}; selected ${r.selected.join(", ")}; second differences [${d}]`;
    $("rank-out").innerHTML = r.svg;
  } catch (err) {
    info.textContent = "";
    showError($("rank-out"), err);
  }
}

function demo() {
  const out = $("demo-out");
  out.textContent = "running...";
  // let the status paint before the blocking call
  setTimeout(() => {
    try {
      const r = JSON.parse(synthetic_demo($("ictal").value, $("clinician").value, BigInt($("seed").value || 0)));
      const rows = r.stages.map((s) =>
        `<tr><td>${s.stage}</td><td>${s.n_channels}</td><td>${s.mean_f1.toFixed(3)}</td><td>${s.k_star}</td><td>${s.new_findings.join(", ")}</td></tr>`
      ).join("");
      out.innerHTML = `<table><tr><th>stage</th><th>channels</th><th>mean F1</th><th>k*</th><th>new findings</th></tr>${rows}</table>` +
        r.stages.map((s) => `<div class="figure">${s.svg}</div>`).join("");
    } catch (err) {
      showError(out, err);
    }
  }, 20);
}

function bind(form, fn) {
  $(form).addEventListener("submit", (e) => {
    e.preventDefault();
    fn();
  });
}

await init();
bind("filter-form", plotFilter);
bind("rank-form", rank);
bind("demo-form", demo);
plotFilter();
rank();
