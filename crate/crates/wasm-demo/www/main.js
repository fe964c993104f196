// SPDX-License-Identifier: MIT OR Apache-2.0

import init, { simulate, run_crops, segment } from "./pkg/crops_wasm.js";

const $ = (id) => document.getElementById(id);
const state = { sim: null, crops: null, seg: null };

function status(text) { $("status").textContent = text; }
function fail(err) { $("error").textContent = String(err); }

function frame(canvas, xs, ys, pad = 36) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const w = canvas.width - 2 * pad, h = canvas.height - 2 * pad;
  return {
    x: (v) => pad + (x1 === x0 ? w / 2 : ((v - x0) / (x1 - x0)) * w),
    y: (v) => canvas.height - pad - (y1 === y0 ? h / 2 : ((v - y0) / (y1 - y0)) * h),
    x0, x1, y0, y1, pad,
  };
}

function axes(ctx, f, xlabel, ylabel) {
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(`${xlabel}: ${+f.x0.toFixed(2)} to ${+f.x1.toFixed(2)}`, f.pad, ctx.canvas.height - 8);
  ctx.fillText(`${ylabel}: ${+f.y0.toFixed(1)} to ${+f.y1.toFixed(1)}`, f.pad, 14);
}

function drawSeries() {
  const canvas = $("series"), ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!state.sim) return;
  const v = state.sim.values;
  const f = frame(canvas, [0, v.length], v);
  ctx.fillStyle = "#9ab";
  v.forEach((y, t) => ctx.fillRect(f.x(t + 0.5), f.y(y), 1.2, 1.2));
  ctx.strokeStyle = "#2a2";
  ctx.setLineDash([4, 4]);
  for (const c of state.sim.changepoints) {
    ctx.beginPath(); ctx.moveTo(f.x(c), f.pad); ctx.lineTo(f.x(c), canvas.height - f.pad); ctx.stroke();
  }
  ctx.setLineDash([]);
  if (state.seg) {
    ctx.strokeStyle = "#c22";
    ctx.lineWidth = 2;
    for (const s of state.seg.segments) {
      ctx.beginPath(); ctx.moveTo(f.x(s.start), f.y(s.mean)); ctx.lineTo(f.x(s.end), f.y(s.mean)); ctx.stroke();
    }
    ctx.lineWidth = 1;
  }
  axes(ctx, f, "time", "value");
}

function drawElbow() {
  const canvas = $("elbow"), ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!state.crops) return;
  const iv = state.crops.intervals;
  const f = frame(canvas, iv.map((i) => i.m), iv.map((i) => i.cost));
  ctx.strokeStyle = "#333";
  ctx.beginPath();
  iv.forEach((i, k) => (k ? ctx.lineTo : ctx.moveTo).call(ctx, f.x(i.m), f.y(i.cost)));
  ctx.stroke();
  for (const i of iv) {
    const chosen = state.seg && state.seg.m === i.m;
    ctx.fillStyle = chosen ? "#c22" : "#333";
    ctx.beginPath(); ctx.arc(f.x(i.m), f.y(i.cost), chosen ? 5 : 3, 0, 2 * Math.PI); ctx.fill();
    ctx.fillText(i.m, f.x(i.m) + 5, f.y(i.cost) - 5);
  }
  axes(ctx, f, "changepoints", "cost");
}

function drawLines() {
  const canvas = $("lines"), ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!state.crops) return;
  const { beta_min: lo, beta_max: hi, intervals: iv } = state.crops;
  const pen = (i, b) => i.cost + (i.m + 1) * b;
  const ys = iv.flatMap((i) => [pen(i, lo), pen(i, hi)]);
  const f = frame(canvas, [lo, hi], ys);
  for (const i of iv) {
    ctx.strokeStyle = "#bbb";
    ctx.beginPath(); ctx.moveTo(f.x(lo), f.y(pen(i, lo))); ctx.lineTo(f.x(hi), f.y(pen(i, hi))); ctx.stroke();
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 2;
    ctx.beginPath(); ctx.moveTo(f.x(i.beta_lo), f.y(pen(i, i.beta_lo))); ctx.lineTo(f.x(i.beta_hi), f.y(pen(i, i.beta_hi))); ctx.stroke();
    ctx.lineWidth = 1;
  }
  if (state.seg) {
    ctx.strokeStyle = "#c22";
    const x = f.x(state.seg.beta);
    ctx.beginPath(); ctx.moveTo(x, f.pad); ctx.lineTo(x, canvas.height - f.pad); ctx.stroke();
  }
  axes(ctx, f, "penalty", "penalised cost");
}

function redraw() { drawSeries(); drawElbow(); drawLines(); }

function sliderBeta() {
  const lo = +$("beta-min").value, hi = +$("beta-max").value;
  return lo + ((hi - lo) * $("beta").value) / 1000;
}

function onSimulate() {
  $("error").textContent = "";
  try {
    state.sim = JSON.parse(simulate(+$("n").value, $("regime").value, $("kind").value, +$("seed").value));
    state.crops = null;
    state.seg = null;
    status(`${state.sim.values.length} points, ${state.sim.changepoints.length} true changepoints (dashed)`);
    onRun();
  } catch (e) { fail(e); }
}

function onRun() {
  if (!state.sim) return;
  $("error").textContent = "";
  try {
    const t0 = performance.now();
    state.crops = JSON.parse(run_crops(new Float64Array(state.sim.values), $("cost").value, +$("beta-min").value, +$("beta-max").value));
    const ms = (performance.now() - t0).toFixed(0);
    const ms_ = state.crops.intervals.map((i) => i.m);
    status(`${state.crops.intervals.length} segmentations (m = ${ms_.join(", ")}) from ${state.crops.solver_runs} solver runs in ${ms} ms`);
    onBeta();
  } catch (e) { fail(e); }
}

function onBeta() {
  if (!state.sim) return;
  try {
    const beta = sliderBeta();
    state.seg = JSON.parse(segment(new Float64Array(state.sim.values), $("cost").value, beta));
    $("beta-label").textContent = `β = ${beta.toFixed(2)}: ${state.seg.m} changepoints`;
    redraw();
  } catch (e) { fail(e); }
}

await init();
$("simulate").addEventListener("click", onSimulate);
$("run").addEventListener("click", onRun);
$("beta").addEventListener("input", onBeta);
onSimulate();
