// Build the module first:
//   cargo build -p rotbox-web --release --target wasm32-unknown-unknown
//   wasm-bindgen --target web --out-dir crates/rotbox-web/www/pkg \
//     target/wasm32-unknown-unknown/release/rotbox_web.wasm
import init, { boundarySweep, fejerFactor, twoSettingCurve } from "./pkg/rotbox_web.js";

const $ = (id) => document.getElementById(id);

function parseList(text) {
  return text
    .split(",")
    .map((t) => t.trim())
    .filter((t) => t.length > 0)
    .map(Number);
}

function report(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.classList.toggle("err", isError);
}

// Maps data coordinates to canvas pixels with a margin.
function frame(canvas, xmin, xmax, ymin, ymax) {
  const pad = 30;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  return {
    x: (v) => pad + ((v - xmin) / (xmax - xmin)) * w,
    y: (v) => canvas.height - pad - ((v - ymin) / (ymax - ymin)) * h,
  };
}

function axes(ctx, canvas, f, xmin, xmax, ymin, ymax) {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(f.x(xmin), f.y(0));
  ctx.lineTo(f.x(xmax), f.y(0));
  ctx.moveTo(f.x(0), f.y(ymin));
  ctx.lineTo(f.x(0), f.y(ymax));
  ctx.stroke();
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  ctx.fillText(xmax.toFixed(2), f.x(xmax) - 24, f.y(0) + 14);
  ctx.fillText(ymax.toFixed(2), f.x(0) + 4, f.y(ymax) + 10);
}

function polyline(ctx, f, xs, ys, color, close = false) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i === 0 ? ctx.moveTo(f.x(x), f.y(ys[i])) : ctx.lineTo(f.x(x), f.y(ys[i]))));
  if (close) ctx.closePath();
  ctx.stroke();
}

function runSweep() {
  try {
    const twoJ = Number($("sweep-twoj").value);
    const angles = Number($("sweep-angles").value);
    const t0 = performance.now();
    const r = JSON.parse(boundarySweep(twoJ, angles));
    const ms = performance.now() - t0;
    const canvas = $("sweep-canvas");
    const ctx = canvas.getContext("2d");
    const f = frame(canvas, -0.6, 0.6, -0.6, 0.6);
    axes(ctx, canvas, f, -0.6, 0.6, -0.6, 0.6);
    polyline(ctx, f, r.points.map((p) => p[0]), r.points.map((p) => p[1]), "#1f5fbf", true);
    // the line c + s = max marks the extreme value of the gap functional
    ctx.setLineDash([4, 4]);
    polyline(ctx, f, [r.gap_max - 0.6, 0.6], [0.6, r.gap_max - 0.6], "#c04000");
    ctx.setLineDash([]);
    report(
      "sweep-out",
      `2J = ${r.two_j}: ${r.points.length} support points, ${r.failures} failures, ` +
        `max c_{2J-1}+s_{2J} on the sweep = ${r.gap_max.toFixed(6)} (${ms.toFixed(0)} ms)`,
    );
  } catch (e) {
    report("sweep-out", String(e), true);
  }
}

function runFactor() {
  try {
    const c = parseList($("factor-c").value);
    const s = parseList($("factor-s").value);
    const r = JSON.parse(fejerFactor(new Float64Array(c), new Float64Array(s)));
    const canvas = $("factor-canvas");
    const ctx = canvas.getContext("2d");
    const ymax = Math.max(...r.p, ...r.q_abs_sq) * 1.1 || 1;
    const f = frame(canvas, 0, 2 * Math.PI, 0, ymax);
    axes(ctx, canvas, f, 0, 2 * Math.PI, 0, ymax);
    polyline(ctx, f, r.theta, r.p, "#1f5fbf");
    ctx.setLineDash([5, 4]);
    polyline(ctx, f, r.theta, r.q_abs_sq, "#c04000");
    ctx.setLineDash([]);
    const b = r.b.map(([re, im]) => `${re.toFixed(6)}${im < 0 ? "-" : "+"}${Math.abs(im).toFixed(6)}i`);
    report(
      "factor-out",
      `b = [${b.join(", ")}]\nsup |p - |Q|^2| = ${r.reconstruction_error.toExponential(2)}; ` +
        `roots inside ${r.roots_inside}, on circle ${r.roots_on_circle}`,
    );
  } catch (e) {
    report("factor-out", String(e), true);
  }
}

function runCurve() {
  try {
    const twoJ = Number($("curve-twoj").value);
    const alpha = Number($("curve-alpha").value);
    const r = JSON.parse(twoSettingCurve(twoJ, alpha, 201));
    const canvas = $("curve-canvas");
    const ctx = canvas.getContext("2d");
    const f = frame(canvas, -1, 1, -1, 1);
    axes(ctx, canvas, f, -1, 1, -1, 1);
    const xs = r.e1.concat([...r.e1].reverse());
    const ys = r.e2_max.concat([...r.e2_min].reverse());
    ctx.fillStyle = "rgba(31, 95, 191, 0.15)";
    ctx.beginPath();
    xs.forEach((x, i) => (i === 0 ? ctx.moveTo(f.x(x), f.y(ys[i])) : ctx.lineTo(f.x(x), f.y(ys[i]))));
    ctx.closePath();
    ctx.fill();
    polyline(ctx, f, r.e1, r.e2_max, "#1f5fbf");
    polyline(ctx, f, r.e1, r.e2_min, "#1f5fbf");
    report("curve-out", `delta = ${r.delta.toFixed(6)} for 2J = ${r.two_j}, alpha = ${r.alpha}`);
  } catch (e) {
    report("curve-out", String(e), true);
  }
}

async function main() {
  try {
    await init();
  } catch (e) {
    report("status", `Could not load pkg/rotbox_web.js: ${e}`, true);
    return;
  }
  report("status", "Ready.");
  $("sweep-run").addEventListener("click", runSweep);
  $("factor-run").addEventListener("click", runFactor);
  $("curve-run").addEventListener("click", runCurve);
  runSweep();
  runFactor();
  runCurve();
}

main();
