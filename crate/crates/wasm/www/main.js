import init, { populationCurves, fisherCurve, estimate } from "./pkg/ionthermo_wasm.js";

const POINTS = 401;
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, x, series, yLabel, marker) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 48;
  ctx.clearRect(0, 0, w, h);
  const finite = series.flatMap((s) => Array.from(s.y).filter(Number.isFinite));
  const yMax = Math.max(...finite, 1e-12) * 1.05;
  const xMax = x[x.length - 1];
  const px = (v) => pad + (v / xMax) * (w - 2 * pad);
  const py = (v) => h - pad + (-v / yMax) * (h - 2 * pad);

  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  for (let k = 0; k <= 4; k++) {
    const xv = (xMax * k) / 4, yv = (yMax * k) / 4;
    ctx.fillText(xv.toPrecision(3), px(xv) - 10, h - pad + 16);
    ctx.fillText(yv.toPrecision(2), 4, py(yv) + 4);
  }
  ctx.fillText("t (μs)", w - pad - 30, h - 8);
  ctx.fillText(yLabel, pad + 6, pad / 2 + 4);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ?? []);
    ctx.lineWidth = 1.6;
    ctx.beginPath();
    x.forEach((xv, j) => (j ? ctx.lineTo(px(xv), py(s.y[j])) : ctx.moveTo(px(xv), py(s.y[j]))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  if (marker !== undefined && marker <= xMax) {
    ctx.strokeStyle = "#999";
    ctx.setLineDash([2, 3]);
    ctx.beginPath();
    ctx.moveTo(px(marker), pad / 2);
    ctx.lineTo(px(marker), h - pad);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

function redrawDrive() {
  $("drive-err").textContent = "";
  try {
    const args = [num("nbar"), num("eta"), num("omega"), num("tmax")];
    const pop = populationCurves(...args, POINTS);
    const fi = fisherCurve(...args, POINTS, Math.round(num("shots")));
    plot($("pop"), pop.times_us, [
      { y: pop.numeric, color: "#1f77b4" },
      { y: pop.reduced, color: "#d62728", dash: [6, 4] },
      { y: pop.extended, color: "#2ca02c", dash: [2, 3] },
    ], "Pₑ", fi.t_star_us);
    plot($("fisher"), fi.times_us, [{ y: fi.fisher, color: "#9467bd" }], "F (1/shot)", fi.t_star_us);
    $("plan").textContent =
      `Optimal probe t* = ${fi.t_star_us.toFixed(2)} μs at Pₑ* = ${fi.pe_star.toFixed(5)}; ` +
      `σ(n̄) ≥ ${fi.crb_at_optimum.toPrecision(3)} with ${Math.round(num("shots"))} shots.`;
    pop.free();
    fi.free();
  } catch (e) {
    $("drive-err").textContent = String(e.message ?? e);
  }
}

function redrawEstimate() {
  $("est-err").textContent = "";
  try {
    const e = estimate(Math.round(num("k")), Math.round(num("n")), num("eta"), num("omega"), num("tprobe"), num("maxnbar"));
    $("pn").textContent = e.point_nbar.toFixed(3);
    $("ps").textContent = e.point_std.toFixed(3);
    $("pf").textContent = e.point_clipped ? "clipped" : "";
    $("mn").textContent = e.mle_nbar.toFixed(3);
    $("ms").textContent = e.mle_std.toFixed(3);
    $("mf").textContent = e.mle_boundary ? "boundary" : "";
    e.free();
  } catch (err) {
    $("est-err").textContent = String(err.message ?? err);
  }
}

await init();
for (const id of ["nbar", "eta", "omega", "tmax", "shots"]) $(id).addEventListener("input", () => { redrawDrive(); redrawEstimate(); });
for (const id of ["k", "n", "tprobe", "maxnbar"]) $(id).addEventListener("input", redrawEstimate);
redrawDrive();
redrawEstimate();
