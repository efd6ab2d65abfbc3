import init, { profile, theta_curve, roots_vs_m } from "./pkg/radlab_web.js";

const num = (box, name) => Number(box.querySelector(`[name=${name}]`).value);

// series: [{x, y, color, dots}]; logx plots log10 x.
function plot(canvas, series, logx) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  ctx.clearRect(0, 0, W, H);
  const fx = logx ? Math.log10 : (v) => v;
  const xs = series.flatMap((s) => s.x.map(fx)), ys = series.flatMap((s) => s.y);
  if (xs.length === 0) return;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (v) => pad + ((fx(v) - x0) / (x1 - x0 || 1)) * (W - 2 * pad);
  const sy = (v) => H - pad - ((v - y0) / (y1 - y0 || 1)) * (H - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  const xl = (v) => (logx ? "1e" + v.toFixed(1) : v.toPrecision(3));
  ctx.fillText(xl(x0), pad, H - pad + 14);
  ctx.fillText(xl(x1), W - pad - 40, H - pad + 14);
  ctx.fillText(y0.toPrecision(4), 2, H - pad);
  ctx.fillText(y1.toPrecision(4), 2, pad + 4);
  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    if (s.dots) {
      s.x.forEach((v, i) => ctx.fillRect(sx(v) - 1.5, sy(s.y[i]) - 1.5, 3, 3));
    } else {
      ctx.beginPath();
      s.x.forEach((v, i) => (i ? ctx.lineTo(sx(v), sy(s.y[i])) : ctx.moveTo(sx(v), sy(s.y[i]))));
      ctx.stroke();
    }
  }
}

// view(box) returns {error} or {note, series, logx}.
function wire(id, view) {
  const box = document.getElementById(id);
  const msg = box.querySelector(".msg");
  const canvas = box.querySelector("canvas");
  const go = () => {
    const v = view(box);
    msg.textContent = v.error ?? v.note;
    if (v.error) canvas.getContext("2d").clearRect(0, 0, canvas.width, canvas.height);
    else plot(canvas, v.series, v.logx);
  };
  box.querySelector("button").addEventListener("click", go);
  go();
}

await init();

wire("profile", (b) => {
  const out = JSON.parse(profile(num(b, "n"), num(b, "p"), num(b, "q"), num(b, "m"),
    b.querySelector("[name=terms]").value, num(b, "u0"), num(b, "du0"), num(b, "from"), num(b, "to")));
  if (out.error) return out;
  return {
    note: `${out.termination} at r = ${out.location.toPrecision(8)}`,
    series: [{ x: out.r, y: out.u, color: "#1f4e9a" }],
    logx: false,
  };
});

wire("theta", (b) => {
  const out = JSON.parse(theta_curve(num(b, "n"), num(b, "q"), num(b, "m"), num(b, "r0"), num(b, "tau"), 120));
  if (out.error) return out;
  const series = [{ x: out.tau, y: out.theta, color: "#1f4e9a" }];
  const inf = out.theta_inf;
  if (inf != null) series.push({ x: [out.tau[0], out.tau.at(-1)], y: [inf, inf], color: "#c55" });
  return { note: inf != null ? `Θ(∞) = ${inf.toPrecision(8)}` : "", series, logx: true };
});

wire("roots", (b) => {
  const out = JSON.parse(roots_vs_m(num(b, "n"), num(b, "p"), num(b, "lo"), num(b, "hi"), 200));
  if (out.error) return out;
  const x = [], y = [];
  for (const row of out.rows) for (const r of row.roots) { x.push(row.m); y.push(r); }
  return {
    note: `q = ${out.q.toPrecision(6)}, μ* = ${out.mu_star.toPrecision(8)}`,
    series: [{ x, y, color: "#1f4e9a", dots: true }],
    logx: false,
  };
});
