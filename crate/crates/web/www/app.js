// Glue generated by `wasm-bindgen --target web` lives in ./pkg.
import init, { lambda_curve, AdaptiveDemo, coercivity_report } from "./pkg/signfem_web.js";

const $ = (id) => document.getElementById(id);

function report(err) {
  $("status").textContent = String(err);
}

function drawCurve() {
  const canvas = $("curve");
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  const data = lambda_curve(-0.01, -1000, 400);
  const lx = (mu) => Math.log10(-mu);
  const x = (mu) => pad + ((lx(mu) + 2) / 5) * (w - 2 * pad);
  const y = (l) => h - pad - l * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  for (let e = -2; e <= 3; e++) {
    ctx.fillText(`-1e${e}`, x(-Math.pow(10, e)) - 14, h - pad + 16);
  }
  for (const l of [0, 0.5, 1]) ctx.fillText(l.toFixed(1), 8, y(l) + 4);
  ctx.fillText("mu (log scale in |mu|)", w / 2 - 50, h - 6);
  ctx.strokeStyle = "#c00";
  ctx.lineWidth = 2;
  ctx.beginPath();
  let pen = false;
  for (let i = 0; i < data.length; i += 2) {
    const mu = data[i], l = data[i + 1];
    if (Number.isNaN(l)) { pen = false; continue; }
    if (pen) ctx.lineTo(x(mu), y(l)); else ctx.moveTo(x(mu), y(l));
    pen = true;
  }
  ctx.stroke();
}

let demo = null;

function resetDemo() {
  try {
    if (demo) demo.free();
    demo = new AdaptiveDemo(parseFloat($("demo-mu").value), parseInt($("demo-n").value, 10));
    demo.step();
    drawMesh();
    report("");
  } catch (e) {
    demo = null;
    report(e);
  }
}

function stepDemo(count) {
  if (!demo) return resetDemo();
  try {
    for (let i = 0; i < count; i++) demo.step();
    drawMesh();
  } catch (e) {
    report(e);
  }
}

function drawMesh() {
  const canvas = $("mesh");
  const ctx = canvas.getContext("2d");
  const s = canvas.width / 2.1;
  const px = (x) => canvas.width / 2 + x * s;
  const py = (y) => canvas.height / 2 - y * s;
  const v = demo.vertices(), t = demo.triangles(), eta = demo.indicators(), side = demo.subdomains();
  const marked = new Set(demo.marked());
  let lo = Infinity, hi = 0;
  for (const e of eta) if (e > 0) { lo = Math.min(lo, e); hi = Math.max(hi, e); }
  const span = Math.log(hi / lo) || 1;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let k = 0; k < eta.length; k++) {
    const a = t[3 * k], b = t[3 * k + 1], c = t[3 * k + 2];
    ctx.beginPath();
    ctx.moveTo(px(v[2 * a]), py(v[2 * a + 1]));
    ctx.lineTo(px(v[2 * b]), py(v[2 * b + 1]));
    ctx.lineTo(px(v[2 * c]), py(v[2 * c + 1]));
    ctx.closePath();
    const q = eta[k] > 0 ? Math.log(eta[k] / lo) / span : 0;
    const base = side[k] ? [225, 235, 250] : [255, 255, 255];
    const r = Math.round(base[0] + (180 - base[0]) * q);
    const g = Math.round(base[1] + (20 - base[1]) * q);
    const bl = Math.round(base[2] + (20 - base[2]) * q);
    ctx.fillStyle = `rgb(${r},${g},${bl})`;
    ctx.fill();
    ctx.strokeStyle = marked.has(k) ? "#000" : "#bbb";
    ctx.lineWidth = marked.has(k) ? 1.2 : 0.4;
    ctx.stroke();
  }
  $("table").textContent = demo.table_text();
}

function runCoercivity() {
  try {
    $("coer-out").textContent = coercivity_report(
      $("coer-geom").value,
      parseFloat($("coer-mu").value),
      parseInt($("coer-levels").value, 10),
    );
    report("");
  } catch (e) {
    report(e);
  }
}

async function main() {
  await init();
  drawCurve();
  resetDemo();
  $("demo-reset").onclick = resetDemo;
  $("demo-step").onclick = () => stepDemo(1);
  $("demo-five").onclick = () => stepDemo(5);
  $("coer-run").onclick = runCoercivity;
  runCoercivity();
}

main().catch(report);
