// Static driver for the wasm demo. Build the module first (see the crate
// README): wasm-pack build --target web --out-dir www/pkg crates/wasm-demo
import init, { Demo } from "./pkg/auction_gan_demo.js";

const COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

const el = (id) => document.getElementById(id);
const status = el("status");

let demo = null;
let running = false;
let densityImage = null;
let coverageHistory = [];

function currentConfig() {
  return JSON.stringify({
    model: el("model").value,
    n_gans: Number(el("nGans").value),
    lambda: Number(el("lambda").value),
    seed: Number(el("seed").value),
    baseline: el("baseline").checked,
  });
}

function resetSession() {
  try {
    demo = new Demo(currentConfig());
  } catch (e) {
    status.textContent = `config error: ${e}`;
    return;
  }
  coverageHistory = [];
  densityImage = renderDensity();
  drawState(JSON.parse(demo.state_json(300)));
  status.textContent = "ready";
}

function renderDensity() {
  const canvas = el("scatter");
  const res = 140;
  const grid = demo.density_grid(res);
  const off = document.createElement("canvas");
  off.width = res;
  off.height = res;
  const ctx = off.getContext("2d");
  const img = ctx.createImageData(res, res);
  for (let i = 0; i < res * res; i++) {
    const v = Math.pow(grid[i], 0.5); // lift the tails for visibility
    img.data[4 * i + 0] = 255 - 60 * v;
    img.data[4 * i + 1] = 255 - 45 * v;
    img.data[4 * i + 2] = 255 - 20 * v;
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  return off;
}

function toCanvas(canvas, x, y, extent) {
  return [
    ((x + extent) / (2 * extent)) * canvas.width,
    ((extent - y) / (2 * extent)) * canvas.height,
  ];
}

function drawScatter(state) {
  const canvas = el("scatter");
  const ctx = canvas.getContext("2d");
  const extent = demo.extent();
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (densityImage) {
    ctx.imageSmoothingEnabled = true;
    ctx.drawImage(densityImage, 0, 0, canvas.width, canvas.height);
  }
  for (const gan of state.gans) {
    ctx.fillStyle = COLORS[gan.id % COLORS.length];
    ctx.globalAlpha = 0.55;
    for (const [x, y] of gan.samples) {
      const [px, py] = toCanvas(canvas, x, y, extent);
      ctx.fillRect(px - 1.2, py - 1.2, 2.4, 2.4);
    }
  }
  ctx.globalAlpha = 1.0;

  const legend = el("legend");
  legend.innerHTML = state.gans
    .map((g) => {
      const star = state.state.best === g.id ? " *best" : "";
      const ll = g.mean_ll === null ? "-" : g.mean_ll.toFixed(2);
      return `<span style="color:${COLORS[g.id % COLORS.length]}">g${g.id}${star} ll=${ll}</span>`;
    })
    .join("");
}

function drawScores(state) {
  const canvas = el("scores");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const scores = state.state.scores;
  if (!scores) {
    ctx.fillStyle = "#888";
    ctx.font = "12px sans-serif";
    ctx.fillText(state.state.baseline ? "baseline mode: no valuation round" : "no epoch yet", 10, 20);
    return;
  }
  const n = scores.length;
  const maxAbs = Math.max(1e-9, ...scores.map((s) => Math.abs(s)));
  const mid = canvas.height / 2;
  const bw = canvas.width / n;
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(0, mid);
  ctx.lineTo(canvas.width, mid);
  ctx.stroke();
  scores.forEach((s, i) => {
    const h = (s / maxAbs) * (mid - 18);
    ctx.fillStyle = COLORS[i % COLORS.length];
    ctx.globalAlpha = state.state.best === i ? 1.0 : 0.55;
    ctx.fillRect(i * bw + 6, Math.min(mid, mid - h), bw - 12, Math.abs(h));
    ctx.globalAlpha = 1.0;
    ctx.fillStyle = "#444";
    ctx.font = "11px sans-serif";
    ctx.fillText(`g${i}`, i * bw + bw / 2 - 8, canvas.height - 4);
  });
}

function drawCoverage() {
  const canvas = el("coverage");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (coverageHistory.length < 2) {
    ctx.fillStyle = "#888";
    ctx.font = "12px sans-serif";
    ctx.fillText("train to accumulate history", 10, 20);
    return;
  }
  const maxY = Math.max(0.2, ...coverageHistory.map((p) => p.w1));
  const maxX = coverageHistory[coverageHistory.length - 1].epoch;
  ctx.strokeStyle = "#d62728";
  ctx.lineWidth = 1.6;
  ctx.beginPath();
  coverageHistory.forEach((p, idx) => {
    const x = (p.epoch / maxX) * (canvas.width - 10) + 5;
    const y = canvas.height - 14 - (p.w1 / maxY) * (canvas.height - 24);
    if (idx === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  const last = coverageHistory[coverageHistory.length - 1];
  ctx.fillText(`epoch ${last.epoch}: mean w1 = ${last.w1.toFixed(3)}`, 8, 12);
}

function drawState(state) {
  drawScatter(state);
  drawScores(state);

  const defined = state.gans.map((g) => g.coverage_w1).filter((v) => v !== null);
  if (defined.length > 0 && state.state.epoch > 0) {
    coverageHistory.push({
      epoch: state.state.epoch,
      w1: defined.reduce((a, b) => a + b, 0) / defined.length,
    });
  }
  drawCoverage();

  const aux = state.gans
    .map((g) => (g.aux_loss === null ? "-" : g.aux_loss.toExponential(1)))
    .join(" ");
  status.textContent = `epoch ${state.state.epoch}\nmatching losses: ${aux}`;
}

function frame() {
  if (!running) return;
  try {
    const state = JSON.parse(demo.train_epochs(Number(el("speed").value)));
    drawState(state);
  } catch (e) {
    status.textContent = `error: ${e}`;
    running = false;
    el("run").textContent = "run";
    return;
  }
  requestAnimationFrame(frame);
}

init().then(() => {
  resetSession();
  el("run").addEventListener("click", () => {
    running = !running;
    el("run").textContent = running ? "pause" : "run";
    if (running) requestAnimationFrame(frame);
  });
  el("stepBtn").addEventListener("click", () => {
    if (running) return;
    const state = JSON.parse(demo.train_epochs(Number(el("speed").value)));
    drawState(state);
  });
  el("reset").addEventListener("click", () => {
    running = false;
    el("run").textContent = "run";
    resetSession();
  });
  for (const id of ["model", "nGans", "lambda", "seed", "baseline"]) {
    el(id).addEventListener("change", () => {
      running = false;
      el("run").textContent = "run";
      resetSession();
    });
  }
});
