import init, { kernel_response, spectrum_demo, inpaint_demo } from "./pkg/chebshrink_web.js";

const $ = (id) => document.getElementById(id);

function bind(id) {
  const el = $(id), out = $(id + "-v");
  const show = () => { if (out) out.textContent = el.value; };
  show();
  el.addEventListener("input", show);
  return el;
}

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(30, 10); ctx.lineTo(30, h - 20); ctx.lineTo(w - 10, h - 20);
  ctx.stroke();
}

function line(ctx, xs, ys, sx, sy, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, sx(x), sy(ys[i])));
  ctx.stroke();
}

function drawKernel() {
  const c = $("k-plot"), ctx = c.getContext("2d");
  try {
    const r = kernel_response($("k-kind").value, +$("k-tau").value, +$("k-alpha").value, 1001);
    const xs = r.x, xmax = xs[xs.length - 1];
    const lo = -0.4, hi = 1.4;
    const sx = (x) => 30 + (x / xmax) * (c.width - 40);
    const sy = (y) => c.height - 20 - ((Math.min(hi, Math.max(lo, y)) - lo) / (hi - lo)) * (c.height - 30);
    axes(ctx, c.width, c.height);
    line(ctx, xs, r.exact, sx, sy, "#222");
    line(ctx, xs, r.cpa, sx, sy, "#d33");
    $("k-out").textContent = `stopband deviation ${r.stopband.toExponential(3)}  (black: exact, red: CPA)`;
  } catch (e) {
    $("k-out").textContent = String(e);
  }
}

function drawSpectrum() {
  const c = $("s-plot"), ctx = c.getContext("2d");
  try {
    const r = spectrum_demo(BigInt($("s-seed").value || 0), +$("s-tau").value, +$("s-alpha").value);
    const sets = [[r.input, "#bbb"], [r.exact, "#222"], [r.cpa, "#d33"]];
    const n = r.input.length, smax = r.input[0];
    const bw = (c.width - 40) / n;
    axes(ctx, c.width, c.height);
    sets.forEach(([vals, color], s) => {
      ctx.fillStyle = color;
      vals.forEach((v, i) => {
        const hgt = (v / smax) * (c.height - 30);
        ctx.fillRect(31 + i * bw + s * bw / 3, c.height - 20 - hgt, bw / 3 - 1, hgt);
      });
    });
    $("s-out").textContent = `relative Frobenius error of CPA vs exact: ${r.rel_error.toExponential(3)}  (grey: input, black: exact, red: CPA)`;
  } catch (e) {
    $("s-out").textContent = String(e);
  }
}

function paint(canvas, pixels, size) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(size, size);
  pixels.forEach((v, i) => {
    const hole = Number.isNaN(v);
    const g = hole ? 0 : Math.round(Math.min(1, Math.max(0, v)) * 255);
    img.data.set(hole ? [200, 40, 40, 255] : [g, g, g, 255], 4 * i);
  });
  const tmp = new OffscreenCanvas(size, size);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function runInpaint() {
  $("i-out-text").textContent = "running...";
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const r = inpaint_demo(+$("i-hole").value, +$("i-alpha").value);
      const ms = performance.now() - t0;
      paint($("i-in"), r.input, r.size);
      paint($("i-out"), r.output, r.size);
      $("i-out-text").textContent =
        `converged=${r.converged} after ${r.iterations} iterations, hole RMSE ${r.hole_rmse.toExponential(3)}, ${ms.toFixed(0)} ms`;
    } catch (e) {
      $("i-out-text").textContent = String(e);
    }
  }, 0);
}

await init();
["k-kind", "k-tau", "k-alpha"].forEach((id) => bind(id).addEventListener("input", drawKernel));
["s-tau", "s-alpha", "s-seed"].forEach((id) => bind(id).addEventListener("input", drawSpectrum));
bind("i-hole");
$("i-run").addEventListener("click", runInpaint);
drawKernel();
drawSpectrum();
runInpaint();
