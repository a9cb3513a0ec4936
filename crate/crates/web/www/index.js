import init, { bifurcationPoints, sphereSweep, isotropyArrival } from "./pkg/geostab_web.js";

const $ = (id) => document.getElementById(id);

function frame(canvas, xr, yr, pad = 40) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const sx = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0])) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - yr[0]) / (yr[1] - yr[0])) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(xr[0].toPrecision(3), pad, h - pad + 14);
  ctx.fillText(xr[1].toPrecision(3), w - pad - 30, h - pad + 14);
  ctx.fillText(yr[0].toPrecision(3), 2, h - pad);
  ctx.fillText(yr[1].toPrecision(3), 2, pad + 8);
  return { ctx, sx, sy };
}

function guard(errId, f) {
  try {
    $(errId).textContent = "";
    f();
  } catch (e) {
    $(errId).textContent = String(e);
  }
}

function drawBifurcation() {
  guard("berr", () => {
    const z0 = Number($("bz0").value);
    $("bz0v").textContent = z0.toFixed(4);
    const hmax = Number($("bhmax").value);
    const pts = bifurcationPoints(z0, hmax, Number($("bn").value));
    const { ctx, sx, sy } = frame($("bcanvas"), [0, hmax], [-1, 1]);
    ctx.fillStyle = "#1f5fa8";
    for (let i = 0; i < pts.length; i += 2) {
      ctx.fillRect(sx(pts[i]) - 1, sy(pts[i + 1]) - 1, 2, 2);
    }
  });
}

function drawSweep() {
  guard("serr", () => {
    const hmin = Number($("shmin").value), hmax = Number($("shmax").value);
    const out = sphereSweep(
      $("smethod").value,
      Number($("stx").value), Number($("spx").value),
      Number($("sty").value), Number($("spy").value),
      hmin, hmax, 200,
    );
    let lo = Infinity, hi = -Infinity;
    for (let i = 0; i < out.length; i += 3) {
      for (const v of [out[i + 1], out[i + 2]]) {
        if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
      }
    }
    const m = 0.05 * (hi - lo || 1);
    const { ctx, sx, sy } = frame($("scanvas"), [hmin, hmax], [lo - m, hi + m]);
    ctx.setLineDash([5, 4]);
    ctx.strokeStyle = "#888";
    ctx.beginPath();
    ctx.moveTo(sx(hmin), sy(out[1]));
    ctx.lineTo(sx(hmax), sy(out[1]));
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.strokeStyle = "#c0392b";
    ctx.beginPath();
    let pen = false;
    for (let i = 0; i < out.length; i += 3) {
      if (!Number.isFinite(out[i + 2])) { pen = false; continue; }
      const [x, y] = [sx(out[i]), sy(out[i + 2])];
      pen ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
      pen = true;
    }
    ctx.stroke();
  });
}

function drawIsotropy() {
  guard("ierr", () => {
    const theta = Number($("itheta").value), h = Number($("ih").value);
    $("ithetav").textContent = theta.toFixed(2);
    $("ihv").textContent = h.toFixed(2);
    const out = isotropyArrival(theta, 0, h, -2, 2, 161);
    const { ctx, sx, sy } = frame($("icanvas"), [-1.1, 1.1], [-1.1, 1.1], 20);
    const r = Math.sin(theta);
    ctx.strokeStyle = "#bbb";
    ctx.beginPath();
    ctx.arc(sx(0), sy(0), sx(r) - sx(0), 0, 2 * Math.PI);
    ctx.stroke();
    for (let i = 0; i < out.length; i += 4) {
      if (!Number.isFinite(out[i + 1])) continue;
      const t = (out[i] + 2) / 4;
      ctx.fillStyle = `hsl(${240 - 240 * t}, 70%, 45%)`;
      ctx.fillRect(sx(out[i + 1]) - 2, sy(out[i + 2]) - 2, 4, 4);
    }
    ctx.strokeStyle = "#000";
    ctx.beginPath();
    ctx.arc(sx(r * Math.cos(h)), sy(r * Math.sin(h)), 6, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillStyle = "#444";
    ctx.fillText("blue: c = −2, red: c = 2", 24, 34);
  });
}

await init();
for (const id of ["bz0", "bhmax", "bn"]) $(id).addEventListener("input", drawBifurcation);
for (const id of ["smethod", "stx", "spx", "sty", "spy", "shmin", "shmax"]) $(id).addEventListener("input", drawSweep);
for (const id of ["itheta", "ih"]) $(id).addEventListener("input", drawIsotropy);
drawBifurcation();
drawSweep();
drawIsotropy();
