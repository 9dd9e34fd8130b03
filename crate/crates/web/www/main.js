import init, { regularityGrid, lcmExplorer, andoResiduals } from "./pkg/lcm_dilation_web.js";

const $ = (id) => document.getElementById(id);

function color(v, scale) {
  const x = Math.max(-1, Math.min(1, v / scale));
  return x >= 0
    ? [Math.round(255 * (1 - x)), Math.round(255 - 90 * x), Math.round(255 * (1 - x))]
    : [255, Math.round(255 * (1 + x)), Math.round(255 * (1 + x))];
}

let grid = null;

function drawHeat() {
  const steps = Number($("heat-steps").value);
  try {
    grid = { steps, values: regularityGrid($("heat-monoid").value, steps) };
  } catch (e) {
    $("heat-info").textContent = String(e);
    return;
  }
  const scale = Math.max(...grid.values.map(Math.abs), 1e-12);
  const canvas = $("heat");
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(steps, steps);
  grid.values.forEach((v, k) => {
    const [r, g, b] = color(v, scale);
    // row i is s, drawn bottom-up
    const i = Math.floor(k / steps), j = k % steps;
    const o = 4 * ((steps - 1 - i) * steps + j);
    img.data.set([r, g, b, 255], o);
  });
  const tmp = new OffscreenCanvas(steps, steps);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

$("heat").addEventListener("mousemove", (ev) => {
  if (!grid) return;
  const n = grid.steps;
  const j = Math.min(n - 1, Math.floor((ev.offsetX / ev.target.width) * n));
  const i = n - 1 - Math.min(n - 1, Math.floor((ev.offsetY / ev.target.height) * n));
  const v = grid.values[i * n + j];
  $("heat-info").textContent =
    `s = ${(i / (n - 1)).toFixed(3)}, t = ${(j / (n - 1)).toFixed(3)}, min eigenvalue = ${v.toExponential(3)}`;
});

function runLcm() {
  try {
    const v = JSON.parse(lcmExplorer($("lcm-monoid").value, $("lcm-p").value, $("lcm-q").value, Number($("lcm-r").value)));
    const lines = [
      `monoid   ${v.monoid}`,
      `p        ${v.p}`,
      `q        ${v.q}`,
      `p ∨ q    ${v.lcm ?? "none (pP ∩ qP is empty)"}`,
    ];
    if (v.quotients) lines.push(`p⁻¹(p∨q) ${v.quotients[0]}`, `q⁻¹(p∨q) ${v.quotients[1]}`);
    lines.push(`ball      ${v.ball.length} elements: ${v.ball.join(" ")}`);
    $("lcm-out").textContent = lines.join("\n");
  } catch (e) {
    $("lcm-out").textContent = String(e);
  }
}

function runAndo() {
  const out = $("ando-out");
  out.textContent = "running...";
  setTimeout(() => {
    try {
      const t = $("ando-t").value.split(/[\s,]+/).filter((x) => x !== "").map(Number);
      const v = JSON.parse(andoResiduals($("ando-mode").value, Number($("ando-s1").value), Number($("ando-s2").value),
        Float64Array.from(t), Number($("ando-l").value), Number($("ando-m").value)));
      if (!v.hypotheses) {
        out.innerHTML = `<p class="fail">${v.monoid}: hypotheses fail (min eigenvalue ${v.min_eigenvalue.toExponential(3)})</p>`;
        return;
      }
      const rows = v.checks.map(([name, r, ok]) =>
        `<tr><td>${name}</td><td>${r.toExponential(2)}</td><td class="${ok ? "pass" : "fail"}">${ok ? "pass" : "FAIL"}</td></tr>`);
      out.innerHTML = `<p>${v.monoid}, valid degree ${v.valid_degree}, model dimension ${v.model_dim}:
        <b class="${v.overall ? "pass" : "fail"}">${v.overall ? "all checks pass" : "some checks fail"}</b></p>
        <table><tr><th>check</th><th>residual</th><th></th></tr>${rows.join("")}</table>`;
    } catch (e) {
      out.textContent = String(e);
    }
  }, 10);
}

await init();
$("heat-go").onclick = drawHeat;
$("lcm-go").onclick = runLcm;
$("ando-go").onclick = runAndo;
drawHeat();
runLcm();
