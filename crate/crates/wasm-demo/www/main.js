import init, { scanBeta, outputDistribution, feasibleCounts } from "./pkg/dgmvp_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function instance() {
  return { n: num("n"), l: num("l"), seed: num("seed"), initial: $("initial").value };
}

function report(err) {
  $("status").textContent = String(err);
  $("status").className = "error";
}

function drawScan() {
  const { n, l, seed, initial } = instance();
  let scan;
  try {
    scan = JSON.parse(scanBeta(n, l, num("p"), seed, initial, 361));
  } catch (e) {
    return report(e);
  }
  const c = $("plot");
  const g = c.getContext("2d");
  const pad = 30;
  const w = c.width - 2 * pad;
  const h = c.height - 2 * pad;
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#555";
  g.fillText("0", pad - 4, c.height - pad + 14);
  g.fillText("2π", pad + w - 8, c.height - pad + 14);
  g.fillText("1", pad - 14, pad + 4);
  g.fillText("0", pad - 14, pad + h + 4);
  g.strokeStyle = "#4a7bd0";
  g.beginPath();
  scan.betas.forEach((b, i) => {
    const x = pad + (b / (2 * Math.PI)) * w;
    const y = pad + (1 - scan.alpha[i]) * h;
    if (i === 0) g.moveTo(x, y);
    else g.lineTo(x, y);
  });
  g.stroke();
  $("status").textContent = `min normalised cost ${Math.min(...scan.alpha).toFixed(4)}`;
  $("status").className = "";
}

function drawDistribution() {
  const { n, l, seed, initial } = instance();
  const gamma = num("gamma");
  const beta = num("beta");
  $("angles").textContent = `gamma ${gamma.toFixed(2)}, beta ${beta.toFixed(2)}`;
  let rows;
  try {
    rows = JSON.parse(outputDistribution(n, l, seed, initial, gamma, beta));
  } catch (e) {
    return report(e);
  }
  const body = rows
    .map(
      (r) =>
        `<tr class="${r.optimal ? "optimal" : ""}"><td><code>${r.bits}</code></td><td>${r.lots.join(", ")}</td>` +
        `<td>${r.cost.toFixed(5)}</td><td>${r.probability.toFixed(4)}</td>` +
        `<td style="text-align:left"><span class="bar" style="width:${(200 * r.probability).toFixed(1)}px"></span></td></tr>`
    )
    .join("");
  $("dist").innerHTML =
    "<table><tr><th>bits</th><th>lots</th><th>cost</th><th>probability</th><th></th></tr>" + body + "</table>";
}

function drawCounts() {
  const rows = JSON.parse(feasibleCounts(6, 4));
  const body = rows
    .map((r) => `<tr><td>${r.n}</td><td>${r.l}</td><td>${r.feasible}</td><td>${r.unconstrained}</td></tr>`)
    .join("");
  $("count-table").innerHTML =
    "<table><tr><th>n</th><th>l</th><th>feasible</th><th>2^(nl)</th></tr>" + body + "</table>";
}

await init();
$("scan").addEventListener("click", drawScan);
$("counts").addEventListener("click", drawCounts);
for (const id of ["gamma", "beta", "n", "l", "seed", "initial"]) {
  $(id).addEventListener("input", drawDistribution);
}
drawScan();
drawDistribution();
