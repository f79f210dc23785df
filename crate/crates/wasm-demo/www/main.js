import init, { synthTrajectory, extractFeatures, resample } from "./pkg/cubescore_wasm.js";

const pad = document.getElementById("pad");
const ctx = pad.getContext("2d");
const chart = document.getElementById("chart");
const $ = (id) => document.getElementById(id);

let trajectory = { id: "drawing", label: null, meta: {}, points: [] };
let extraction = null;
let stroke = -1;
let origin = null;

function status(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

// Synthetic drawings live on an 800 x 800 canvas; fit them to the pad.
function view() {
  const pts = trajectory.points;
  if (pts.length === 0 || trajectory.id === "drawing") return { s: 1, dx: 0, dy: 0 };
  const xs = pts.map((p) => p.x), ys = pts.map((p) => p.y);
  const minX = Math.min(...xs), maxX = Math.max(...xs), minY = Math.min(...ys), maxY = Math.max(...ys);
  const s = 0.8 * pad.width / Math.max(maxX - minX, maxY - minY, 1);
  return { s, dx: pad.width / 2 - s * (minX + maxX) / 2, dy: pad.height / 2 - s * (minY + maxY) / 2 };
}

function draw() {
  ctx.clearRect(0, 0, pad.width, pad.height);
  const { s, dx, dy } = view();
  const at = (p) => [s * p[0] + dx, s * p[1] + dy];
  ctx.strokeStyle = "#222";
  ctx.lineWidth = 2;
  let prev = null;
  for (const p of trajectory.points) {
    const [x, y] = at([p.x, p.y]);
    if (prev && prev.stroke_id === p.stroke_id) {
      ctx.beginPath();
      ctx.moveTo(...at([prev.x, prev.y]));
      ctx.lineTo(x, y);
      ctx.stroke();
    }
    prev = p;
  }
  if (!extraction) return;
  ctx.fillStyle = "rgba(200, 40, 40, 0.8)";
  for (const seg of extraction.segments) {
    const [x, y] = at(seg.start);
    ctx.fillRect(x - 2, y - 2, 4, 4);
  }
}

function point(e) {
  const r = pad.getBoundingClientRect();
  if (origin === null) origin = e.timeStamp;
  return {
    x: e.clientX - r.left,
    y: e.clientY - r.top,
    t: Math.floor((e.timeStamp - origin) * 10) / 10,
    stroke_id: stroke,
  };
}

pad.addEventListener("pointerdown", (e) => {
  if (trajectory.id !== "drawing") clear();
  stroke += 1;
  pad.setPointerCapture(e.pointerId);
  trajectory.points.push(point(e));
  draw();
});

pad.addEventListener("pointermove", (e) => {
  if (!pad.hasPointerCapture(e.pointerId)) return;
  const events = e.getCoalescedEvents ? e.getCoalescedEvents() : [e];
  for (const ev of events) trajectory.points.push(point(ev));
  draw();
  status(`${trajectory.points.length} points`);
});

function clear() {
  trajectory = { id: "drawing", label: null, meta: {}, points: [] };
  extraction = null;
  stroke = -1;
  origin = null;
  $("matrix").innerHTML = "";
  draw();
  status("");
}

$("clear").onclick = clear;

$("download").onclick = () => {
  const blob = new Blob([JSON.stringify(trajectory)], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = `${trajectory.id}.json`;
  a.click();
};

$("generate").onclick = () => {
  try {
    trajectory = JSON.parse(synthTrajectory(
      Number($("category").value), Number($("seed").value), Number($("index").value), $("noiseless").checked));
    extraction = null;
    $("matrix").innerHTML = "";
    draw();
    status(`${trajectory.id}: ${trajectory.points.length} points`);
  } catch (err) {
    status(err.message ?? String(err), true);
  }
};

function renderMatrix() {
  const rows = extraction.matrix.map((row, i) =>
    `<tr><th>${extraction.feature_names[i]}</th>${row.slice(0, 8).map((v) => `<td>${v.toFixed(2)}</td>`).join("")}</tr>`);
  const more = extraction.l_std > 8 ? ` (first 8 of ${extraction.l_std} columns)` : "";
  $("matrix").innerHTML = `<p>${extraction.segments.length} segments → ${extraction.l_std} steps${more}</p><table>${rows.join("")}</table>`;
  $("row").innerHTML = extraction.feature_names.map((n, i) => `<option value="${i}">${n}</option>`).join("");
}

$("extract").onclick = () => {
  try {
    extraction = JSON.parse(extractFeatures(JSON.stringify(trajectory), Number($("lstd").value), $("featureset").value));
    renderMatrix();
    draw();
    status(`${extraction.points} points, ${extraction.segments.length} segments`);
  } catch (err) {
    status(err.message ?? String(err), true);
  }
};

function plot(series, colors) {
  const c = chart.getContext("2d");
  c.clearRect(0, 0, chart.width, chart.height);
  const all = series.flat();
  const lo = Math.min(...all), hi = Math.max(...all);
  const y = (v) => chart.height - 10 - (chart.height - 20) * (hi > lo ? (v - lo) / (hi - lo) : 0.5);
  series.forEach((values, k) => {
    c.strokeStyle = colors[k];
    c.fillStyle = colors[k];
    c.beginPath();
    values.forEach((v, i) => {
      const x = 10 + (chart.width - 20) * (values.length > 1 ? i / (values.length - 1) : 0.5);
      i === 0 ? c.moveTo(x, y(v)) : c.lineTo(x, y(v));
      c.fillRect(x - 2, y(v) - 2, 4, 4);
    });
    c.stroke();
  });
}

$("resample").onclick = () => {
  if (!extraction) {
    status("extract features first", true);
    return;
  }
  try {
    const name = extraction.feature_names[Number($("row").value)];
    const column = ["x1", "y1", "x2", "y2", "x3", "y3", "x4", "y4", "x5", "y5", "dis", "sim", "v", "a"].indexOf(name);
    const raw = extraction.segments.map((s) => s.features[column]);
    const out = JSON.parse(resample(JSON.stringify(raw), Number($("length").value)));
    plot([raw, out], ["#999", "#c22"]);
    status(`${name}: ${raw.length} segments → ${out.length} values`);
  } catch (err) {
    status(err.message ?? String(err), true);
  }
};

await init();
draw();
status("ready");
