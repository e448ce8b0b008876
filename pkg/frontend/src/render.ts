import type { AuthResponse, ReportPayload } from "./types.js";

/** SVG polyline for a unit-square curve; x/y already in [0, 1]. */
export function curveSvg(
  xs: number[],
  ys: number[],
  width = 320,
  height = 220,
  label = "",
): string {
  const pad = 28;
  const px = (x: number) => pad + x * (width - 2 * pad);
  const py = (y: number) => height - pad - y * (height - 2 * pad);
  const points = xs.map((x, i) => `${px(x).toFixed(1)},${py(ys[i]).toFixed(1)}`).join(" ");
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="curve" role="img" aria-label="${label}">` +
    `<rect x="${pad}" y="${pad}" width="${width - 2 * pad}" height="${height - 2 * pad}"` +
    ` fill="none" stroke="#ccc"/>` +
    `<polyline points="${points}" fill="none" stroke="#2563eb" stroke-width="2"/>` +
    `<text x="${width / 2}" y="${height - 6}" text-anchor="middle" font-size="11">${label}</text>` +
    `</svg>`
  );
}

export function renderAuthResult(r: AuthResponse): string {
  const cls = r.decision === "accept" ? "accept" : "reject";
  const rows = r.per_trial
    .map(
      (t, i) =>
        `<tr><td>${i + 1}</td><td>${t.accepted ? "accept" : "reject"}</td>` +
        `<td>${t.score.toFixed(3)}</td><td>${t.latency_ms.toFixed(2)} ms</td></tr>`,
    )
    .join("");
  return (
    `<div class="decision ${cls}">${r.decision.toUpperCase()}` +
    ` <small>(${r.accepted_trials}/${r.total_trials} trials, ` +
    `score ${r.score.toFixed(3)}, ${r.latency_ms.toFixed(2)} ms/query)</small></div>` +
    `<table><thead><tr><th>trial</th><th>result</th><th>score</th><th>latency</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderReport(report: ReportPayload): string {
  const parts: string[] = [];
  if (typeof report.accuracy === "number") {
    parts.push(`<p>accuracy <b>${(report.accuracy * 100).toFixed(2)}%</b></p>`);
  }
  if (report.cmc && report.cmc.length > 0) {
    const n = report.cmc.length;
    const xs = report.cmc.map((_, i) => (n === 1 ? 1 : i / (n - 1)));
    parts.push(curveSvg(xs, report.cmc, 320, 220, `CMC (rank 1..${n})`));
  }
  if (report.far_frr) {
    const { thresholds, far, frr } = report.far_frr;
    const lo = Math.min(...thresholds);
    const hi = Math.max(...thresholds);
    const xs = thresholds.map((t) => (hi === lo ? 0.5 : (t - lo) / (hi - lo)));
    parts.push(curveSvg(xs, far, 320, 220, "FAR vs threshold"));
    parts.push(curveSvg(xs, frr, 320, 220, "FRR vs threshold"));
  }
  if (report.roc) {
    for (const [cls, pts] of Object.entries(report.roc).slice(0, 3)) {
      parts.push(
        curveSvg(pts.fpr, pts.tpr, 320, 220, `ROC class ${cls} (AUC ${pts.auc.toFixed(3)})`),
      );
    }
  }
  if (parts.length === 0) {
    parts.push("<p>report contains no renderable curves</p>");
  }
  return parts.join("\n");
}

export const EMPTY_REPORT_MESSAGE =
  "No evaluation report yet. Run the evaluation pipeline (biokey eval or " +
  "biokey template) with this service's state directory.";
