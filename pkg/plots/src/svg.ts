/**
 * Minimal SVG line-chart builder: axes with ticks, one polyline per series,
 * optional log-scaled y axis, and a legend. No runtime dependencies so the
 * figures render anywhere.
 */

export interface Series {
  label: string;
  points: Array<[number, number]>;
}

export interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logY?: boolean;
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const W = 480;
const H = 360;
const MARGIN = { left: 62, right: 14, top: 34, bottom: 46 };

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= n + 1) ?? 10 * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12 * span; v += chosen) {
    ticks.push(v);
  }
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(1);
  return String(Math.round(v * 1000) / 1000);
}

function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderPanel(spec: PanelSpec, xOffset: number): string {
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const logFloor = 1e-12;
  const transform = (y: number) =>
    spec.logY ? Math.log10(Math.max(y, logFloor)) : y;

  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of spec.series) {
    for (const [x, y] of s.points) {
      xs.push(x);
      ys.push(transform(y));
    }
  }
  const x0 = xs.length ? Math.min(...xs) : 0;
  const x1 = xs.length ? Math.max(...xs) : 1;
  const y0 = ys.length ? Math.min(...ys) : 0;
  const y1 = ys.length ? Math.max(...ys) : 1;
  const xSpan = x1 - x0 || 1;
  const ySpan = y1 - y0 || 1;
  const px = (x: number) => MARGIN.left + ((x - x0) / xSpan) * plotW + xOffset;
  const py = (y: number) => MARGIN.top + (1 - (transform(y) - y0) / ySpan) * plotH;

  const parts: string[] = [];
  parts.push(
    `<rect x="${MARGIN.left + xOffset}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#444"/>`,
  );
  parts.push(
    `<text x="${xOffset + W / 2}" y="20" text-anchor="middle" font-size="14" font-weight="bold">${escapeXml(spec.title)}</text>`,
  );
  parts.push(
    `<text x="${xOffset + W / 2}" y="${H - 8}" text-anchor="middle" font-size="12">${escapeXml(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="${xOffset + 16}" y="${H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 ${xOffset + 16} ${H / 2})">${escapeXml(spec.yLabel)}</text>`,
  );
  for (const tx of niceTicks(x0, x1)) {
    const x = px(tx);
    parts.push(`<line x1="${x}" y1="${MARGIN.top + plotH}" x2="${x}" y2="${MARGIN.top + plotH + 4}" stroke="#444"/>`);
    parts.push(`<text x="${x}" y="${MARGIN.top + plotH + 16}" text-anchor="middle" font-size="10">${fmt(tx)}</text>`);
  }
  for (const ty of niceTicks(y0, y1)) {
    const y = MARGIN.top + (1 - (ty - y0) / ySpan) * plotH;
    const label = spec.logY ? `1e${fmt(ty)}` : fmt(ty);
    parts.push(`<line x1="${MARGIN.left + xOffset - 4}" y1="${y}" x2="${MARGIN.left + xOffset}" y2="${y}" stroke="#444"/>`);
    parts.push(`<text x="${MARGIN.left + xOffset - 6}" y="${y + 3}" text-anchor="end" font-size="10">${label}</text>`);
  }
  spec.series.forEach((s, i) => {
    if (s.points.length === 0) return;
    const color = COLORS[i % COLORS.length];
    const path = s.points.map(([x, y]) => `${px(x).toFixed(2)},${py(y).toFixed(2)}`).join(" ");
    parts.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    parts.push(
      `<text x="${MARGIN.left + xOffset + plotW - 6}" y="${MARGIN.top + 14 + 13 * i}" text-anchor="end" font-size="11" fill="${color}">${escapeXml(s.label)}</text>`,
    );
  });
  return parts.join("\n");
}

export function renderFigure(panels: PanelSpec[]): string {
  const width = W * panels.length;
  const body = panels.map((p, i) => renderPanel(p, i * W)).join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${H}" viewBox="0 0 ${width} ${H}">\n` +
    `<rect width="${width}" height="${H}" fill="white"/>\n${body}\n</svg>\n`
  );
}
