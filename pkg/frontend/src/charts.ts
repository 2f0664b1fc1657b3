// Minimal SVG series rendering: sparkline path plus latest-value readout.

import type { SeriesPoint } from './types.js';

export interface SparkOptions {
  width?: number;
  height?: number;
}

function numeric(points: SeriesPoint[]): { ts: string; value: number }[] {
  return points
    .map((p) => ({
      ts: p.ts,
      value:
        typeof p.value === 'boolean' ? (p.value ? 1 : 0) : Number(p.value),
    }))
    .filter((p) => Number.isFinite(p.value));
}

/** SVG path "d" for the series; empty string when nothing to draw. */
export function sparklinePath(
  points: SeriesPoint[],
  options: SparkOptions = {},
): string {
  const data = numeric(points);
  if (data.length === 0) return '';
  const width = options.width ?? 220;
  const height = options.height ?? 48;
  const values = data.map((p) => p.value);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const step = data.length > 1 ? width / (data.length - 1) : 0;
  return data
    .map((p, i) => {
      const x = (i * step).toFixed(1);
      const y = (height - ((p.value - lo) / span) * (height - 4) - 2).toFixed(1);
      return `${i === 0 ? 'M' : 'L'}${x},${y}`;
    })
    .join(' ');
}

export function renderMetric(
  container: HTMLElement,
  label: string,
  points: SeriesPoint[],
  unit = '',
): void {
  const panel = document.createElement('div');
  panel.className = 'metric-panel';
  const data = numeric(points);
  const latest = data.length ? data[data.length - 1].value : null;
  const head = document.createElement('div');
  head.className = 'metric-head';
  head.innerHTML =
    `<span class="metric-label">${label}</span>` +
    `<span class="metric-value">${latest === null ? '—' : latest}${unit}</span>`;
  panel.appendChild(head);

  const d = sparklinePath(points);
  if (d) {
    const svg = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
    svg.setAttribute('viewBox', '0 0 220 48');
    svg.setAttribute('class', 'sparkline');
    const path = document.createElementNS('http://www.w3.org/2000/svg', 'path');
    path.setAttribute('d', d);
    path.setAttribute('fill', 'none');
    svg.appendChild(path);
    panel.appendChild(svg);
  }
  container.appendChild(panel);
}
