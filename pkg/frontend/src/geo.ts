// Plain-coordinate projection: the map is an offline lat/lon grid, no tiles.

import type { GpsPoint } from './types.js';

export interface Viewport {
  width: number;
  height: number;
}

export interface Bounds {
  minLat: number;
  maxLat: number;
  minLon: number;
  maxLon: number;
}

export function boundsOf(points: GpsPoint[], padFraction = 0.15): Bounds {
  if (points.length === 0) {
    return { minLat: -1, maxLat: 1, minLon: -1, maxLon: 1 };
  }
  let minLat = Infinity;
  let maxLat = -Infinity;
  let minLon = Infinity;
  let maxLon = -Infinity;
  for (const p of points) {
    minLat = Math.min(minLat, p.lat);
    maxLat = Math.max(maxLat, p.lat);
    minLon = Math.min(minLon, p.lon);
    maxLon = Math.max(maxLon, p.lon);
  }
  const latSpan = Math.max(maxLat - minLat, 1e-3);
  const lonSpan = Math.max(maxLon - minLon, 1e-3);
  return {
    minLat: minLat - latSpan * padFraction,
    maxLat: maxLat + latSpan * padFraction,
    minLon: minLon - lonSpan * padFraction,
    maxLon: maxLon + lonSpan * padFraction,
  };
}

export type Projector = (p: GpsPoint) => { x: number; y: number };

export function projector(bounds: Bounds, view: Viewport): Projector {
  const lonSpan = bounds.maxLon - bounds.minLon;
  const latSpan = bounds.maxLat - bounds.minLat;
  return (p) => ({
    x: ((p.lon - bounds.minLon) / lonSpan) * view.width,
    y: (1 - (p.lat - bounds.minLat) / latSpan) * view.height,
  });
}

/** Grid lines for the fallback coordinate grid, in projected coordinates. */
export function gridLines(
  bounds: Bounds,
  view: Viewport,
  steps = 6,
): { x: number[]; y: number[]; labels: { lat: number[]; lon: number[] } } {
  const proj = projector(bounds, view);
  const lats: number[] = [];
  const lons: number[] = [];
  for (let i = 0; i <= steps; i++) {
    lats.push(bounds.minLat + ((bounds.maxLat - bounds.minLat) * i) / steps);
    lons.push(bounds.minLon + ((bounds.maxLon - bounds.minLon) * i) / steps);
  }
  return {
    x: lons.map((lon) => proj({ lat: bounds.minLat, lon }).x),
    y: lats.map((lat) => proj({ lat, lon: bounds.minLon }).y),
    labels: { lat: lats, lon: lons },
  };
}
