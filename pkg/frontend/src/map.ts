// Fleet map: one marker per device on an offline coordinate grid.

import { boundsOf, gridLines, projector, type Viewport } from './geo.js';
import type { Alarm, Device } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

export interface FleetMapOptions {
  view?: Viewport;
  onSelect?: (deviceId: string) => void;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  name: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

/** Device ids that currently have an alarm-worthy condition. */
export function alarmedDevices(alarms: Alarm[]): Set<string> {
  return new Set(alarms.map((a) => a.device_id));
}

export function renderFleet(
  container: HTMLElement,
  devices: Device[],
  alarms: Alarm[],
  options: FleetMapOptions = {},
): void {
  const view = options.view ?? { width: 640, height: 420 };
  container.replaceChildren();

  if (devices.length === 0) {
    const empty = document.createElement('p');
    empty.className = 'empty-state';
    empty.textContent = 'No devices registered yet.';
    container.appendChild(empty);
    return;
  }

  const svg = svgEl('svg', {
    viewBox: `0 0 ${view.width} ${view.height}`,
    class: 'fleet-map',
    role: 'img',
  });
  const bounds = boundsOf(devices.map((d) => d.gps));
  const proj = projector(bounds, view);

  const grid = gridLines(bounds, view);
  for (const x of grid.x) {
    svg.appendChild(
      svgEl('line', { x1: x, y1: 0, x2: x, y2: view.height, class: 'grid-line' }),
    );
  }
  for (const y of grid.y) {
    svg.appendChild(
      svgEl('line', { x1: 0, y1: y, x2: view.width, y2: y, class: 'grid-line' }),
    );
  }

  const alarmed = alarmedDevices(alarms);
  for (const device of devices) {
    const { x, y } = proj(device.gps);
    const marker = svgEl('circle', {
      cx: x,
      cy: y,
      r: 8,
      class: alarmed.has(device.device_id)
        ? 'marker marker-alarm'
        : 'marker marker-ok',
      'data-device': device.device_id,
    });
    const title = svgEl('title');
    title.textContent =
      `${device.device_id} (${device.link})\n` +
      `${device.site.address ?? ''} ${device.place_type}`;
    marker.appendChild(title);
    if (options.onSelect) {
      marker.addEventListener('click', () =>
        options.onSelect?.(device.device_id),
      );
    }
    svg.appendChild(marker);

    const label = svgEl('text', {
      x: x + 11,
      y: y + 4,
      class: 'marker-label',
    });
    label.textContent = device.device_id;
    svg.appendChild(label);
  }
  container.appendChild(svg);
}
