// Dashboard wiring: fleet map, device panels, alarms, risk layer, RPC.
// All state comes from REST snapshots plus the SSE stream.

import { ApiClient } from './api.js';
import { renderAlarms } from './alarms.js';
import { renderMetric } from './charts.js';
import { renderFleet } from './map.js';
import { renderRisk, renderTrapList } from './risk.js';
import { RpcPanel } from './rpc.js';
import { LiveStream } from './stream.js';
import type { Alarm, Device } from './types.js';

const METRICS: [string, string, string][] = [
  ['egg_count', 'Eggs read', ''],
  ['temperature_c', 'Temperature', ' °C'],
  ['humidity_pct', 'Humidity', ' %RH'],
  ['water', 'Water present', ''],
  ['tilt', 'Tilt', ''],
  ['battery_pct', 'Battery', ' %'],
  ['rssi', 'Signal', ' dBm'],
];

export class Dashboard {
  private api: ApiClient;
  private stream: LiveStream;
  private rpcPanel: RpcPanel;
  private devices: Device[] = [];
  private alarms: Alarm[] = [];
  private selected: string | null = null;
  private recentEvents: string[] = [];

  constructor(
    private root: Document,
    api?: ApiClient,
    stream?: LiveStream,
  ) {
    this.api = api ?? new ApiClient();
    this.stream = stream ?? new LiveStream();
    this.rpcPanel = new RpcPanel(this.api, this.el('rpc-trail'));
  }

  private el(id: string): HTMLElement {
    const node = this.root.getElementById(id);
    if (!node) throw new Error(`missing #${id} in the page layout`);
    return node;
  }

  async start(): Promise<void> {
    this.stream.onEvent((payload) => {
      if (payload.type === 'rpc') this.rpcPanel.onRpcEvent(payload.data);
      if (payload.type === 'alarm') {
        this.alarms.push(payload.data);
        renderAlarms(this.el('alarm-feed'), this.alarms);
        this.renderMap();
      }
      if (payload.type === 'ingest') {
        this.recentEvents.unshift(
          `${payload.data.ts} ${payload.data.device_id} ${payload.data.kind} ` +
          `eggs=${payload.data.egg_count} (${payload.data.link})`,
        );
        this.recentEvents = this.recentEvents.slice(0, 12);
        this.renderEvents();
        if (payload.data.device_id === this.selected) {
          void this.renderDetail();
        }
      }
    });
    this.stream.open();
    await this.refresh();
    this.bindControls();
  }

  async refresh(): Promise<void> {
    try {
      [this.devices, this.alarms] = await Promise.all([
        this.api.listDevices(),
        this.api.alarms(),
      ]);
      this.el('connectivity').hidden = true;
    } catch (err) {
      this.el('connectivity').hidden = false;
      this.el('connectivity').textContent =
        `Platform unreachable: ${(err as Error).message}`;
      return;
    }
    this.renderMap();
    this.renderDeviceList();
    renderAlarms(this.el('alarm-feed'), this.alarms);
    await this.renderRiskLayer();
    if (!this.selected && this.devices.length) {
      await this.select(this.devices[0].device_id);
    }
  }

  private renderMap(): void {
    renderFleet(this.el('fleet-map'), this.devices, this.alarms, {
      onSelect: (id) => void this.select(id),
    });
  }

  private renderDeviceList(): void {
    const list = this.el('device-list');
    list.replaceChildren();
    for (const device of this.devices) {
      const row = document.createElement('button');
      row.type = 'button';
      row.className =
        device.device_id === this.selected ? 'device-row selected' : 'device-row';
      row.dataset.deviceId = device.device_id;
      row.innerHTML =
        `<strong>${device.device_id}</strong> ` +
        `<span>${device.link}</span> ` +
        `<span>${device.place_type}</span> ` +
        `<span>last seen ${device.last_seen ?? 'never'}</span>`;
      row.addEventListener('click', () => void this.select(device.device_id));
      list.appendChild(row);
    }
  }

  private renderEvents(): void {
    const node = this.el('event-log');
    node.replaceChildren();
    for (const line of this.recentEvents) {
      const div = document.createElement('div');
      div.textContent = line;
      node.appendChild(div);
    }
  }

  async select(deviceId: string): Promise<void> {
    this.selected = deviceId;
    this.renderDeviceList();
    await this.renderDetail();
  }

  private async renderDetail(): Promise<void> {
    if (!this.selected) return;
    const device = this.devices.find((d) => d.device_id === this.selected);
    const panel = this.el('device-detail');
    panel.replaceChildren();
    if (!device) return;

    const head = document.createElement('div');
    head.className = 'device-head';
    head.innerHTML =
      `<h3>${device.device_id}</h3>` +
      `<p>${device.site.address ?? ''}, ${device.site.province ?? ''}, ` +
      `${device.site.country ?? ''} — ${device.place_type}, ` +
      `installed by ${device.installer}</p>` +
      `<p>species ${device.species} · link ${device.link} · fw ${device.fw_version}` +
      `${device.camera ? ` · camera ${device.camera.sensor ?? ''}` : ''}</p>`;
    panel.appendChild(head);

    const metrics = document.createElement('div');
    metrics.className = 'metrics';
    panel.appendChild(metrics);
    for (const [key, label, unit] of METRICS) {
      try {
        const series = await this.api.series(device.device_id, key);
        renderMetric(metrics, label, series.points.slice(-64), unit);
      } catch {
        // metric may not exist yet for this device
      }
    }
  }

  private async renderRiskLayer(at?: string): Promise<void> {
    const risk = await this.api.riskMap(at);
    renderRisk(this.el('risk-layer'), risk.cells, (cell) =>
      renderTrapList(this.el('risk-traps'), cell),
    );
  }

  private bindControls(): void {
    this.el('btn-read').addEventListener('click', () => {
      if (this.selected) void this.rpcPanel.issueRead(this.selected);
    });
    this.el('btn-reschedule').addEventListener('click', () => {
      if (!this.selected) return;
      const tx = Number(
        (this.el('in-txperday') as HTMLInputElement).value || '4',
      );
      const period = Number(
        (this.el('in-period') as HTMLInputElement).value || '6',
      );
      void this.rpcPanel.issueReschedule(this.selected, tx, period);
    });
    this.el('btn-refresh').addEventListener('click', () => void this.refresh());
    this.el('btn-risk-window').addEventListener('click', () => {
      const at = (this.el('in-risk-at') as HTMLInputElement).value;
      void this.renderRiskLayer(at || undefined);
    });
  }
}

declare global {
  interface Window {
    ovinetDashboard?: Dashboard;
  }
}

if (typeof window !== 'undefined' && !('vitest' in globalThis)) {
  window.addEventListener('DOMContentLoaded', () => {
    const dash = new Dashboard(document);
    window.ovinetDashboard = dash;
    void dash.start();
  });
}
