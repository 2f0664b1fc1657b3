// RPC controls: issue on-demand reads / reschedules and render the live
// pending -> delivered -> answered trail from the stream.

import type { ApiClient } from './api.js';
import type { RpcStatus } from './types.js';

export class RpcPanel {
  private trails = new Map<string, RpcStatus[]>();

  constructor(
    private api: ApiClient,
    private container: HTMLElement,
  ) {}

  async issueRead(deviceId: string): Promise<string> {
    const { request_id } = await this.api.issueRpc(deviceId, 'read_on_demand');
    this.trails.set(request_id, []);
    this.render();
    return request_id;
  }

  async issueReschedule(
    deviceId: string,
    txPerDay: number,
    periodH: number,
  ): Promise<string> {
    const { request_id } = await this.api.issueRpc(deviceId, 'reschedule', {
      tx_per_day: txPerDay,
      reading_period_h: periodH,
    });
    this.trails.set(request_id, []);
    this.render();
    return request_id;
  }

  /** Feed rpc events from the live stream. */
  onRpcEvent(status: RpcStatus): void {
    const trail = this.trails.get(status.request_id);
    if (!trail) return; // not issued from this panel
    trail.push(status);
    this.render();
  }

  trailOf(requestId: string): RpcStatus[] {
    return this.trails.get(requestId) ?? [];
  }

  render(): void {
    this.container.replaceChildren();
    if (this.trails.size === 0) {
      const p = document.createElement('p');
      p.className = 'empty-state';
      p.textContent = 'No commands issued.';
      this.container.appendChild(p);
      return;
    }
    for (const [requestId, trail] of [...this.trails.entries()].reverse()) {
      const card = document.createElement('div');
      card.className = 'rpc-card';
      card.dataset.requestId = requestId;
      const last = trail[trail.length - 1];
      const kind = last?.kind ?? 'read_on_demand';
      const statuses = trail.map((s) => s.status);
      const steps = statuses.length ? statuses.join(' → ') : 'sent';
      let result = '';
      if (last?.status === 'answered' && last.response?.egg_count !== undefined) {
        result = `<span class="rpc-result">eggs read: ${last.response.egg_count}</span>`;
      } else if (last?.status === 'answered') {
        result = '<span class="rpc-result">acknowledged</span>';
      } else if (last?.status === 'timeout' || last?.status === 'failed') {
        result = `<span class="rpc-error">${last.status}</span>`;
      }
      card.innerHTML =
        `<span class="rpc-id">${requestId}</span>` +
        `<span class="rpc-kind">${kind}</span>` +
        `<span class="rpc-trail">${steps}</span>` +
        result;
      this.container.appendChild(card);
    }
  }
}
