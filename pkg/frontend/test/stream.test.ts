import { describe, expect, it } from 'vitest';

import { LiveStream } from '../src/stream.js';
import type { StreamPayload } from '../src/types.js';

class FakeSource {
  listeners = new Map<string, ((ev: MessageEvent) => void)[]>();
  closed = false;

  addEventListener(type: string, cb: (ev: MessageEvent) => void) {
    const list = this.listeners.get(type) ?? [];
    list.push(cb);
    this.listeners.set(type, list);
  }

  close() {
    this.closed = true;
  }

  emit(type: string, data: string) {
    for (const cb of this.listeners.get(type) ?? []) {
      cb({ data } as MessageEvent);
    }
  }
}

describe('LiveStream', () => {
  it('dispatches typed events to handlers', () => {
    const source = new FakeSource();
    const stream = new LiveStream('/stream', () => source);
    const got: StreamPayload[] = [];
    stream.onEvent((p) => got.push(p));
    stream.open();
    source.emit('ingest', JSON.stringify({ device_id: 'ovi-01', egg_count: 2 }));
    source.emit('alarm', JSON.stringify({ rule_id: 'tilt_overturned' }));
    source.emit('rpc', JSON.stringify({ request_id: 'rpc-1', status: 'answered' }));
    expect(got.map((p) => p.type)).toEqual(['ingest', 'alarm', 'rpc']);
  });

  it('ignores malformed frames', () => {
    const source = new FakeSource();
    const stream = new LiveStream('/stream', () => source);
    const got: StreamPayload[] = [];
    stream.onEvent((p) => got.push(p));
    stream.open();
    source.emit('ingest', '{not json');
    source.emit('ingest', JSON.stringify({ device_id: 'ovi-01' }));
    expect(got).toHaveLength(1);
  });

  it('supports unsubscribe and close', () => {
    const source = new FakeSource();
    const stream = new LiveStream('/stream', () => source);
    const got: StreamPayload[] = [];
    const off = stream.onEvent((p) => got.push(p));
    stream.open();
    off();
    source.emit('ingest', JSON.stringify({}));
    expect(got).toHaveLength(0);
    stream.close();
    expect(source.closed).toBe(true);
  });

  it('opens the factory once per open()', () => {
    let opened = 0;
    const stream = new LiveStream('/stream', () => {
      opened++;
      return new FakeSource();
    });
    stream.open();
    stream.open();
    expect(opened).toBe(1);
  });
});
