// Server-push channel: wraps EventSource on /stream and fans typed events
// out to subscribers. Reconnection is left to EventSource itself.

import type { StreamPayload } from './types.js';

type Handler = (payload: StreamPayload) => void;

interface EventSourceLike {
  addEventListener(type: string, cb: (ev: MessageEvent) => void): void;
  close(): void;
}

type EventSourceFactory = (url: string) => EventSourceLike;

const EVENT_TYPES = ['ingest', 'alarm', 'rpc'] as const;

export class LiveStream {
  private source: EventSourceLike | null = null;
  private handlers = new Set<Handler>();

  constructor(
    private url: string = '/stream',
    private factory: EventSourceFactory = (u) => new EventSource(u),
  ) {}

  onEvent(handler: Handler): () => void {
    this.handlers.add(handler);
    return () => this.handlers.delete(handler);
  }

  open(): void {
    if (this.source) return;
    this.source = this.factory(this.url);
    for (const type of EVENT_TYPES) {
      this.source.addEventListener(type, (ev) => {
        let data: unknown;
        try {
          data = JSON.parse(ev.data as string);
        } catch {
          return; // malformed frame; ignore
        }
        const payload = { type, data } as StreamPayload;
        for (const handler of this.handlers) handler(payload);
      });
    }
  }

  close(): void {
    this.source?.close();
    this.source = null;
  }
}
