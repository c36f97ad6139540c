/**
 * Bridge client for the simulation bus.
 *
 * Protocol: one JSON object per text message.
 *   out: {"op": "subscribe", "topic": string}
 *        {"op": "publish", "topic": string, "msg": object}
 *   in:  {"topic": string, "stamp": number, "msg": object}
 *
 * Incoming messages land in a latest-value cache so rendering can run on
 * its own clock instead of per message.
 */

export interface SocketLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  addEventListener(type: string, handler: (event: any) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface TopicValue {
  stamp: number;
  msg: any;
  seq: number; // bumps on every arrival; cheap dirty check for renderers
}

const SOCKET_OPEN = 1;

export class BridgeClient {
  private socket: SocketLike;
  private cache = new Map<string, TopicValue>();
  private handlers = new Map<string, Array<(msg: any, stamp: number) => void>>();
  private pending: string[] = [];
  private open = false;
  onclose: (() => void) | null = null;

  constructor(url: string, factory?: SocketFactory) {
    const make: SocketFactory = factory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.socket = make(url);
    this.socket.addEventListener("open", () => {
      this.open = true;
      for (const raw of this.pending.splice(0)) this.socket.send(raw);
    });
    this.socket.addEventListener("message", (event: MessageEvent) => {
      this.dispatch(String(event.data));
    });
    this.socket.addEventListener("close", () => {
      this.open = false;
      if (this.onclose) this.onclose();
    });
  }

  private send(obj: unknown): void {
    const raw = JSON.stringify(obj);
    if (this.open || this.socket.readyState === SOCKET_OPEN) {
      this.socket.send(raw);
    } else {
      this.pending.push(raw); // flushed on open
    }
  }

  private dispatch(raw: string): void {
    let obj: any;
    try {
      obj = JSON.parse(raw);
    } catch {
      return; // tolerate garbage; the server never sends any
    }
    if (typeof obj?.topic !== "string") return;
    const previous = this.cache.get(obj.topic);
    this.cache.set(obj.topic, {
      stamp: Number(obj.stamp),
      msg: obj.msg,
      seq: (previous?.seq ?? 0) + 1,
    });
    for (const handler of this.handlers.get(obj.topic) ?? []) {
      handler(obj.msg, Number(obj.stamp));
    }
  }

  subscribe(topic: string, handler?: (msg: any, stamp: number) => void): void {
    if (handler) {
      const list = this.handlers.get(topic) ?? [];
      list.push(handler);
      this.handlers.set(topic, list);
    }
    this.send({ op: "subscribe", topic });
  }

  publish(topic: string, msg: unknown): void {
    this.send({ op: "publish", topic, msg });
  }

  latest(topic: string): TopicValue | undefined {
    return this.cache.get(topic);
  }

  close(): void {
    this.socket.close();
  }
}
