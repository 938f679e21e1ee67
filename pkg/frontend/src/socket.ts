// WebSocket wrapper: hello on open, reconnect with capped exponential
// backoff, one decoded message per callback. Unknown message types are
// dropped silently (decodeLine returns null); malformed lines are logged
// without killing the session.

import { decodeLine, encodeHello, ProtocolError, ServerMessage } from "./protocol.js";
import type { ConnectionStatus } from "./state.js";

const BACKOFF_MIN_MS = 500;
const BACKOFF_MAX_MS = 5000;

export class ConsoleSocket {
  private ws: WebSocket | null = null;
  private backoffMs = BACKOFF_MIN_MS;
  private closed = false;

  constructor(
    private url: string,
    private onMessage: (msg: ServerMessage) => void,
    private onStatus: (status: ConnectionStatus) => void,
  ) {}

  connect(): void {
    if (this.closed) return;
    this.onStatus("connecting");
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = BACKOFF_MIN_MS;
      ws.send(encodeHello().trimEnd());
      this.onStatus("connected");
    };
    ws.onmessage = (event) => {
      const text = typeof event.data === "string" ? event.data : "";
      try {
        const msg = decodeLine(text);
        if (msg !== null) this.onMessage(msg);
      } catch (err) {
        if (err instanceof ProtocolError) {
          console.warn("dropping malformed line:", err.message);
        } else {
          throw err;
        }
      }
    };
    ws.onclose = () => {
      this.ws = null;
      this.onStatus("disconnected");
      if (!this.closed) {
        setTimeout(() => this.connect(), this.backoffMs);
        this.backoffMs = Math.min(BACKOFF_MAX_MS, this.backoffMs * 2);
      }
    };
    ws.onerror = () => {
      ws.close();
    };
  }

  send(line: string): void {
    if (this.ws !== null && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(line.trimEnd());
    }
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
