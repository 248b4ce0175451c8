/** Message channel client.
 *
 * Keeps exactly one socket to the service.  When the socket drops, it
 * reconnects with exponential backoff and asks for a state snapshot so
 * the views catch up without replaying the gap.  The socket factory
 * and timers are injectable for tests.
 */

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export type ChannelStatus = "connecting" | "open" | "closed";

export interface ChannelHandlers {
  onMessage(raw: string): void;
  onStatus?(status: ChannelStatus, attempt: number): void;
}

export interface ChannelOptions {
  socketFactory?: (url: string) => SocketLike;
  backoffBaseMs?: number;
  backoffCapMs?: number;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
}

const DEFAULT_BASE_MS = 1000;
const DEFAULT_CAP_MS = 30000;

export function backoffDelayMs(
  attempt: number,
  baseMs = DEFAULT_BASE_MS,
  capMs = DEFAULT_CAP_MS
): number {
  return Math.min(baseMs * 2 ** attempt, capMs);
}

export class Channel {
  private readonly url: string;
  private readonly handlers: ChannelHandlers;
  private readonly makeSocket: (url: string) => SocketLike;
  private readonly baseMs: number;
  private readonly capMs: number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;

  private socket: SocketLike | null = null;
  private retryHandle: unknown = null;
  private attempts = 0;
  private open = false;
  private stopped = false;

  constructor(url: string, handlers: ChannelHandlers, options: ChannelOptions = {}) {
    this.url = url;
    this.handlers = handlers;
    this.makeSocket =
      options.socketFactory ?? ((target) => new WebSocket(target) as SocketLike);
    this.baseMs = options.backoffBaseMs ?? DEFAULT_BASE_MS;
    this.capMs = options.backoffCapMs ?? DEFAULT_CAP_MS;
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = options.clearTimer ?? ((handle) => clearTimeout(handle as number));
  }

  get isOpen(): boolean {
    return this.open;
  }

  connect(): void {
    if (this.stopped) {
      return;
    }
    this.notify("connecting");
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      if (this.socket !== socket) {
        return;
      }
      this.attempts = 0;
      this.open = true;
      this.notify("open");
      // Ask for the current snapshot so a rejoin lands on live state.
      socket.send(JSON.stringify({ type: "resync" }));
    };
    socket.onmessage = (event) => {
      if (this.socket === socket && typeof event.data === "string") {
        this.handlers.onMessage(event.data);
      }
    };
    socket.onclose = () => {
      if (this.socket !== socket) {
        return;
      }
      this.socket = null;
      this.open = false;
      this.notify("closed");
      this.scheduleReconnect();
    };
    socket.onerror = () => {
      // The close handler owns recovery; errors always precede a close.
    };
  }

  /** Send one message object.  Returns false when the socket is down
   * (the caller's action is lost, not queued; live state will resync). */
  send(message: Record<string, unknown>): boolean {
    if (!this.socket || !this.open) {
      return false;
    }
    try {
      this.socket.send(JSON.stringify(message));
      return true;
    } catch {
      return false;
    }
  }

  close(): void {
    this.stopped = true;
    this.open = false;
    if (this.retryHandle !== null) {
      this.clearTimer(this.retryHandle);
      this.retryHandle = null;
    }
    const socket = this.socket;
    this.socket = null;
    if (socket) {
      socket.close();
    }
  }

  private scheduleReconnect(): void {
    if (this.stopped || this.retryHandle !== null) {
      return;
    }
    const delay = backoffDelayMs(this.attempts, this.baseMs, this.capMs);
    this.attempts += 1;
    this.retryHandle = this.setTimer(() => {
      this.retryHandle = null;
      this.connect();
    }, delay);
  }

  private notify(status: ChannelStatus): void {
    this.handlers.onStatus?.(status, this.attempts);
  }
}
