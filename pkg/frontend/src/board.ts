/** Client-side view state for the game board.
 *
 * This is a mirror, not a brain: every number it exposes comes from a
 * service message.  The only quantity computed locally is the dwell
 * ring fill, and that is pure presentation; selections are decided by
 * the service and arrive as `selection` events.
 */

import {
  Envelope,
  GameStatePayload,
  SelectionPayload,
  isErrorPayload,
  isGameState,
  isHandEstimate,
  isRoundResult,
  isSelection,
} from "./protocol.js";

/** Normalized cursor position, both axes in [0, 1]. */
export interface Cursor {
  x: number;
  y: number;
  inBounds: boolean;
}

/** Score card contents.  `meaning` is only known from a round_result
 * event; a client that joined after the round shows the numbers alone. */
export interface ResultView {
  successes: number;
  failures: number;
  grade: number;
  elapsed_s: number;
  complete: boolean;
  meaning: string | null;
}

export type ApplyOutcome =
  | { applied: true; kind: string }
  | { applied: false; reason: "stale" | "schema" | "unhandled"; detail: string };

export interface BoardOptions {
  /** Hover time that fills the dwell ring, in round-clock milliseconds. */
  dwellMs?: number;
  /** Playfield edge length used to normalize cursor coordinates. */
  boardMm?: number;
}

const DEFAULT_DWELL_MS = 800;
const DEFAULT_BOARD_MM = 300;

export class BoardView {
  readonly dwellMs: number;
  readonly boardMm: number;

  lastSeq = -1;
  state: GameStatePayload | null = null;
  cursor: Cursor | null = null;
  cursorCell: number | null = null;
  dwellProgress = 0;
  successes = 0;
  failures = 0;
  lastSelection: SelectionPayload | null = null;
  lastResult: ResultView | null = null;
  /** Most recent schema complaint, shown as a banner until cleared. */
  banner: string | null = null;

  private dwellStartMs: number | null = null;

  constructor(options: BoardOptions = {}) {
    this.dwellMs = options.dwellMs ?? DEFAULT_DWELL_MS;
    this.boardMm = options.boardMm ?? DEFAULT_BOARD_MM;
  }

  get phase(): string {
    return this.state ? this.state.phase : "AwaitLogin";
  }

  /** Cells the service reported as occupied, as a cell -> character map. */
  occupiedCells(): Map<number, number> {
    const cells = new Map<number, number>();
    const round = this.state?.round;
    if (round) {
      for (const [cell, character] of round.board) {
        cells.set(cell, character);
      }
    }
    return cells;
  }

  currentTarget(): number | null {
    return this.state?.round?.current_target ?? null;
  }

  clearBanner(): void {
    this.banner = null;
  }

  /** Fold one envelope into the view.  Stale or malformed messages are
   * dropped without disturbing the state already on screen. */
  apply(envelope: Envelope): ApplyOutcome {
    if (envelope.seq <= this.lastSeq) {
      return {
        applied: false,
        reason: "stale",
        detail: `seq ${envelope.seq} after ${this.lastSeq}`,
      };
    }
    this.lastSeq = envelope.seq;
    switch (envelope.type) {
      case "game_state":
      case "state_snapshot":
        return this.applyGameState(envelope.type, envelope.payload);
      case "hand_estimate":
        return this.applyHandEstimate(envelope.payload);
      case "selection":
        return this.applySelection(envelope.payload);
      case "round_result":
        return this.applyRoundResult(envelope.payload);
      case "error":
        if (isErrorPayload(envelope.payload)) {
          this.banner = envelope.payload.message;
          return { applied: true, kind: "error" };
        }
        return this.schemaMismatch("error");
      default:
        // Other broadcast kinds (record_saved, session_started) carry
        // nothing the board renders.
        return {
          applied: false,
          reason: "unhandled",
          detail: envelope.type,
        };
    }
  }

  private schemaMismatch(kind: string): ApplyOutcome {
    const detail = `malformed ${kind} payload`;
    this.banner = detail;
    return { applied: false, reason: "schema", detail };
  }

  private applyGameState(kind: string, payload: unknown): ApplyOutcome {
    if (!isGameState(payload)) {
      return this.schemaMismatch(kind);
    }
    this.state = payload;
    const record = payload.last_result;
    if (record) {
      const kept = this.lastResult;
      const sameRound =
        kept !== null &&
        kept.grade === record.grade &&
        kept.successes === record.successes &&
        kept.failures === record.failures &&
        kept.elapsed_s === record.elapsed_s;
      this.lastResult = {
        successes: record.successes,
        failures: record.failures,
        grade: record.grade,
        elapsed_s: record.elapsed_s,
        complete: record.complete,
        // The snapshot omits the wording; keep it if we saw the event.
        meaning: sameRound ? kept.meaning : null,
      };
    }
    if (payload.round) {
      this.successes = payload.round.matched.length;
      this.failures = payload.round.failures;
    }
    // Off-round phases keep the final counters for the results card.
    if (!payload.round && payload.phase === "AwaitLogin") {
      this.resetDwell();
      this.cursor = null;
      this.cursorCell = null;
      this.successes = 0;
      this.failures = 0;
    }
    return { applied: true, kind };
  }

  private applyHandEstimate(payload: unknown): ApplyOutcome {
    if (!isHandEstimate(payload)) {
      return this.schemaMismatch("hand_estimate");
    }
    const scale = this.boardMm;
    this.cursor = {
      x: Math.min(1, Math.max(0, payload.x_mm / scale)),
      y: Math.min(1, Math.max(0, payload.y_mm / scale)),
      inBounds: payload.in_bounds,
    };
    if (payload.cell !== this.cursorCell) {
      this.cursorCell = payload.cell;
      this.dwellStartMs = payload.cell === null ? null : payload.t_ms;
      this.dwellProgress = 0;
    } else if (this.dwellStartMs !== null) {
      const held = payload.t_ms - this.dwellStartMs;
      this.dwellProgress = Math.min(1, Math.max(0, held / this.dwellMs));
    }
    return { applied: true, kind: "hand_estimate" };
  }

  private applySelection(payload: unknown): ApplyOutcome {
    if (!isSelection(payload)) {
      return this.schemaMismatch("selection");
    }
    this.lastSelection = payload;
    this.successes = payload.successes;
    this.failures = payload.failures;
    // The service arms a cooldown after each commit; restart the ring.
    this.resetDwell();
    return { applied: true, kind: "selection" };
  }

  private applyRoundResult(payload: unknown): ApplyOutcome {
    if (!isRoundResult(payload)) {
      return this.schemaMismatch("round_result");
    }
    this.lastResult = {
      successes: payload.successes,
      failures: payload.failures,
      grade: payload.grade,
      elapsed_s: payload.elapsed_s,
      complete: payload.complete,
      meaning: payload.meaning,
    };
    this.successes = payload.successes;
    this.failures = payload.failures;
    return { applied: true, kind: "round_result" };
  }

  private resetDwell(): void {
    this.dwellStartMs = null;
    this.dwellProgress = 0;
  }
}
