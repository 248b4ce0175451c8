/** Message channel types and runtime validation.
 *
 * Every message from the service arrives as a JSON envelope
 * `{type, seq, payload}` with a globally increasing `seq`.  The guards
 * here narrow `unknown` payloads into the typed shapes the views
 * consume; anything that fails a guard is surfaced as a schema problem
 * rather than thrown, so one bad message never kills the stream.
 */

export type Phase =
  | "AwaitLogin"
  | "Cinematic"
  | "ScenarioMenu"
  | "InRound"
  | "RoundResult"
  | "Feedback";

export interface Envelope {
  type: string;
  seq: number;
  payload: unknown;
}

export interface AvatarInfo {
  id: number;
  label: string;
}

export interface DifficultyInfo {
  level: string;
  pairs_per_round: number;
  time_limit_s: number | null;
}

export interface RoundInfo {
  /** [cell index 0..8, character id 0..8] placements; only these cells are occupied. */
  board: Array<[number, number]>;
  target_order: number[];
  matched: number[];
  failures: number;
  current_target: number | null;
  started_at_ms: number;
}

/** Payload of a round_result event: the score plus its wording. */
export interface RoundResultInfo {
  successes: number;
  failures: number;
  grade: number;
  meaning: string;
  elapsed_s: number;
  complete: boolean;
}

/** The saved trial record echoed inside game_state snapshots. */
export interface TrialRecordInfo {
  player_id: string;
  group: string;
  method: string;
  session_index: number;
  successes: number;
  failures: number;
  grade: number;
  elapsed_s: number;
  complete: boolean;
}

export interface GameStatePayload {
  phase: Phase;
  avatar: AvatarInfo | null;
  player_name: string | null;
  difficulty: DifficultyInfo | null;
  clock_ms: number;
  round: RoundInfo | null;
  last_result: TrialRecordInfo | null;
}

export interface HandEstimatePayload {
  t_ms: number;
  x_mm: number;
  y_mm: number;
  residual_mm: number;
  in_bounds: boolean;
  cell: number | null;
}

export interface SelectionPayload {
  cell: number;
  outcome: "success" | "failure" | "ignored";
  target: number | null;
  successes: number;
  failures: number;
}

export interface ErrorPayload {
  message: string;
}

/** One group's box in a comparison report, drawn verbatim. */
export interface BoxplotEntry {
  label: string;
  median: number;
  q1: number;
  q3: number;
  whisker_low: number;
  whisker_high: number;
  outliers: number[];
}

export interface ComparisonReport {
  measure: string;
  unit: string;
  n: Record<string, number>;
  boxplot_data: BoxplotEntry[];
  summary: Record<string, Record<string, number>>;
  normality: Record<
    string,
    { alpha: number; is_normal_at_alpha: boolean; p_value: number; w_statistic: number }
  >;
  test: {
    method: string;
    p_value: number;
    u_statistic: number;
    tie_correction_applied: boolean;
  };
}

const PHASES: readonly string[] = [
  "AwaitLogin",
  "Cinematic",
  "ScenarioMenu",
  "InRound",
  "RoundResult",
  "Feedback",
];

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

function isOptionalNumber(value: unknown): value is number | null {
  return value === null || isNumber(value);
}

function isNumberArray(value: unknown): value is number[] {
  return Array.isArray(value) && value.every(isNumber);
}

export type ParseResult =
  | { ok: true; envelope: Envelope }
  | { ok: false; reason: string };

/** Parse one raw frame off the socket into an envelope, or say why not. */
export function parseEnvelope(raw: string): ParseResult {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return { ok: false, reason: "message is not valid JSON" };
  }
  if (!isRecord(data)) {
    return { ok: false, reason: "envelope must be a JSON object" };
  }
  const { type, seq, payload } = data;
  if (typeof type !== "string" || type === "") {
    return { ok: false, reason: "envelope is missing a type" };
  }
  if (!isNumber(seq)) {
    return { ok: false, reason: "envelope is missing a numeric seq" };
  }
  if (!("payload" in data) || !isRecord(payload)) {
    return { ok: false, reason: "envelope is missing an object payload" };
  }
  return { ok: true, envelope: { type, seq, payload } };
}

function isAvatar(value: unknown): value is AvatarInfo {
  return isRecord(value) && isNumber(value.id) && typeof value.label === "string";
}

function isDifficulty(value: unknown): value is DifficultyInfo {
  return (
    isRecord(value) &&
    typeof value.level === "string" &&
    isNumber(value.pairs_per_round) &&
    isOptionalNumber(value.time_limit_s)
  );
}

function isBoard(value: unknown): value is Array<[number, number]> {
  return (
    Array.isArray(value) &&
    value.every(
      (entry) =>
        Array.isArray(entry) &&
        entry.length === 2 &&
        isNumber(entry[0]) &&
        isNumber(entry[1])
    )
  );
}

function isRound(value: unknown): value is RoundInfo {
  return (
    isRecord(value) &&
    isBoard(value.board) &&
    isNumberArray(value.target_order) &&
    isNumberArray(value.matched) &&
    isNumber(value.failures) &&
    isOptionalNumber(value.current_target) &&
    isNumber(value.started_at_ms)
  );
}

export function isRoundResult(value: unknown): value is RoundResultInfo {
  return (
    isRecord(value) &&
    isNumber(value.successes) &&
    isNumber(value.failures) &&
    isNumber(value.grade) &&
    typeof value.meaning === "string" &&
    isNumber(value.elapsed_s) &&
    typeof value.complete === "boolean"
  );
}

export function isTrialRecord(value: unknown): value is TrialRecordInfo {
  return (
    isRecord(value) &&
    typeof value.player_id === "string" &&
    typeof value.group === "string" &&
    typeof value.method === "string" &&
    isNumber(value.session_index) &&
    isNumber(value.successes) &&
    isNumber(value.failures) &&
    isNumber(value.grade) &&
    isNumber(value.elapsed_s) &&
    typeof value.complete === "boolean"
  );
}

export function isGameState(value: unknown): value is GameStatePayload {
  if (!isRecord(value)) {
    return false;
  }
  return (
    typeof value.phase === "string" &&
    PHASES.includes(value.phase) &&
    (value.avatar === null || isAvatar(value.avatar)) &&
    (value.player_name === null || typeof value.player_name === "string") &&
    (value.difficulty === null || isDifficulty(value.difficulty)) &&
    isNumber(value.clock_ms) &&
    (value.round === null || isRound(value.round)) &&
    (value.last_result === null || isTrialRecord(value.last_result))
  );
}

export function isHandEstimate(value: unknown): value is HandEstimatePayload {
  return (
    isRecord(value) &&
    isNumber(value.t_ms) &&
    isNumber(value.x_mm) &&
    isNumber(value.y_mm) &&
    isNumber(value.residual_mm) &&
    typeof value.in_bounds === "boolean" &&
    isOptionalNumber(value.cell)
  );
}

export function isSelection(value: unknown): value is SelectionPayload {
  return (
    isRecord(value) &&
    isNumber(value.cell) &&
    (value.outcome === "success" ||
      value.outcome === "failure" ||
      value.outcome === "ignored") &&
    isOptionalNumber(value.target) &&
    isNumber(value.successes) &&
    isNumber(value.failures)
  );
}

export function isErrorPayload(value: unknown): value is ErrorPayload {
  return isRecord(value) && typeof value.message === "string";
}

function isBoxplotEntry(value: unknown): value is BoxplotEntry {
  return (
    isRecord(value) &&
    typeof value.label === "string" &&
    isNumber(value.median) &&
    isNumber(value.q1) &&
    isNumber(value.q3) &&
    isNumber(value.whisker_low) &&
    isNumber(value.whisker_high) &&
    isNumberArray(value.outliers)
  );
}

/** Fields of one boxplot entry that the chart cannot draw without. */
export const BOX_FIELDS = [
  "median",
  "q1",
  "q3",
  "whisker_low",
  "whisker_high",
] as const;

/** Loose check for a comparison report: requires the skeleton, tolerates
 * missing per-box fields so the chart can degrade to a partial render. */
export function isComparisonReport(value: unknown): value is ComparisonReport {
  return (
    isRecord(value) &&
    typeof value.measure === "string" &&
    typeof value.unit === "string" &&
    Array.isArray(value.boxplot_data) &&
    value.boxplot_data.every((entry) => isRecord(entry))
  );
}

export { isBoxplotEntry, isRecord, isNumber };
