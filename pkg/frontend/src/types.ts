/** Wire types for the gateway REST contract plus the console's own state. */

export const COMMAND_LABELS: Record<number, string> = {
  1: "servo angle",
  2: "LED color",
  3: "speak",
  4: "sonar",
  5: "temperature",
  6: "read touch",
  7: "shake head",
};

export interface CommandEnvelopeWire {
  robot: string;
  seq: number;
  code: number;
  args?: unknown;
}

export interface PendingData {
  status: "pending";
  fetched: boolean;
}

export interface CompleteData {
  status: "complete";
  data: unknown;
  issued_at: number;
  fetched_at: number;
  completed_at: number;
}

export type DataResponse = PendingData | CompleteData;

/** A command row only ever moves forward through these phases. */
export type RowPhase = "pending" | "fetched" | "complete";

const PHASE_ORDER: Record<RowPhase, number> = {
  pending: 0,
  fetched: 1,
  complete: 2,
};

export function phaseAtLeast(a: RowPhase, b: RowPhase): boolean {
  return PHASE_ORDER[a] >= PHASE_ORDER[b];
}

export interface CommandRow {
  seq: number;
  code: number;
  label: string;
  phase: RowPhase;
  data?: unknown;
  /** completed_at - issued_at from the gateway payload, seconds. */
  latency?: number;
}

export interface SensorReadings {
  touchByte?: number;
  sonarCm?: number;
  temperatureF?: string;
  servoReply?: unknown;
  ledColor?: unknown;
}

export interface LatencySample {
  seq: number;
  code: number;
  latency: number;
}

export interface ConsoleState {
  gatewayUrl: string;
  robots: string[];
  selectedRobot: string;
  rows: CommandRow[];
  sensors: SensorReadings;
  latencySamples: LatencySample[];
  transcript: string[];
  banner: string | null;
  pollIntervalMs: number;
}
