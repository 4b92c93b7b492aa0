/** Console state transitions. Rendering reads this state and nothing else. */

import {
  COMMAND_LABELS,
  type CommandRow,
  type ConsoleState,
  type DataResponse,
  type RowPhase,
  phaseAtLeast,
} from "./types.js";

export function initialState(
  gatewayUrl: string,
  pollIntervalMs = 500,
): ConsoleState {
  return {
    gatewayUrl,
    robots: [],
    selectedRobot: "hbs2",
    rows: [],
    sensors: {},
    latencySamples: [],
    transcript: [],
    banner: null,
    pollIntervalMs,
  };
}

export function selectRobot(state: ConsoleState, robot: string): void {
  if (robot === state.selectedRobot) {
    return;
  }
  // every panel is scoped to one robot; switching re-scopes them all
  state.selectedRobot = robot;
  state.rows = [];
  state.sensors = {};
  state.latencySamples = [];
  state.transcript = [];
}

export function addCommandRow(
  state: ConsoleState,
  seq: number,
  code: number,
): CommandRow {
  const row: CommandRow = {
    seq,
    code,
    label: COMMAND_LABELS[code] ?? `code ${code}`,
    phase: "pending",
  };
  state.rows.push(row);
  return row;
}

export function outstandingSeqs(state: ConsoleState): number[] {
  return state.rows.filter((r) => r.phase !== "complete").map((r) => r.seq);
}

function advance(row: CommandRow, phase: RowPhase): void {
  if (!phaseAtLeast(row.phase, phase)) {
    row.phase = phase;
  }
}

export function applyDataResponse(
  state: ConsoleState,
  seq: number,
  resp: DataResponse,
): void {
  const row = state.rows.find((r) => r.seq === seq);
  if (row === undefined) {
    return;
  }
  if (resp.status === "pending") {
    if (resp.fetched) {
      advance(row, "fetched");
    }
    return;
  }
  const fresh = row.phase !== "complete";
  advance(row, "complete");
  row.data = resp.data;
  row.latency = resp.completed_at - resp.issued_at;
  if (!fresh) {
    return;
  }
  state.latencySamples.push({ seq, code: row.code, latency: row.latency });
  switch (row.code) {
    case 3: {
      const spoken = (resp.data as { spoken?: string } | null)?.spoken;
      state.transcript.push(spoken ?? String(resp.data));
      break;
    }
    case 4:
      state.sensors.sonarCm = Number(resp.data);
      break;
    case 5:
      state.sensors.temperatureF = String(resp.data);
      break;
    case 6:
      state.sensors.touchByte = Number(resp.data);
      break;
    case 1:
    case 7:
      state.sensors.servoReply = resp.data;
      break;
    case 2:
      state.sensors.ledColor = resp.data;
      break;
  }
}

export function setBanner(state: ConsoleState, message: string): void {
  state.banner = message;
}

export function clearBanner(state: ConsoleState): void {
  state.banner = null;
}

export function setRobots(state: ConsoleState, robots: string[]): void {
  state.robots = robots;
  if (robots.length > 0 && !robots.includes(state.selectedRobot)) {
    selectRobot(state, robots[0]);
  }
}
