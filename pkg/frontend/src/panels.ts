/** Pure rendering: ConsoleState in, HTML string out. */

import type { ConsoleState } from "./types.js";

function esc(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function touchBits(byte: number | undefined): string {
  if (byte === undefined) {
    return "--------";
  }
  return byte.toString(2).padStart(8, "0");
}

export function renderBanner(state: ConsoleState): string {
  if (state.banner === null) {
    return "";
  }
  return `<div class="banner" role="alert">${esc(state.banner)}</div>`;
}

export function renderSensors(state: ConsoleState): string {
  const s = state.sensors;
  const rows = [
    ["touch bits", touchBits(s.touchByte)],
    ["sonar", s.sonarCm === undefined ? "-" : `${s.sonarCm} cm`],
    ["temperature", s.temperatureF === undefined ? "-" : `${s.temperatureF} F`],
    ["LED", s.ledColor === undefined ? "-" : JSON.stringify(s.ledColor)],
    ["servo", s.servoReply === undefined ? "-" : JSON.stringify(s.servoReply)],
  ];
  const body = rows
    .map(([k, v]) => `<tr><th>${esc(k)}</th><td>${esc(v)}</td></tr>`)
    .join("");
  return `<table class="sensors">${body}</table>`;
}

export function renderCommands(state: ConsoleState): string {
  const rows = [...state.rows]
    .reverse()
    .map((row) => {
      const latency =
        row.latency === undefined ? "" : `${(row.latency * 1000).toFixed(0)} ms`;
      const data = row.data === undefined ? "" : esc(JSON.stringify(row.data));
      return (
        `<tr class="phase-${row.phase}" data-seq="${row.seq}">` +
        `<td>#${row.seq}</td><td>${esc(row.label)}</td>` +
        `<td>${row.phase}</td><td>${data}</td><td>${latency}</td></tr>`
      );
    })
    .join("");
  return (
    `<table class="commands"><tr><th>seq</th><th>command</th>` +
    `<th>state</th><th>result</th><th>latency</th></tr>${rows}</table>`
  );
}

export function renderLatencyStrip(state: ConsoleState): string {
  const samples = state.latencySamples.slice(-20);
  if (samples.length === 0) {
    return `<div class="latency-strip">no samples yet</div>`;
  }
  const peak = Math.max(...samples.map((s) => s.latency), 0.001);
  const bars = samples
    .map((s) => {
      const h = Math.max(2, Math.round((s.latency / peak) * 48));
      const title = `#${s.seq} ${(s.latency * 1000).toFixed(0)} ms`;
      return `<span class="bar" style="height:${h}px" title="${esc(title)}"></span>`;
    })
    .join("");
  return `<div class="latency-strip">${bars}</div>`;
}

export function renderTranscript(state: ConsoleState): string {
  const items = state.transcript
    .slice(-10)
    .map((t) => `<li>${esc(t)}</li>`)
    .join("");
  return `<ul class="transcript">${items}</ul>`;
}

export function renderRobots(state: ConsoleState): string {
  const options = state.robots
    .map((r) => {
      const sel = r === state.selectedRobot ? " selected" : "";
      return `<option value="${esc(r)}"${sel}>${esc(r)}</option>`;
    })
    .join("");
  return `<select id="robot-select">${options}</select>`;
}

export function render(state: ConsoleState): string {
  return [
    renderBanner(state),
    `<section><h2>robot ${esc(state.selectedRobot)}</h2>${renderRobots(state)}</section>`,
    `<section><h2>sensors</h2>${renderSensors(state)}</section>`,
    `<section><h2>commands</h2>${renderCommands(state)}</section>`,
    `<section><h2>round-trip latency</h2>${renderLatencyStrip(state)}</section>`,
    `<section><h2>robot said</h2>${renderTranscript(state)}</section>`,
  ].join("\n");
}
