/** Polling loop: refreshes robots and outstanding command results.
 *
 * A network failure raises the banner within one poll interval and switches
 * to exponential backoff; the first successful poll clears it and resumes
 * the normal cadence.
 */

import type { GatewayClient } from "./gateway.js";
import {
  applyDataResponse,
  clearBanner,
  outstandingSeqs,
  setBanner,
  setRobots,
} from "./state.js";
import type { ConsoleState } from "./types.js";

export interface TimerHost {
  set(fn: () => void, ms: number): unknown;
  clear(handle: unknown): void;
}

const realTimers: TimerHost = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (handle) => clearTimeout(handle as Parameters<typeof clearTimeout>[0]),
};

const MAX_BACKOFF_MS = 8000;

export class Poller {
  private handle: unknown = null;
  private running = false;
  private currentDelay: number;

  constructor(
    private state: ConsoleState,
    private client: GatewayClient,
    private onChange: () => void,
    private timers: TimerHost = realTimers,
  ) {
    this.currentDelay = state.pollIntervalMs;
  }

  start(): void {
    if (this.running) {
      return;
    }
    this.running = true;
    this.schedule(this.state.pollIntervalMs);
  }

  stop(): void {
    this.running = false;
    if (this.handle !== null) {
      this.timers.clear(this.handle);
      this.handle = null;
    }
  }

  private schedule(ms: number): void {
    if (!this.running) {
      return;
    }
    this.handle = this.timers.set(() => {
      void this.tick();
    }, ms);
  }

  async tick(): Promise<void> {
    try {
      setRobots(this.state, await this.client.robots());
      for (const seq of outstandingSeqs(this.state)) {
        const resp = await this.client.getData(this.state.selectedRobot, seq);
        applyDataResponse(this.state, seq, resp);
      }
      clearBanner(this.state);
      this.currentDelay = this.state.pollIntervalMs;
    } catch (err) {
      setBanner(this.state, `gateway unreachable: ${String(err)}`);
      this.currentDelay = Math.min(this.currentDelay * 2, MAX_BACKOFF_MS);
    }
    this.onChange();
    this.schedule(this.currentDelay);
  }
}
