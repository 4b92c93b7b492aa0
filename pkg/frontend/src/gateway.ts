/** Thin typed client for the gateway REST API.
 *
 * The only state-changing calls are POST /api/command and GET /api/readtouch;
 * everything else is read-only polling.
 */

import type { DataResponse } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayError extends Error {}

export class GatewayClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.url(path));
    if (!resp.ok) {
      throw new GatewayError(`${path}: HTTP ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  async robots(): Promise<string[]> {
    return this.getJson<string[]>("/api/robots");
  }

  /** Queue a read-touch command; resolves to {ack, seq}. The body is the
   * single ack byte; the assigned seq arrives in the X-Command-Seq header. */
  async readTouch(robot: string): Promise<{ ack: number; seq: number }> {
    const resp = await this.fetchImpl(
      this.url(`/api/readtouch?robot=${encodeURIComponent(robot)}`),
    );
    if (!resp.ok) {
      throw new GatewayError(`readtouch: HTTP ${resp.status}`);
    }
    const body = new Uint8Array(await resp.arrayBuffer());
    const seqHeader = resp.headers.get("X-Command-Seq");
    if (body.length !== 1 || seqHeader === null) {
      throw new GatewayError("readtouch: malformed ack");
    }
    return { ack: body[0], seq: Number(seqHeader) };
  }

  async postCommand(
    robot: string,
    code: number,
    args?: unknown,
  ): Promise<number> {
    const resp = await this.fetchImpl(this.url("/api/command"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ robot, code, args }),
    });
    if (!resp.ok) {
      const detail = await resp.text();
      throw new GatewayError(`command rejected: ${detail}`);
    }
    const reply = (await resp.json()) as { seq: number };
    return reply.seq;
  }

  async getData(robot: string, seq: number): Promise<DataResponse> {
    return this.getJson<DataResponse>(
      `/api/getdata?robot=${encodeURIComponent(robot)}&seq=${seq}`,
    );
  }
}
