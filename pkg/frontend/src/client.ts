// Network glue: /stream subscription with backoff, /state refreshes, commands.
// All outcomes are delivered to the reducer as actions; nothing here holds UI
// state of its own.

import type { Action } from "./model.js";
import type { Alert, CommandName, HubState } from "./types.js";

const BACKOFF_START_MS = 1000;
const BACKOFF_CAP_MS = 30_000;

export type Dispatch = (action: Action) => void;

export class HubClient {
  private backoffMs = BACKOFF_START_MS;
  private source: EventSource | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly dispatch: Dispatch,
  ) {}

  start(): void {
    this.connect();
  }

  private connect(): void {
    this.refreshState();
    this.source?.close();
    const source = new EventSource(`${this.baseUrl}/stream`);
    this.source = source;
    source.onopen = () => {
      this.backoffMs = BACKOFF_START_MS;
      this.dispatch({ kind: "connection", status: "live" });
      this.refreshState();
    };
    source.onmessage = (event) => {
      try {
        const alert = JSON.parse(event.data) as Alert;
        this.dispatch({ kind: "stream_alert", alert });
      } catch {
        return;
      }
      this.refreshState(); // counters and panels move with each alert
    };
    source.onerror = () => {
      this.dispatch({ kind: "connection", status: "reconnecting" });
      source.close();
      const delay = this.backoffMs;
      this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_CAP_MS);
      setTimeout(() => this.connect(), delay);
    };
  }

  async refreshState(): Promise<void> {
    try {
      const response = await fetch(`${this.baseUrl}/state`);
      if (!response.ok) return;
      const state = (await response.json()) as HubState;
      this.dispatch({ kind: "state_loaded", state });
    } catch {
      // stream error handling owns reconnect signalling
    }
  }

  async sendCommand(cmd: CommandName): Promise<void> {
    this.dispatch({ kind: "command_sent", cmd });
    try {
      const response = await fetch(`${this.baseUrl}/cmd`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ v: 1, cmd, ts: Date.now() }),
      });
      if (response.status === 202) {
        this.dispatch({ kind: "command_accepted", cmd });
      } else {
        this.dispatch({ kind: "command_failed", cmd, reason: `HTTP ${response.status}` });
      }
    } catch (err) {
      this.dispatch({ kind: "command_failed", cmd, reason: String(err) });
    }
  }

  async resetHome(): Promise<void> {
    try {
      const response = await fetch(`${this.baseUrl}/reset-home`, { method: "POST" });
      if (response.ok) this.dispatch({ kind: "home_reset" });
    } catch {
      // next /state refresh will tell the truth either way
    }
  }
}
