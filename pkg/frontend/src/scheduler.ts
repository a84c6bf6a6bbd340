import type { ScenarioPayload, ScenarioResponse } from "./types.js";

/** Debounced scenario dispatcher.
 *
 * Guarantees at most one in-flight request: edits during a flight are queued
 * (latest wins) and dispatched after it settles. Every dispatch carries a
 * monotonically increasing tag; a response whose tag is no longer the newest
 * is discarded instead of rendered, so the UI can never show a stale result.
 */
export class ScenarioScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private nextTag = 0;
  private inFlight = false;
  private queued: ScenarioPayload | null = null;

  constructor(
    private readonly send: (payload: ScenarioPayload) => Promise<ScenarioResponse>,
    private readonly onResult: (result: ScenarioResponse) => void,
    private readonly onError: (error: Error) => void,
    private readonly delayMs: number = 150,
  ) {}

  /** Called on every form edit; collapses bursts into one request. */
  change(payload: ScenarioPayload): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.dispatch(payload);
    }, this.delayMs);
  }

  /** Bypass the debounce delay (initial load). */
  flush(payload: ScenarioPayload): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.dispatch(payload);
  }

  private dispatch(payload: ScenarioPayload): void {
    if (this.inFlight) {
      this.queued = payload;
      return;
    }
    const tag = ++this.nextTag;
    this.inFlight = true;
    this.send(payload).then(
      (result) => this.settle(tag, result, null),
      (error) => this.settle(tag, null, error as Error),
    );
  }

  private settle(tag: number, result: ScenarioResponse | null, error: Error | null): void {
    this.inFlight = false;
    const stale = tag !== this.nextTag || this.queued !== null;
    if (this.queued !== null) {
      const next = this.queued;
      this.queued = null;
      this.dispatch(next);
    }
    if (stale) return;
    if (error !== null) this.onError(error);
    else if (result !== null) this.onResult(result);
  }
}
