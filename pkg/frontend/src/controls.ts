/** Slider controller: debounced queries, one in flight, stale answers dropped.
 *
 * Slider movement calls change(); after the debounce window the newest
 * parameters are sent with a fresh request token. A response is applied only
 * if its token is still current, so superseded requests can never clobber a
 * newer view. The 250 ms debounce keeps slider scrubbing from flooding the
 * engine with search continuations.
 */

import { QueryParams } from "./types.js";

export const DEFAULT_DEBOUNCE_MS = 250;

export interface TimerApi {
  set(fn: () => void, ms: number): unknown;
  clear(handle: unknown): void;
}

const realTimers: TimerApi = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (handle) => clearTimeout(handle as ReturnType<typeof setTimeout>),
};

export class SliderController {
  private handle: unknown = null;
  private token = 0;
  private latest: QueryParams | null = null;

  constructor(
    private readonly send: (params: QueryParams, token: number) => void,
    private readonly debounceMs: number = DEFAULT_DEBOUNCE_MS,
    private readonly timers: TimerApi = realTimers,
  ) {}

  /** Slider moved: (re)start the debounce window with the newest params. */
  change(params: QueryParams): void {
    this.latest = params;
    if (this.handle !== null) {
      this.timers.clear(this.handle);
    }
    this.handle = this.timers.set(() => this.flush(), this.debounceMs);
  }

  /** Send immediately (used by polling while the service reports searching). */
  fireNow(params: QueryParams): number {
    this.latest = params;
    if (this.handle !== null) {
      this.timers.clear(this.handle);
      this.handle = null;
    }
    return this.issue();
  }

  /** True while a response token is still the newest request. */
  isCurrent(token: number): boolean {
    return token === this.token;
  }

  get currentParams(): QueryParams | null {
    return this.latest;
  }

  private flush(): void {
    this.handle = null;
    this.issue();
  }

  private issue(): number {
    if (this.latest === null) return this.token;
    this.token += 1;
    this.send(this.latest, this.token);
    return this.token;
  }
}
