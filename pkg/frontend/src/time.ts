// Reading-time display.
//
// The ticking number is advisory only: it estimates elapsed time from the
// server's started_wall and the local clock. The authoritative duration is
// whatever the server reports as reading_time_s at finalize; freeze() pins
// the display to that value and nothing can move it afterwards.

export type TickHandler = (seconds: number) => void;

export function formatSeconds(seconds: number): string {
  return `${seconds.toFixed(1)} s`;
}

export class SessionTimer {
  private handle: ReturnType<typeof setInterval> | null = null;
  private anchorLocalMs = 0;
  private baseSeconds = 0;
  private frozenSeconds: number | null = null;

  constructor(
    private readonly onTick: TickHandler,
    private readonly periodMs = 500,
  ) {}

  // baseSeconds is the best estimate of elapsed time at the moment start()
  // is called (0 for a fresh session, now - started_wall after a reload)
  start(baseSeconds: number): void {
    this.stop();
    this.frozenSeconds = null;
    this.baseSeconds = Math.max(0, baseSeconds);
    this.anchorLocalMs = Date.now();
    this.onTick(this.baseSeconds);
    this.handle = setInterval(() => {
      this.onTick(this.currentSeconds());
    }, this.periodMs);
  }

  // serverSeconds comes from the finalize response; it wins over any
  // locally accumulated estimate, including one that is wildly different
  freeze(serverSeconds: number): void {
    this.stop();
    this.frozenSeconds = serverSeconds;
    this.onTick(serverSeconds);
  }

  currentSeconds(): number {
    if (this.frozenSeconds !== null) {
      return this.frozenSeconds;
    }
    return this.baseSeconds + (Date.now() - this.anchorLocalMs) / 1000;
  }

  isFrozen(): boolean {
    return this.frozenSeconds !== null;
  }

  stop(): void {
    if (this.handle !== null) {
      clearInterval(this.handle);
      this.handle = null;
    }
  }
}
