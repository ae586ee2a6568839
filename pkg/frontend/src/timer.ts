import { MonotonicClock, monotonicClock } from './clock';

/**
 * Measures one question's deliberation time. The timer starts when the card
 * is fully visible (markShown), not when data is fetched, so network latency
 * never leaks into the measurement.
 */
export class QuestionTimer {
  private shownAt: number | null = null;

  constructor(private readonly clock: MonotonicClock = monotonicClock) {}

  markShown(): void {
    this.shownAt = this.clock();
  }

  /** Milliseconds since markShown; integer, never negative. */
  elapsedMs(): number {
    if (this.shownAt === null) {
      throw new Error('question was never shown');
    }
    return Math.max(0, Math.round(this.clock() - this.shownAt));
  }
}
