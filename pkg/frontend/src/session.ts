import { Questionnaire, QuestionnaireItem, Session } from './api';
import { MonotonicClock, monotonicClock } from './clock';
import { OfflineQueue } from './queue';
import { QuestionTimer } from './timer';

export interface QuestionCard {
  indicator_id: string;
  prompt: string;
  scale_labels: string[];
  position: number;
  total: number;
}

export interface AnswerRecord {
  indicatorId: string;
  rating: number;
  responseTimeMs: number;
}

/**
 * Drives one questionnaire session: one question per screen, per-question
 * monotonic timing, client-side duplicate prevention, and queued submission.
 * The caller renders the current card, calls cardShown() once it is fully
 * visible, and answer() when the respondent taps a rating.
 */
export class SessionRunner {
  private index = 0;
  private answered = new Set<string>();
  private timer: QuestionTimer;
  private shown = false;

  constructor(
    private readonly session: Session,
    private readonly questionnaire: Questionnaire,
    private readonly queue: OfflineQueue,
    clock: MonotonicClock = monotonicClock,
  ) {
    this.timer = new QuestionTimer(clock);
  }

  get finished(): boolean {
    return this.index >= this.questionnaire.items.length;
  }

  currentCard(): QuestionCard | null {
    if (this.finished) return null;
    const item: QuestionnaireItem = this.questionnaire.items[this.index];
    return {
      indicator_id: item.indicator_id,
      prompt: item.prompt,
      scale_labels: item.scale_labels,
      position: this.index + 1,
      total: this.questionnaire.items.length,
    };
  }

  /** Call when the current card is fully rendered and visible. */
  cardShown(): void {
    if (this.finished) throw new Error('session already finished');
    this.timer.markShown();
    this.shown = true;
  }

  answer(rating: number): AnswerRecord {
    if (this.finished) throw new Error('session already finished');
    if (!this.shown) throw new Error('card not shown yet');
    if (!Number.isInteger(rating) || rating < 1 || rating > 5) {
      throw new Error(`rating must be an integer in 1..5, got ${rating}`);
    }
    const item = this.questionnaire.items[this.index];
    if (this.answered.has(item.indicator_id)) {
      throw new Error(`indicator ${item.indicator_id} already answered`);
    }
    const responseTimeMs = this.timer.elapsedMs();
    this.answered.add(item.indicator_id);
    this.queue.enqueue({
      kind: 'response',
      sessionId: this.session.session_id,
      submission: {
        indicator_id: item.indicator_id,
        rating,
        response_time_ms: responseTimeMs,
      },
    });
    this.index += 1;
    this.shown = false;
    if (this.finished) {
      this.queue.enqueue({ kind: 'submit-session', sessionId: this.session.session_id });
    }
    return { indicatorId: item.indicator_id, rating, responseTimeMs };
  }
}
