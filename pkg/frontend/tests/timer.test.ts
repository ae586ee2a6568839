import { describe, expect, it } from 'vitest';

import { QuestionTimer } from '../src/timer';
import { OfflineQueue } from '../src/queue';
import { SessionRunner } from '../src/session';
import { questionnaire, session, sleep } from './helpers';

describe('question timing', () => {
  it('measures a scripted 1500 ms delay within [1450, 1550]', async () => {
    const runner = new SessionRunner(session, questionnaire, new OfflineQueue());
    runner.cardShown();
    await sleep(1500);
    const record = runner.answer(4);
    expect(record.responseTimeMs).toBeGreaterThanOrEqual(1450);
    expect(record.responseTimeMs).toBeLessThanOrEqual(1550);
  });

  it('answering instantly yields a small non-negative time', () => {
    const runner = new SessionRunner(session, questionnaire, new OfflineQueue());
    runner.cardShown();
    const record = runner.answer(3);
    expect(record.responseTimeMs).toBeGreaterThanOrEqual(0);
    expect(record.responseTimeMs).toBeLessThanOrEqual(100);
  });

  it('never reports a negative duration even if the clock is frozen', () => {
    let now = 500;
    const timer = new QuestionTimer(() => now);
    timer.markShown();
    // a monotonic clock can stall but not go backwards; elapsed stays >= 0
    expect(timer.elapsedMs()).toBe(0);
    now = 503.6;
    expect(timer.elapsedMs()).toBe(4); // rounded to integer ms
  });

  it('ignores wall-clock adjustments by construction', () => {
    // timing uses the injected monotonic clock; changing Date has no effect
    let mono = 1000;
    const timer = new QuestionTimer(() => mono);
    timer.markShown();
    const realDate = Date.now;
    try {
      Date.now = () => 0; // simulate a wall-clock jump backwards
      mono += 250;
      expect(timer.elapsedMs()).toBe(250);
    } finally {
      Date.now = realDate;
    }
  });

  it('refuses to measure before the card is shown', () => {
    const timer = new QuestionTimer();
    expect(() => timer.elapsedMs()).toThrow('never shown');
  });
});
