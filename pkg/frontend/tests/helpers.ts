import { IndexReportPayload, Questionnaire, ResponseSubmission, Session } from '../src/api';
import { SubmissionApi } from '../src/queue';

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export const questionnaire: Questionnaire = {
  questionnaire_id: 'micg-v1',
  items: [
    { indicator_id: 'stunting', prompt: 'Stunting', scale_labels: ['1', '2', '3', '4', '5'] },
    { indicator_id: 'leisure', prompt: 'Leisure', scale_labels: ['1', '2', '3', '4', '5'] },
    { indicator_id: 'respect', prompt: 'Respect', scale_labels: ['1', '2', '3', '4', '5'] },
  ],
};

export const session: Session = {
  session_id: 'session-00000001',
  respondent_id: 'resp-0001',
  role: 'mother',
  questionnaire_id: 'micg-v1',
  status: 'open',
};

/**
 * In-memory stand-in for the service: enforces the same duplicate rule the
 * real server applies, so exactly-once behaviour is observable.
 */
export class FakeServer implements SubmissionApi {
  received: { sessionId: string; submission: ResponseSubmission }[] = [];
  submittedSessions: string[] = [];
  offline = false;

  private seen = new Set<string>();

  async submitResponse(sessionId: string, submission: ResponseSubmission): Promise<unknown> {
    if (this.offline) throw new TypeError('fetch failed: network down');
    const key = `${sessionId}:${submission.indicator_id}`;
    if (this.seen.has(key)) {
      const { ApiError } = await import('../src/api');
      throw new ApiError(409, `indicator '${submission.indicator_id}' already answered in session '${sessionId}'`);
    }
    this.seen.add(key);
    this.received.push({ sessionId, submission });
    return { session_id: sessionId, indicator_id: submission.indicator_id };
  }

  async submitSession(sessionId: string): Promise<unknown> {
    if (this.offline) throw new TypeError('fetch failed: network down');
    this.submittedSessions.push(sessionId);
    return { session_id: sessionId, status: 'submitted' };
  }
}

/** Payload shaped exactly like the service's report endpoint. The attainment
 * numbers are deliberately NOT 1 - deprivation so any client-side arithmetic
 * would be caught. */
export const interceptedReport: IndexReportPayload = {
  child_id: 'child-00042',
  construct_scores: {
    physical_health_nutrition: 0.5,
    safety_security: 0.25,
    emotional_social_wellbeing: 0.142857,
    leisure_learning: 0.6,
    economic_environmental: 0.0,
    cultural_identity: 1.0,
  },
  broad_scores: {
    health_safety: 0.375,
    emotional_social_development: 0.142857,
    learning_cognitive_development: 0.6,
    economic_environmental_identity: 0.5,
  },
  overarching_scores: {
    physical_environmental_wellbeing: 0.4375,
    emotional_social: 0.142857,
    educational_cognitive: 0.6,
  },
  overall: 0.393452,
  attainment: {
    overarching_scores: {
      physical_environmental_wellbeing: 0.111,
      emotional_social: 0.222,
      educational_cognitive: 0.333,
    },
    overall: 0.444,
  },
  weights_used: {
    indicator: { stunting: 0.2 },
    construct: { physical_health_nutrition: 0.5 },
    broad: { health_safety: 0.5 },
    overarching: { physical_environmental_wellbeing: 0.3333333333333333 },
  },
  computed_at: '2026-02-01T00:00:10+00:00',
};
