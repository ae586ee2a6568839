import { AppConfig } from './config';

export interface QuestionnaireItem {
  indicator_id: string;
  prompt: string;
  scale_labels: string[];
}

export interface Questionnaire {
  questionnaire_id: string;
  items: QuestionnaireItem[];
}

export interface Session {
  session_id: string;
  respondent_id: string;
  role: string;
  questionnaire_id: string;
  status: string;
}

export interface ResponseSubmission {
  indicator_id: string;
  rating: number;
  response_time_ms: number;
}

export interface IndexReportPayload {
  child_id: string;
  construct_scores: Record<string, number>;
  broad_scores: Record<string, number>;
  overarching_scores: Record<string, number>;
  overall: number;
  attainment: {
    overarching_scores: Record<string, number>;
    overall: number;
  };
  weights_used: Record<string, Record<string, number>>;
  computed_at: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }

  /** Duplicate submission: the server already holds this response. */
  get isDuplicate(): boolean {
    return this.status === 409 && this.detail.includes('already answered');
  }

  get isSessionClosed(): boolean {
    return this.status === 409 && !this.isDuplicate;
  }
}

export type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly config: AppConfig,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.config.authToken) {
      headers['Authorization'] = `Bearer ${this.config.authToken}`;
    }
    const response = await this.fetchImpl(`${this.config.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  getQuestionnaire(id: string): Promise<Questionnaire> {
    return this.request('GET', `/questionnaires/${id}`);
  }

  createSession(
    respondentId: string,
    role: 'mother' | 'child',
    questionnaireId: string,
    idempotencyKey: string,
  ): Promise<Session> {
    return this.request('POST', '/sessions', {
      respondent_id: respondentId,
      role,
      questionnaire_id: questionnaireId,
      idempotency_key: idempotencyKey,
    });
  }

  submitResponse(sessionId: string, submission: ResponseSubmission): Promise<unknown> {
    return this.request('POST', `/sessions/${sessionId}/responses`, submission);
  }

  submitSession(sessionId: string): Promise<Session> {
    return this.request('POST', `/sessions/${sessionId}/submit`, {});
  }

  getReport(childId: string): Promise<IndexReportPayload> {
    return this.request('GET', `/children/${childId}/report`);
  }
}
