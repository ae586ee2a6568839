import { ApiError, ResponseSubmission } from './api';

/** The slice of the service client the queue needs. */
export interface SubmissionApi {
  submitResponse(sessionId: string, submission: ResponseSubmission): Promise<unknown>;
  submitSession(sessionId: string): Promise<unknown>;
}

/**
 * Offline-first submission queue.
 *
 * Every answer is queued locally before any network attempt and removed only
 * once the server has confirmed it — either with a success or with a
 * duplicate rejection, which means an earlier attempt already landed. That
 * pairing (client retries + server duplicate detection) is what delivers
 * each response exactly once across reconnects.
 */

export type QueueTask =
  | { kind: 'response'; sessionId: string; submission: ResponseSubmission }
  | { kind: 'submit-session'; sessionId: string };

export type SyncStatus = 'idle' | 'syncing' | 'offline' | 'synced';

export interface QueueStorage {
  load(): QueueTask[];
  save(tasks: QueueTask[]): void;
}

export class MemoryStorage implements QueueStorage {
  private tasks: QueueTask[] = [];

  load(): QueueTask[] {
    return [...this.tasks];
  }

  save(tasks: QueueTask[]): void {
    this.tasks = [...tasks];
  }
}

export class LocalStorageStorage implements QueueStorage {
  constructor(private readonly key = 'micg-survey-queue') {}

  load(): QueueTask[] {
    const raw = localStorage.getItem(this.key);
    return raw ? (JSON.parse(raw) as QueueTask[]) : [];
  }

  save(tasks: QueueTask[]): void {
    localStorage.setItem(this.key, JSON.stringify(tasks));
  }
}

export interface FlushResult {
  delivered: number;
  /** Tasks the server permanently rejected (e.g. expired session). */
  rejected: { task: QueueTask; error: ApiError }[];
  /** True when a network failure interrupted the drain. */
  wentOffline: boolean;
}

export class OfflineQueue {
  private tasks: QueueTask[];
  private listeners: ((status: SyncStatus, pending: number) => void)[] = [];

  constructor(private readonly storage: QueueStorage = new MemoryStorage()) {
    this.tasks = storage.load();
  }

  onStatus(listener: (status: SyncStatus, pending: number) => void): void {
    this.listeners.push(listener);
  }

  private notify(status: SyncStatus): void {
    for (const listener of this.listeners) listener(status, this.tasks.length);
  }

  pending(): number {
    return this.tasks.length;
  }

  enqueue(task: QueueTask): void {
    this.tasks.push(task);
    this.storage.save(this.tasks);
    this.notify('idle');
  }

  /** Drain sequentially; stops at the first network failure. */
  async flush(api: SubmissionApi): Promise<FlushResult> {
    this.notify('syncing');
    const result: FlushResult = { delivered: 0, rejected: [], wentOffline: false };
    while (this.tasks.length > 0) {
      const task = this.tasks[0];
      try {
        if (task.kind === 'response') {
          await api.submitResponse(task.sessionId, task.submission);
        } else {
          await api.submitSession(task.sessionId);
        }
        result.delivered += 1;
      } catch (error) {
        if (error instanceof ApiError) {
          if (task.kind === 'response' && error.isDuplicate) {
            // an earlier attempt landed; confirmed delivered, drop it
          } else if (task.kind === 'submit-session' && error.status === 409) {
            // session already closed; nothing left to do
          } else {
            result.rejected.push({ task, error });
          }
        } else {
          // network failure: keep everything from here and retry later
          result.wentOffline = true;
          this.storage.save(this.tasks);
          this.notify('offline');
          return result;
        }
      }
      this.tasks.shift();
      this.storage.save(this.tasks);
    }
    this.notify('synced');
    return result;
  }
}
