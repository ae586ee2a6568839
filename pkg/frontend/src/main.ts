import { ApiClient, ApiError } from './api';
import { configFromLocation } from './config';
import { renderEmptyReport, renderQuestionCard, renderReport, renderSyncStatus } from './dom';
import { LocalStorageStorage, OfflineQueue } from './queue';
import { buildReportView, ReportView } from './report';
import { SessionRunner } from './session';

const QUESTIONNAIRE_ID = 'micg-v1';

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

async function startSession(api: ApiClient, queue: OfflineQueue): Promise<void> {
  const respondent = (el('respondent-id') as HTMLInputElement).value.trim();
  const role = (el('role') as HTMLSelectElement).value as 'mother' | 'child';
  if (!respondent) return;

  const questionnaire = await api.getQuestionnaire(QUESTIONNAIRE_ID);
  const session = await api.createSession(
    respondent,
    role,
    QUESTIONNAIRE_ID,
    `${respondent}-${QUESTIONNAIRE_ID}-${Date.now()}`,
  );
  const runner = new SessionRunner(session, questionnaire, queue);
  const stage = el('stage');

  const showNext = () => {
    const card = runner.currentCard();
    if (!card) {
      stage.innerHTML = '<p class="done">All questions answered — thank you!</p>';
      void queue.flush(api);
      return;
    }
    renderQuestionCard(stage, card, (rating) => {
      try {
        runner.answer(rating);
      } catch (error) {
        if (error instanceof ApiError && error.isSessionClosed) {
          stage.innerHTML = '<p class="expired">Session expired — please restart.</p>';
          return;
        }
        throw error;
      }
      void queue.flush(api);
      showNext();
    });
    // start the timer only after the card is fully painted and visible
    requestAnimationFrame(() => requestAnimationFrame(() => runner.cardShown()));
  };
  showNext();
}

async function showReport(api: ApiClient): Promise<void> {
  const childId = (el('child-id') as HTMLInputElement).value.trim();
  const container = el('report');
  if (!childId) return;
  let view: ReportView;
  try {
    view = buildReportView(await api.getReport(childId));
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      renderEmptyReport(container, childId);
      return;
    }
    throw error;
  }
  let mode: 'deprivation' | 'attainment' = 'deprivation';
  const draw = () => renderReport(container, view, mode);
  el('toggle-mode').onclick = () => {
    mode = mode === 'deprivation' ? 'attainment' : 'deprivation';
    draw();
  };
  draw();
}

export function boot(): void {
  const config = configFromLocation();
  const api = new ApiClient(config);
  const queue = new OfflineQueue(new LocalStorageStorage());
  queue.onStatus((status, pending) => renderSyncStatus(el('sync-status'), status, pending));
  window.addEventListener('online', () => void queue.flush(api));

  el('start-session').addEventListener('click', () => void startSession(api, queue));
  el('show-report').addEventListener('click', () => void showReport(api));
  void queue.flush(api); // drain anything left over from a previous visit
}

if (typeof document !== 'undefined' && document.getElementById('start-session')) {
  boot();
}
