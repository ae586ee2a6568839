import { QuestionCard } from './session';
import { ReportView } from './report';
import { SyncStatus } from './queue';

/** Thin DOM layer: renders view models, reports interactions via callbacks. */

export function renderQuestionCard(
  container: HTMLElement,
  card: QuestionCard,
  onRate: (rating: number) => void,
): void {
  container.innerHTML = '';
  const wrapper = document.createElement('div');
  wrapper.className = 'question-card';

  const progress = document.createElement('p');
  progress.className = 'progress';
  progress.textContent = `Question ${card.position} of ${card.total}`;
  wrapper.appendChild(progress);

  const prompt = document.createElement('h2');
  prompt.textContent = card.prompt;
  wrapper.appendChild(prompt);

  const scale = document.createElement('div');
  scale.className = 'scale';
  card.scale_labels.forEach((label, i) => {
    const button = document.createElement('button');
    button.textContent = `${i + 1} · ${label}`;
    button.dataset.rating = String(i + 1);
    button.addEventListener('click', () => onRate(i + 1));
    scale.appendChild(button);
  });
  wrapper.appendChild(scale);
  container.appendChild(wrapper);
}

export function renderSyncStatus(element: HTMLElement, status: SyncStatus, pending: number): void {
  const text: Record<SyncStatus, string> = {
    idle: pending ? `${pending} answer(s) waiting to sync` : 'up to date',
    syncing: 'syncing…',
    offline: `offline — ${pending} answer(s) queued, will retry`,
    synced: 'all answers delivered',
  };
  element.textContent = text[status];
  element.dataset.status = status;
}

export function renderReport(
  container: HTMLElement,
  view: ReportView,
  mode: 'deprivation' | 'attainment',
): void {
  container.innerHTML = '';
  const heading = document.createElement('h2');
  heading.textContent = `Growth index for ${view.childId}`;
  container.appendChild(heading);

  const updated = document.createElement('p');
  updated.className = 'updated-at';
  updated.textContent = `last updated ${view.computedAt}`;
  container.appendChild(updated);

  const overall = document.createElement('p');
  overall.className = 'overall';
  const overallValue = mode === 'deprivation' ? view.overallDeprivation : view.overallAttainment;
  overall.textContent = `overall ${mode}: ${overallValue.toFixed(3)}`;
  container.appendChild(overall);

  const bars = document.createElement('div');
  bars.className = 'dimension-bars';
  for (const dim of view.dimensions) {
    const value = mode === 'deprivation' ? dim.deprivation : dim.attainment;
    const bar = document.createElement('div');
    bar.className = 'dimension-bar';
    bar.dataset.dimension = dim.id;
    bar.dataset.value = String(value);

    const label = document.createElement('span');
    label.textContent = dim.id.replace(/_/g, ' ');
    bar.appendChild(label);

    const track = document.createElement('div');
    track.className = 'track';
    const fill = document.createElement('div');
    fill.className = 'fill';
    fill.style.width = `${(value * 100).toFixed(1)}%`;
    track.appendChild(fill);
    bar.appendChild(track);

    const number = document.createElement('span');
    number.className = 'value';
    number.textContent = value.toFixed(3);
    bar.appendChild(number);
    bars.appendChild(bar);
  }
  container.appendChild(bars);

  const drill = document.createElement('details');
  drill.className = 'drilldown';
  const summary = document.createElement('summary');
  summary.textContent = 'broad dimensions and constructs';
  drill.appendChild(summary);
  for (const [title, rows] of [
    ['Broad dimensions', view.broad],
    ['Constructs', view.constructs],
  ] as const) {
    const section = document.createElement('h3');
    section.textContent = title;
    drill.appendChild(section);
    const list = document.createElement('ul');
    for (const row of rows) {
      const item = document.createElement('li');
      item.dataset.score = String(row.score);
      item.textContent = `${row.id.replace(/_/g, ' ')}: ${row.score.toFixed(3)}`;
      list.appendChild(item);
    }
    drill.appendChild(list);
  }
  container.appendChild(drill);
}

export function renderEmptyReport(container: HTMLElement, childId: string): void {
  container.innerHTML = '';
  const message = document.createElement('p');
  message.className = 'empty-state';
  message.textContent =
    `No report computed yet for ${childId}. ` +
    'Reports appear after the next index computation run.';
  container.appendChild(message);
}
