// DOM rendering driven entirely by the machine's view; no DOM-held state.

import { ConsoleView } from './machine.js';
import { drawRewardCurve, drawWeightBars } from './charts.js';

export interface ConsoleElements {
  status: HTMLElement;
  step: HTMLElement;
  strategy: HTMLElement;
  p1: HTMLElement;
  cumReward: HTMLElement;
  featureTable: HTMLElement;
  fraudButton: HTMLButtonElement;
  cleanButton: HTMLButtonElement;
  summary: HTMLElement;
  errorBanner: HTMLElement;
  rewardCanvas: HTMLCanvasElement | null;
  weightsCanvas: HTMLCanvasElement | null;
}

export function bindElements(root: Document | HTMLElement): ConsoleElements {
  const get = (id: string) => {
    const el = (root as Document).getElementById
      ? (root as Document).getElementById(id)
      : (root as HTMLElement).querySelector(`#${id}`);
    if (!el) throw new Error(`missing element #${id}`);
    return el as HTMLElement;
  };
  return {
    status: get('status'),
    step: get('step'),
    strategy: get('strategy'),
    p1: get('p1'),
    cumReward: get('cum-reward'),
    featureTable: get('feature-table'),
    fraudButton: get('verdict-fraud') as HTMLButtonElement,
    cleanButton: get('verdict-clean') as HTMLButtonElement,
    summary: get('summary'),
    errorBanner: get('error-banner'),
    rewardCanvas: get('reward-chart') as HTMLCanvasElement,
    weightsCanvas: get('weights-chart') as HTMLCanvasElement,
  };
}

const PHASE_TEXT: Record<string, string> = {
  'awaiting-query': 'fetching next transaction...',
  loading: 'fetching next transaction...',
  'awaiting-verdict': 'your verdict steers the next query',
  submitting: 'recording verdict...',
  done: 'session complete',
  error: 'service error',
};

export function render(view: ConsoleView, el: ConsoleElements): void {
  el.status.textContent = PHASE_TEXT[view.phase] ?? view.phase;
  el.cumReward.textContent = String(view.cumReward);

  const verdictEnabled = view.phase === 'awaiting-verdict';
  el.fraudButton.disabled = !verdictEnabled;
  el.cleanButton.disabled = !verdictEnabled;

  if (view.card) {
    el.step.textContent = `step ${view.card.t}`;
    el.strategy.textContent = view.card.strategy;
    el.p1.textContent = view.card.p1 === null ? 'n/a' : view.card.p1.toFixed(3);
    const rows = Object.entries(view.card.features)
      .map(([name, value]) => `<tr><td>${name}</td><td>${Number(value).toFixed(4)}</td></tr>`)
      .join('');
    el.featureTable.innerHTML = `<table><tbody>${rows}</tbody></table>`;
  } else if (view.phase !== 'done') {
    el.step.textContent = '';
    el.strategy.textContent = '';
    el.p1.textContent = '';
    el.featureTable.innerHTML = '';
  }

  if (view.phase === 'done' && view.summary) {
    el.summary.hidden = false;
    el.summary.textContent =
      `Finished after ${view.summary.t} of ${view.summary.horizon} queries - ` +
      `cumulated reward ${view.summary.cum_reward} ` +
      `(${view.summary.labeled} labeled, ${view.summary.unlabeled} left unlabeled).`;
  } else {
    el.summary.hidden = true;
    el.summary.textContent = '';
  }

  if (view.phase === 'error' && view.errorMessage) {
    el.errorBanner.hidden = false;
    el.errorBanner.textContent = `${view.errorMessage} - retry`;
  } else {
    el.errorBanner.hidden = true;
    el.errorBanner.textContent = '';
  }

  if (el.rewardCanvas) drawRewardCurve(el.rewardCanvas, view.curve);
  if (el.weightsCanvas) drawWeightBars(el.weightsCanvas, view.weights, view.expertNames);
}
