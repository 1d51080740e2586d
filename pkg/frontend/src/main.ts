import { OracleClient } from './api.js';
import { ConsoleMachine, startConsole } from './machine.js';
import { bindElements, render } from './render.js';

function sessionConfigFromForm(): Record<string, unknown> {
  const datasetPath = (document.getElementById('dataset-path') as HTMLInputElement).value;
  const strategy = (document.getElementById('strategy-select') as HTMLSelectElement).value;
  const horizon = (document.getElementById('horizon-input') as HTMLInputElement).value;
  const seed = (document.getElementById('seed-input') as HTMLInputElement).value;
  return {
    'dataset.path': datasetPath,
    strategy,
    horizon: Number(horizon || 100),
    seed: Number(seed || 0),
  };
}

async function boot(): Promise<void> {
  const el = bindElements(document);
  const startButton = document.getElementById('start-session') as HTMLButtonElement;
  const client = new OracleClient('');
  let machine: ConsoleMachine | null = null;

  startButton.addEventListener('click', async () => {
    startButton.disabled = true;
    try {
      machine = await startConsole(client, sessionConfigFromForm());
      machine.onChange((view) => render(view, el));
      el.errorBanner.hidden = true;
      await machine.fetchNext();
    } catch (err) {
      el.errorBanner.hidden = false;
      el.errorBanner.textContent = err instanceof Error ? err.message : String(err);
      startButton.disabled = false;
    }
  });

  el.fraudButton.addEventListener('click', () => machine?.submitVerdict('fraud'));
  el.cleanButton.addEventListener('click', () => machine?.submitVerdict('not-fraud'));
  el.errorBanner.addEventListener('click', () => machine?.fetchNext());
}

document.addEventListener('DOMContentLoaded', () => {
  void boot();
});
