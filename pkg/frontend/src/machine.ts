// Console state machine: one pending card at a time, verdicts only while a
// card is awaiting one, and every displayed number sourced from the last
// service payload.

import { OracleClient, QueryCard, SessionDone, SessionSummary, StaleCard, StepOutcome } from './api.js';

export type Phase =
  | 'awaiting-query'
  | 'loading'
  | 'awaiting-verdict'
  | 'submitting'
  | 'done'
  | 'error';

export interface ConsoleView {
  phase: Phase;
  card: QueryCard | null;
  cumReward: number;
  curve: number[]; // cumulative reward after each answered card
  weights: number[] | null;
  expertNames: string[];
  summary: SessionSummary | null;
  errorMessage: string | null;
}

type Listener = (view: ConsoleView) => void;

interface ClientLike {
  nextQuery(sessionId: string): Promise<QueryCard>;
  submitLabel(sessionId: string, rowId: number, label: 0 | 1): Promise<StepOutcome>;
}

export class ConsoleMachine {
  private phase: Phase = 'awaiting-query';
  private card: QueryCard | null = null;
  private cumReward = 0;
  private curve: number[] = [];
  private weights: number[] | null = null;
  private summary: SessionSummary | null = null;
  private errorMessage: string | null = null;
  private listeners: Listener[] = [];

  constructor(
    private readonly client: ClientLike,
    readonly sessionId: string,
    private readonly expertNames: string[] = [],
  ) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  view(): ConsoleView {
    return {
      phase: this.phase,
      card: this.card,
      cumReward: this.cumReward,
      curve: [...this.curve],
      weights: this.weights ? [...this.weights] : null,
      expertNames: this.expertNames,
      summary: this.summary,
      errorMessage: this.errorMessage,
    };
  }

  private emit(): void {
    const view = this.view();
    for (const listener of this.listeners) listener(view);
  }

  /** Fetch the next card. No-op unless we are between cards. */
  async fetchNext(): Promise<boolean> {
    if (this.phase !== 'awaiting-query' && this.phase !== 'error') return false;
    this.phase = 'loading';
    this.emit();
    try {
      this.card = await this.client.nextQuery(this.sessionId);
      this.phase = 'awaiting-verdict';
      this.errorMessage = null;
    } catch (err) {
      if (err instanceof SessionDone) {
        this.summary = err.summary;
        this.cumReward = err.summary.cum_reward;
        this.phase = 'done';
      } else {
        this.errorMessage = err instanceof Error ? err.message : String(err);
        this.phase = 'error';
      }
    }
    this.emit();
    return this.phase === 'awaiting-verdict';
  }

  /**
   * Submit the analyst's verdict for the displayed card. Guarded: only one
   * POST can be in flight per card, later calls are dropped.
   */
  async submitVerdict(verdict: 'fraud' | 'not-fraud'): Promise<boolean> {
    if (this.phase !== 'awaiting-verdict' || this.card === null) return false;
    const card = this.card;
    this.phase = 'submitting'; // synchronous guard against double clicks
    this.emit();
    try {
      const outcome = await this.client.submitLabel(
        this.sessionId, card.row_id, verdict === 'fraud' ? 1 : 0);
      this.cumReward = outcome.cum_reward;
      this.curve.push(outcome.cum_reward);
      if (outcome.weights) this.weights = outcome.weights;
      this.card = null;
      this.phase = 'awaiting-query';
      this.emit();
      await this.fetchNext();
      return true;
    } catch (err) {
      if (err instanceof StaleCard) {
        // someone else answered this card: drop it and refetch silently
        this.card = null;
        this.phase = 'awaiting-query';
        this.emit();
        await this.fetchNext();
        return false;
      }
      this.errorMessage = err instanceof Error ? err.message : String(err);
      this.phase = 'error';
      this.emit();
      return false;
    }
  }
}

export async function startConsole(
  client: OracleClient,
  config: Record<string, unknown>,
): Promise<ConsoleMachine> {
  const created = await client.createSession(config);
  const state = await client.state(created.session_id);
  const machine = new ConsoleMachine(client, created.session_id, state.expert_names);
  return machine;
}
