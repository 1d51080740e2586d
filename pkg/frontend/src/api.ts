// Thin typed client over the oracle-service HTTP API.

export interface QueryCard {
  session_id: string;
  t: number;
  strategy: string;
  row_id: number;
  p1: number | null;
  features: Record<string, number>;
}

export interface StepOutcome {
  t: number;
  row_id: number;
  label: number;
  reward: number;
  cum_reward: number;
  finished: boolean;
  weights?: number[];
}

export interface SessionSummary {
  session_id: string;
  strategy: string;
  t: number;
  horizon: number;
  cum_reward: number;
  finished: boolean;
  labeled: number;
  unlabeled: number;
}

export interface StatePayload extends SessionSummary {
  rewards: number[];
  cum_rewards: number[];
  weights_history: number[][];
  expert_names: string[];
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/** The service answers GET next with 410 once the session is over. */
export class SessionDone extends ApiError {
  constructor(readonly summary: SessionSummary) {
    super(410, 'session finished');
  }
}

/** 409: the card we tried to label is no longer the pending one. */
export class StaleCard extends ApiError {
  constructor(message: string) {
    super(409, message);
  }
}

async function parseBody(res: Response): Promise<any> {
  try {
    return await res.json();
  } catch {
    return {};
  }
}

export class OracleClient {
  constructor(readonly baseUrl: string = '') {}

  async createSession(config: Record<string, unknown>): Promise<{ session_id: string; state: SessionSummary }> {
    const res = await fetch(`${this.baseUrl}/api/sessions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ config }),
    });
    const body = await parseBody(res);
    if (!res.ok) throw new ApiError(res.status, body.detail ?? `create failed: ${res.status}`);
    return body;
  }

  async nextQuery(sessionId: string): Promise<QueryCard> {
    const res = await fetch(`${this.baseUrl}/api/sessions/${sessionId}/next`);
    const body = await parseBody(res);
    if (res.status === 410) throw new SessionDone(body.summary);
    if (!res.ok) throw new ApiError(res.status, body.detail ?? `next failed: ${res.status}`);
    return body;
  }

  async submitLabel(sessionId: string, rowId: number, label: 0 | 1): Promise<StepOutcome> {
    const res = await fetch(`${this.baseUrl}/api/sessions/${sessionId}/label`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ row_id: rowId, label }),
    });
    const body = await parseBody(res);
    if (res.status === 409) throw new StaleCard(body.detail ?? 'stale card');
    if (!res.ok) throw new ApiError(res.status, body.detail ?? `label failed: ${res.status}`);
    return body;
  }

  async state(sessionId: string): Promise<StatePayload> {
    const res = await fetch(`${this.baseUrl}/api/sessions/${sessionId}/state`);
    const body = await parseBody(res);
    if (!res.ok) throw new ApiError(res.status, body.detail ?? `state failed: ${res.status}`);
    return body;
  }
}
