/** Thin client for the review service. Only the versioned endpoints. */

import type {
  Diagnostic,
  SubmissionBody,
  TaskInfo,
  TaskListResponse,
  TaskPayload,
  VerificationRecord,
} from './types';

const API_PREFIX = '/api/v1';

export class ConflictError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = 'ConflictError';
  }
}

export class ValidationFailure extends Error {
  diagnostics: Diagnostic[];
  constructor(diagnostics: Diagnostic[]) {
    super('submission rejected');
    this.name = 'ValidationFailure';
    this.diagnostics = diagnostics;
  }
}

export class ApiError extends Error {
  status: number;
  constructor(status: number, detail: string) {
    super(detail);
    this.name = 'ApiError';
    this.status = status;
  }
}

export interface ClientConfig {
  baseUrl: string;
  token?: string;
  fetchImpl?: typeof fetch;
}

export class ReviewApiClient {
  private baseUrl: string;
  private token?: string;
  private fetchImpl: typeof fetch;

  constructor(config: ClientConfig) {
    this.baseUrl = config.baseUrl.replace(/\/$/, '');
    this.token = config.token;
    this.fetchImpl = config.fetchImpl ?? fetch;
  }

  private headers(): Record<string, string> {
    const out: Record<string, string> = { 'content-type': 'application/json' };
    if (this.token) out['authorization'] = `Bearer ${this.token}`;
    return out;
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const resp = await this.fetchImpl(`${this.baseUrl}${API_PREFIX}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers ?? {}) },
    });
    if (resp.status === 409) {
      const body = (await resp.json()) as { detail?: string };
      throw new ConflictError(body.detail ?? 'conflict');
    }
    if (resp.status === 422) {
      const body = (await resp.json()) as { detail?: Diagnostic[] | string };
      const detail = Array.isArray(body.detail)
        ? body.detail
        : [{ index: null, error: String(body.detail ?? 'invalid') }];
      throw new ValidationFailure(detail);
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* plain-text error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json();
  }

  async listTasks(state?: string): Promise<TaskListResponse> {
    const query = state ? `?state=${encodeURIComponent(state)}` : '';
    return (await this.request(`/tasks${query}`)) as TaskListResponse;
  }

  async getTask(taskId: string): Promise<TaskPayload> {
    return (await this.request(`/tasks/${encodeURIComponent(taskId)}`)) as TaskPayload;
  }

  async claimTask(taskId: string, annotatorId: string): Promise<TaskInfo> {
    const body = (await this.request(`/tasks/${encodeURIComponent(taskId)}/claim`, {
      method: 'POST',
      body: JSON.stringify({ annotator_id: annotatorId }),
    })) as { task: TaskInfo };
    return body.task;
  }

  async submitDecisions(taskId: string, submission: SubmissionBody): Promise<VerificationRecord> {
    const body = (await this.request(`/tasks/${encodeURIComponent(taskId)}/decisions`, {
      method: 'POST',
      body: JSON.stringify(submission),
    })) as { applied: boolean; record: VerificationRecord };
    return body.record;
  }

  async conversationStatus(conversationId: string): Promise<{
    conversation_id: string;
    submissions: number;
    quorum: number;
    judging_ready: boolean;
  }> {
    return (await this.request(
      `/conversations/${encodeURIComponent(conversationId)}/status`,
    )) as {
      conversation_id: string;
      submissions: number;
      quorum: number;
      judging_ready: boolean;
    };
  }
}
