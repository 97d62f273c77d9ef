/** Thin client for the topic-page job API. All pipeline logic lives on the
 *  server; this module only transports snapshots. */

import type { JobSnapshot } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface SubmitForm {
  query: string;
  canonicalNames: string[];
  overrides?: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(detail, resp.status);
    }
    return resp;
  }

  async submitJob(form: SubmitForm): Promise<string> {
    const resp = await this.request("/api/jobs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        query: form.query,
        canonical_names: form.canonicalNames,
        overrides: form.overrides ?? {},
      }),
    });
    const body = await resp.json();
    return body.id as string;
  }

  async getJob(id: string): Promise<JobSnapshot> {
    const resp = await this.request(`/api/jobs/${id}`);
    return (await resp.json()) as JobSnapshot;
  }

  /** Raw page JSON exactly as the server exported it (used verbatim for
   *  the download button so the bytes match the server export). */
  async getPageText(id: string): Promise<string> {
    const resp = await this.request(`/api/jobs/${id}/page`);
    return await resp.text();
  }

  async getAudit(id: string, seed = 0): Promise<unknown> {
    const resp = await this.request(`/api/jobs/${id}/audit?seed=${seed}`);
    return await resp.json();
  }
}

export interface PollOptions {
  intervalMs?: number; // base poll interval
  maxBackoffMs?: number; // cap for the failure backoff
  maxFailures?: number; // consecutive failures before giving up
  sleep?: (ms: number) => Promise<void>;
  onUpdate?: (job: JobSnapshot) => void;
  onStale?: (stale: boolean) => void;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/** Submit a job, then poll (1 s interval, capped backoff on network
 *  failures) until it reaches a terminal state. */
export async function submitAndPoll(
  api: ApiClient,
  form: SubmitForm,
  options: PollOptions = {},
): Promise<JobSnapshot> {
  if (!form.query.trim()) {
    throw new Error("query must be non-empty");
  }
  const interval = options.intervalMs ?? 1000;
  const maxBackoff = options.maxBackoffMs ?? 8000;
  const maxFailures = options.maxFailures ?? 5;
  const sleep = options.sleep ?? defaultSleep;

  const id = await api.submitJob(form);
  let failures = 0;
  for (;;) {
    try {
      const job = await api.getJob(id);
      if (failures > 0) options.onStale?.(false);
      failures = 0;
      options.onUpdate?.(job);
      if (job.state === "done" || job.state === "failed") {
        return job;
      }
      await sleep(interval);
    } catch (err) {
      if (err instanceof ApiError && err.status < 500) throw err; // semantic
      failures += 1;
      options.onStale?.(true);
      if (failures >= maxFailures) throw err;
      await sleep(Math.min(interval * 2 ** failures, maxBackoff));
    }
  }
}
