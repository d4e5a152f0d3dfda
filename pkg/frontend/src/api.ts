/**
 * Advisory-service client.
 *
 * One in-flight request per endpoint: firing again while a request is
 * pending reuses the pending promise when the body is identical, or
 * supersedes it otherwise. Every dispatch gets a sequence number and
 * responses that arrive after a newer dispatch are discarded, so the UI
 * never renders a stale answer over a fresh one.
 */

import type {
  AdviseRequest,
  AdviseResponse,
  ApiErrorBody,
  HealthResponse,
  SavingsJob,
  TableResponse,
  WhatIfRequest,
  WhatIfResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly fields: { field: string; message: string }[],
  ) {
    super(fields.map((f) => `${f.field}: ${f.message}`).join("; ") || `HTTP ${status}`);
  }
}

export class StaleResponseError extends Error {
  constructor() {
    super("superseded by a newer request");
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

interface Pending {
  seq: number;
  body: string;
  promise: Promise<unknown>;
}

export class AdvisoryClient {
  private seqByEndpoint = new Map<string, number>();
  private pendingByEndpoint = new Map<string, Pending>();

  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  health(): Promise<HealthResponse> {
    return this.request("GET", "/v1/health") as Promise<HealthResponse>;
  }

  table(): Promise<TableResponse> {
    return this.request("GET", "/v1/table") as Promise<TableResponse>;
  }

  advise(body: AdviseRequest): Promise<AdviseResponse> {
    return this.request("POST", "/v1/advise", body) as Promise<AdviseResponse>;
  }

  whatif(body: WhatIfRequest): Promise<WhatIfResponse> {
    return this.request("POST", "/v1/whatif", body) as Promise<WhatIfResponse>;
  }

  savingsJob(jobId: string): Promise<SavingsJob> {
    return this.request("GET", `/v1/savings/${jobId}`) as Promise<SavingsJob>;
  }

  startSavings(measuredPath: string, months: string[]): Promise<{ job_id: string }> {
    return this.request("POST", "/v1/savings", {
      measured_path: measuredPath,
      months,
    }) as Promise<{ job_id: string }>;
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    const key = `${method} ${path}`;
    const encoded = body === undefined ? "" : JSON.stringify(body);
    const pending = this.pendingByEndpoint.get(key);
    if (pending && pending.body === encoded) {
      return pending.promise; // identical request already in flight
    }
    const seq = (this.seqByEndpoint.get(key) ?? 0) + 1;
    this.seqByEndpoint.set(key, seq);

    const promise = this.dispatch(method, path, encoded, key, seq);
    this.pendingByEndpoint.set(key, { seq, body: encoded, promise });
    return promise;
  }

  private async dispatch(
    method: string,
    path: string,
    encoded: string,
    key: string,
    seq: number,
  ): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: encoded ? { "content-type": "application/json" } : undefined,
        body: encoded || undefined,
      });
    } finally {
      const pending = this.pendingByEndpoint.get(key);
      if (pending && pending.seq === seq) {
        this.pendingByEndpoint.delete(key);
      }
    }
    if ((this.seqByEndpoint.get(key) ?? 0) !== seq) {
      throw new StaleResponseError();
    }
    if (!response.ok) {
      let fields: ApiErrorBody["errors"] = [];
      try {
        fields = ((await response.json()) as ApiErrorBody).errors ?? [];
      } catch {
        // non-JSON error body: report the status alone
      }
      throw new ApiError(response.status, fields);
    }
    return response.json();
  }
}

/** Repeatedly refresh live conditions; the advisory cadence is minutes. */
export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly tick: () => void,
    readonly intervalMs: number = 60_000,
  ) {}

  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(this.tick, this.intervalMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
