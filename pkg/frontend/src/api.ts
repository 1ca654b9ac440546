import type { UiConfig } from "./config.js";
import type {
  ApiErrorBody,
  Choice,
  ControlAction,
  LeaderboardView,
  NextDuelResponse,
  SessionView,
  StoppingView,
} from "./types.js";

/** A non-2xx API response, carrying the server's {error, detail} body. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly error: string,
    public readonly detail: string,
  ) {
    super(`${status} ${error}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly config: UiConfig,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T | null> {
    const headers: Record<string, string> = {};
    if (this.config.token) headers["Authorization"] = `Bearer ${this.config.token}`;
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.config.baseUrl + path, init);
    if (!resp.ok) {
      let parsed: Partial<ApiErrorBody> = {};
      try {
        parsed = (await resp.json()) as ApiErrorBody;
      } catch {
        // non-JSON error body; fall through with placeholders
      }
      throw new ApiError(
        resp.status,
        parsed.error ?? "unknown_error",
        parsed.detail ?? resp.statusText,
      );
    }
    if (resp.status === 204) return null;
    return (await resp.json()) as T;
  }

  session(): Promise<SessionView> {
    return this.request<SessionView>("GET", "/api/session") as Promise<SessionView>;
  }

  nextDuel(): Promise<NextDuelResponse> {
    return this.request<NextDuelResponse>("GET", "/api/duel/next") as Promise<NextDuelResponse>;
  }

  async submitJudgment(duelId: string, inputIdx: number, choice: Choice): Promise<void> {
    await this.request("POST", `/api/duel/${encodeURIComponent(duelId)}/judgment`, {
      input_idx: inputIdx,
      choice,
    });
  }

  leaderboard(): Promise<LeaderboardView> {
    return this.request<LeaderboardView>("GET", "/api/leaderboard") as Promise<LeaderboardView>;
  }

  stopping(): Promise<StoppingView> {
    return this.request<StoppingView>("GET", "/api/stopping") as Promise<StoppingView>;
  }

  async control(action: ControlAction): Promise<void> {
    await this.request("POST", "/api/control", { action });
  }
}
