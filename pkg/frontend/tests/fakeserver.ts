import type { FetchLike } from "../src/api.js";
import type {
  DuelItem,
  LeaderboardView,
  NextDuelResponse,
  SessionView,
  StoppingView,
} from "../src/types.js";

/**
 * In-memory double of the session server, implementing the documented
 * JSON contract: blind duel items, 204 folds, 404/409/401 errors, and a
 * leaderboard that actually moves when judgments land. Tests drive the UI
 * against this instead of a live backend.
 */
export class FakeServer {
  armIds = ["p000", "p001", "p002"];
  wins: number[][];
  counts: number[][];
  paused = false;
  requireToken: string | null = null;
  requests: string[] = [];

  private script: { item: DuelItem; pair: [number, number] }[] = [];
  private cursor = 0;
  private judged = new Set<string>();
  private judgeCalls = 0;

  constructor(duels = 6) {
    const k = this.armIds.length;
    this.wins = Array.from({ length: k }, () => Array(k).fill(0));
    this.counts = Array.from({ length: k }, () => Array(k).fill(0));
    for (let d = 0; d < duels; d++) {
      const i = d % k;
      const j = (d + 1) % k;
      this.script.push({
        item: {
          duel_id: `d${d}`,
          input_idx: 0,
          round: Math.floor(d / 3) + 1,
          input: `question #${d}`,
          a: `answer from panel A of duel ${d}`,
          b: `answer from panel B of duel ${d}`,
        },
        pair: [i, j],
      });
    }
  }

  get done(): boolean {
    return this.cursor >= this.script.length;
  }

  get fetch(): FetchLike {
    return (url, init) => Promise.resolve(this.handle(url, init));
  }

  private handle(url: string, init?: RequestInit): Response {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    this.requests.push(`${method} ${path}`);

    if (this.requireToken !== null) {
      const header = (init?.headers as Record<string, string> | undefined)?.["Authorization"];
      if (header !== `Bearer ${this.requireToken}`) {
        return json(401, { error: "unauthorized", detail: "missing or bad token" });
      }
    }

    if (method === "GET" && path === "/api/session") return json(200, this.sessionView());
    if (method === "GET" && path === "/api/duel/next") return json(200, this.nextView());
    if (method === "GET" && path === "/api/leaderboard") return json(200, this.leaderboardView());
    if (method === "GET" && path === "/api/stopping") return json(200, this.stoppingView());
    if (method === "POST" && path === "/api/control") {
      const body = JSON.parse(String(init?.body ?? "{}"));
      if (body.action === "pause") this.paused = true;
      else if (body.action === "resume") this.paused = false;
      else if (body.action === "mutate_now") this.mutate();
      else return json(400, { error: "bad_request", detail: `unknown action ${body.action}` });
      return json(202, { status: "accepted", action: body.action });
    }
    const judgment = path.match(/^\/api\/duel\/([^/]+)\/judgment$/);
    if (method === "POST" && judgment) {
      return this.fold(judgment[1]!, JSON.parse(String(init?.body ?? "{}")));
    }
    return json(404, { error: "not_found", detail: path });
  }

  private fold(duelId: string, body: { input_idx?: number; choice?: string }): Response {
    const entry = this.script.find((s) => s.item.duel_id === duelId);
    if (!entry) return json(404, { error: "unknown_duel", detail: duelId });
    const key = `${duelId}:${body.input_idx}`;
    if (this.judged.has(key)) {
      return json(409, { error: "duplicate_judgment", detail: key });
    }
    this.judged.add(key);
    this.judgeCalls += 1;
    const [i, j] = entry.pair;
    if (body.choice === "A") {
      this.wins[i]![j]! += 1;
    } else if (body.choice === "B") {
      this.wins[j]![i]! += 1;
    } else {
      this.wins[i]![j]! += 0.5;
      this.wins[j]![i]! += 0.5;
    }
    this.counts[i]![j]! += 1;
    this.counts[j]![i]! += 1;
    this.cursor += 1;
    return new Response(null, { status: 204 });
  }

  private mutate(): void {
    const id = `p${String(this.armIds.length).padStart(3, "0")}`;
    this.armIds.push(id);
    for (const row of [this.wins, this.counts]) {
      for (const r of row) r.push(0);
      row.push(Array(this.armIds.length).fill(0));
    }
  }

  private muHat(): number[][] {
    const k = this.armIds.length;
    return Array.from({ length: k }, (_, i) =>
      Array.from({ length: k }, (_, j) =>
        i === j || this.counts[i]![j]! === 0 ? 0.5 : this.wins[i]![j]! / this.counts[i]![j]!,
      ),
    );
  }

  private sessionView(): SessionView {
    return {
      mode: "human_judge",
      round: Math.min(Math.floor(this.cursor / 3) + 1, 2),
      rounds: 2,
      duel_in_round: this.cursor % 3,
      duels_per_round: 3,
      k: this.armIds.length,
      cost: {
        judge_calls: this.judgeCalls,
        llm_calls: 0,
        prompt_tokens: 0,
        completion_tokens: 0,
        predicted_budget: { dueling: 6 },
      },
      stopping: null,
      paused: this.paused,
      done: this.done,
      pending_judgments: this.done || this.paused ? 0 : 1,
    };
  }

  private nextView(): NextDuelResponse {
    if (this.done || this.paused) {
      return { duel: null, done: this.done, paused: this.paused };
    }
    return { duel: this.script[this.cursor]!.item, done: false, paused: false };
  }

  private leaderboardView(): LeaderboardView {
    const mu = this.muHat();
    const k = this.armIds.length;
    const copeland = mu.map((row, i) =>
      row.reduce((acc, v, j) => acc + (j !== i && v > 0.5 ? 1 : 0), 0),
    );
    const borda = mu.map((row, i) =>
      k > 1 ? (row.reduce((a, v) => a + v, 0) - 0.5) / (k - 1) : 0.5,
    );
    return {
      arm_ids: [...this.armIds],
      copeland,
      borda,
      mu_hat: mu,
      upper: mu.map((row) => row.map((v) => Math.min(1, v + 0.2))),
      lower: mu.map((row) => row.map((v) => Math.max(0, v - 0.2))),
    };
  }

  private stoppingView(): StoppingView {
    return {
      cover: { enabled: false, met: false },
      pac: { enabled: false, met: false },
      epsilon: null,
      best: 0,
      best_id: this.armIds[0]!,
      blocking: [],
      should_stop: false,
    };
  }
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
