import { ApiClient } from "./api.js";
import type {
  ControlAction,
  LeaderboardView,
  SessionView,
  StoppingView,
} from "./types.js";

export interface DashboardState {
  session: SessionView | null;
  leaderboard: LeaderboardView | null;
  stopping: StoppingView | null;
  /** Endpoints whose last poll failed; the stale data stays on screen. */
  errors: string[];
}

export interface LeaderboardRow {
  armId: string;
  copeland: number;
  borda: number;
  /** True Condorcet candidate once the PAC gate is met. */
  highlighted: boolean;
  /** min over opponents of (lower bound - 0.5); only set when highlighted. */
  confidenceMargin: number | null;
}

export interface DashboardModel {
  rows: LeaderboardRow[];
  epsilonText: string;
  pacMet: boolean;
  blocking: { arm: string; lowerBound: number }[];
  costLines: string[];
  statusLine: string;
  paused: boolean;
  done: boolean;
  errors: string[];
}

/**
 * Polls the three read endpoints on a fixed cadence and keeps the latest
 * good payload from each, so one failing endpoint degrades that panel only.
 */
export class DashboardPoller {
  state: DashboardState = { session: null, leaderboard: null, stopping: null, errors: [] };
  onChange: (state: DashboardState) => void = () => {};

  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly intervalMs: number,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async tick(): Promise<void> {
    const [session, leaderboard, stopping] = await Promise.allSettled([
      this.api.session(),
      this.api.leaderboard(),
      this.api.stopping(),
    ]);
    const errors: string[] = [];
    if (session.status === "fulfilled") this.state.session = session.value;
    else errors.push("session");
    if (leaderboard.status === "fulfilled") this.state.leaderboard = leaderboard.value;
    else errors.push("leaderboard");
    if (stopping.status === "fulfilled") this.state.stopping = stopping.value;
    else errors.push("stopping");
    this.state = { ...this.state, errors };
    this.onChange(this.state);
  }

  async control(action: ControlAction): Promise<void> {
    await this.api.control(action);
    await this.tick(); // reflect the new state without waiting a full period
  }
}

/** Shape the raw polled state into exactly what the dashboard renders. */
export function dashboardModel(state: DashboardState): DashboardModel {
  const { session, leaderboard, stopping } = state;
  const pacMet = stopping?.pac.met ?? false;
  const bestId = stopping?.best_id ?? null;

  const rows: LeaderboardRow[] = [];
  if (leaderboard) {
    for (let i = 0; i < leaderboard.arm_ids.length; i++) {
      const armId = leaderboard.arm_ids[i]!;
      const highlighted = pacMet && armId === bestId;
      rows.push({
        armId,
        copeland: leaderboard.copeland[i] ?? 0,
        borda: leaderboard.borda[i] ?? 0,
        highlighted,
        confidenceMargin: highlighted ? confidenceMargin(leaderboard, i) : null,
      });
    }
    rows.sort((x, y) => y.copeland - x.copeland || y.borda - x.borda);
  }

  const epsilon = stopping?.epsilon ?? null;
  const costLines: string[] = [];
  if (session) {
    costLines.push(`judge calls: ${session.cost.judge_calls}`);
    costLines.push(`llm calls: ${session.cost.llm_calls}`);
    for (const [kind, value] of Object.entries(session.cost.predicted_budget)) {
      costLines.push(`${kind} budget: ${value}`);
    }
  }

  return {
    rows,
    epsilonText: epsilon === null ? "∞" : epsilon.toFixed(4),
    pacMet,
    blocking: (stopping?.blocking ?? []).map((b) => ({
      arm: b.arm,
      lowerBound: b.lower_bound,
    })),
    costLines,
    statusLine: session
      ? `round ${session.round}/${session.rounds} · ${session.k} arms · ` +
        `${session.pending_judgments} pending`
      : "waiting for session…",
    paused: session?.paused ?? false,
    done: session?.done ?? false,
    errors: state.errors,
  };
}

function confidenceMargin(board: LeaderboardView, best: number): number | null {
  const row = board.lower[best];
  if (!row) return null;
  let margin = Infinity;
  for (let j = 0; j < row.length; j++) {
    if (j === best) continue;
    margin = Math.min(margin, (row[j] ?? 0.5) - 0.5);
  }
  return Number.isFinite(margin) ? margin : null;
}
