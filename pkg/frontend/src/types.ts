/** Response shapes of the session server's JSON API. */

export type Choice = "A" | "B" | "tie";

export interface CostView {
  judge_calls: number;
  llm_calls: number;
  prompt_tokens: number;
  completion_tokens: number;
  predicted_budget: Record<string, number>;
}

export interface StoppingGate {
  enabled: boolean;
  met: boolean;
}

export interface BlockingOpponent {
  arm: string;
  lower_bound: number;
}

export interface StoppingView {
  cover: StoppingGate;
  pac: StoppingGate;
  epsilon: number | null;
  best: number;
  best_id?: string;
  blocking: BlockingOpponent[];
  should_stop: boolean;
  cover_state?: Record<string, unknown>;
}

export interface SessionView {
  mode: "human_judge" | "observe";
  round: number;
  rounds: number;
  duel_in_round: number;
  duels_per_round: number;
  k: number;
  cost: CostView;
  stopping: StoppingView | null;
  paused: boolean;
  done: boolean;
  pending_judgments: number;
}

/** One blind judging item: panel texts only, never arm identities. */
export interface DuelItem {
  duel_id: string;
  input_idx: number;
  round: number;
  input: string;
  a: string;
  b: string;
}

export interface NextDuelResponse {
  duel: DuelItem | null;
  done: boolean;
  paused: boolean;
}

export interface LeaderboardView {
  arm_ids: string[];
  copeland: number[];
  borda: number[];
  mu_hat: number[][];
  upper: number[][];
  lower: number[][];
}

export type ControlAction = "pause" | "resume" | "mutate_now";

export interface ApiErrorBody {
  error: string;
  detail: string;
}
