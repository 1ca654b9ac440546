import { ApiClient, ApiError } from "./api.js";
import type { Choice, DuelItem } from "./types.js";

export type DuelPhase =
  | "loading"
  | "ready"
  | "submitting"
  | "paused"
  | "done"
  | "offline";

export interface Toast {
  kind: "error" | "info";
  text: string;
}

export interface DuelState {
  phase: DuelPhase;
  item: DuelItem | null;
  toasts: Toast[];
}

/**
 * Client-side judging loop: fetch a blind duel item, accept exactly one
 * choice for it, submit, advance. The only local state is the in-flight
 * item and the set of already-submitted (duel_id, input_idx) keys that
 * backs the duplicate guard.
 */
export class DuelFlow {
  state: DuelState = { phase: "loading", item: null, toasts: [] };
  onChange: (state: DuelState) => void = () => {};

  private submitted = new Set<string>();
  private inFlight = false;

  constructor(private readonly api: ApiClient) {}

  private emit(): void {
    this.onChange(this.state);
  }

  private toast(kind: Toast["kind"], text: string): void {
    this.state.toasts = [...this.state.toasts, { kind, text }];
  }

  dismissToasts(): void {
    this.state.toasts = [];
    this.emit();
  }

  async loadNext(): Promise<void> {
    this.state = { ...this.state, phase: "loading" };
    this.emit();
    try {
      const next = await this.api.nextDuel();
      if (next.done) {
        this.state = { ...this.state, phase: "done", item: null };
      } else if (next.duel === null) {
        // paused, or nothing pending yet
        this.state = { ...this.state, phase: next.paused ? "paused" : "loading", item: null };
      } else {
        this.state = { ...this.state, phase: "ready", item: next.duel };
      }
    } catch (err) {
      this.handleFailure(err, "fetching the next duel");
    }
    this.emit();
  }

  /** Submit the judge's choice for the current item, then advance. */
  async submit(choice: Choice): Promise<void> {
    const item = this.state.item;
    if (item === null || this.state.phase !== "ready" || this.inFlight) return;
    const key = `${item.duel_id}:${item.input_idx}`;
    if (this.submitted.has(key)) return; // client-side duplicate guard

    this.inFlight = true;
    this.state = { ...this.state, phase: "submitting" };
    this.emit();
    try {
      await this.api.submitJudgment(item.duel_id, item.input_idx, choice);
      this.submitted.add(key);
      this.inFlight = false;
      await this.loadNext(); // optimistic advance
    } catch (err) {
      this.inFlight = false;
      if (err instanceof ApiError && (err.status === 409 || err.status === 404)) {
        // stale item: surface it and resync with the server
        this.toast("error", `${err.error}: ${err.detail}`);
        this.submitted.add(key);
        await this.loadNext();
      } else {
        this.handleFailure(err, "submitting the judgment");
        this.emit();
      }
    }
  }

  /** Retry after an offline error; the current item is kept, not refetched. */
  async retry(): Promise<void> {
    if (this.state.item !== null) {
      this.state = { ...this.state, phase: "ready" };
      this.emit();
    } else {
      await this.loadNext();
    }
  }

  private handleFailure(err: unknown, doing: string): void {
    if (err instanceof ApiError) {
      this.toast("error", `${err.error}: ${err.detail}`);
      this.state = { ...this.state, phase: this.state.item ? "ready" : "loading" };
    } else {
      // network-level failure: keep every bit of local state for retry
      this.state = { ...this.state, phase: "offline" };
      void doing;
    }
  }
}

/** Keyboard shortcuts for the three judgments. */
export const KEY_TO_CHOICE: Readonly<Record<string, Choice>> = {
  a: "A",
  b: "B",
  t: "tie",
};

export function choiceForKey(key: string): Choice | null {
  return KEY_TO_CHOICE[key.toLowerCase()] ?? null;
}
