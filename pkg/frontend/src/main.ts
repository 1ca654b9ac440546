import { ApiClient, type FetchLike } from "./api.js";
import { resolveConfig, type UiConfig } from "./config.js";
import { DashboardPoller, dashboardModel } from "./dashboard.js";
import { DuelFlow, choiceForKey } from "./duelflow.js";
import { renderDashboard, renderDuel } from "./render.js";
import type { ControlAction } from "./types.js";

export interface App {
  flow: DuelFlow;
  poller: DashboardPoller;
  stop: () => void;
}

/**
 * Wire the judging flow and the dashboard into a host element. The host
 * needs three children: #duel, #dashboard, #controls (created if missing).
 */
export function mountApp(
  root: HTMLElement,
  overrides?: Partial<UiConfig>,
  fetchImpl?: FetchLike,
): App {
  const config = resolveConfig(overrides);
  const api = new ApiClient(config, fetchImpl);

  const duelHost = ensureChild(root, "duel");
  const dashHost = ensureChild(root, "dashboard");
  const controlHost = ensureChild(root, "controls");

  const flow = new DuelFlow(api);
  flow.onChange = (state) =>
    renderDuel(duelHost, state, (choice) => void flow.submit(choice), () => void flow.retry());

  const poller = new DashboardPoller(api, config.pollIntervalMs);
  poller.onChange = (state) => renderDashboard(dashHost, dashboardModel(state));

  const actions: ControlAction[] = ["pause", "resume", "mutate_now"];
  for (const action of actions) {
    const btn = document.createElement("button");
    btn.className = `control control-${action}`;
    btn.textContent = action.replace("_", " ");
    btn.addEventListener("click", () => {
      void poller.control(action).then(() => flow.loadNext());
    });
    controlHost.appendChild(btn);
  }

  const onKey = (event: KeyboardEvent) => {
    const choice = choiceForKey(event.key);
    if (choice !== null) void flow.submit(choice);
  };
  document.addEventListener("keydown", onKey);

  void flow.loadNext();
  poller.start();

  return {
    flow,
    poller,
    stop: () => {
      poller.stop();
      document.removeEventListener("keydown", onKey);
    },
  };
}

function ensureChild(root: HTMLElement, id: string): HTMLElement {
  let node = root.querySelector<HTMLElement>(`#${id}`);
  if (!node) {
    node = document.createElement("section");
    node.id = id;
    root.appendChild(node);
  }
  return node;
}

// Browser entry point; tests import mountApp directly instead.
if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app")!);
}
