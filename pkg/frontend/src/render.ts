import type { DashboardModel } from "./dashboard.js";
import type { DuelState } from "./duelflow.js";
import type { Choice } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * Render the blind judging view. The markup is built exclusively from the
 * duel item's input/panel texts — arm identities never reach this function.
 */
export function renderDuel(
  container: HTMLElement,
  state: DuelState,
  onChoice: (choice: Choice) => void,
  onRetry: () => void,
): void {
  container.replaceChildren();

  for (const toast of state.toasts) {
    container.appendChild(el("div", `toast toast-${toast.kind}`, toast.text));
  }

  if (state.phase === "offline") {
    const banner = el("div", "banner banner-offline", "API unreachable. ");
    const retry = el("button", "retry", "Retry");
    retry.addEventListener("click", onRetry);
    banner.appendChild(retry);
    container.appendChild(banner);
    // fall through: the held item stays on screen under the banner
  }
  if (state.phase === "done") {
    container.appendChild(el("div", "banner banner-done", "Session complete."));
    return;
  }
  if (state.phase === "paused") {
    container.appendChild(el("div", "banner banner-paused", "Session paused."));
    return;
  }
  if (state.item === null) {
    container.appendChild(el("div", "banner banner-loading", "Waiting for a duel…"));
    return;
  }

  const item = state.item;
  container.appendChild(el("div", "duel-input", item.input));

  const panels = el("div", "panels");
  const panelA = el("div", "panel panel-a");
  panelA.appendChild(el("h3", undefined, "A"));
  panelA.appendChild(el("pre", "panel-text", item.a));
  const panelB = el("div", "panel panel-b");
  panelB.appendChild(el("h3", undefined, "B"));
  panelB.appendChild(el("pre", "panel-text", item.b));
  panels.append(panelA, panelB);
  container.appendChild(panels);

  const busy = state.phase === "submitting";
  const buttons = el("div", "choices");
  const entries: [Choice, string][] = [
    ["A", "A is better (a)"],
    ["B", "B is better (b)"],
    ["tie", "Tie (t)"],
  ];
  for (const [choice, label] of entries) {
    const btn = el("button", `choice choice-${choice}`, label);
    btn.disabled = busy;
    btn.addEventListener("click", () => onChoice(choice));
    buttons.appendChild(btn);
  }
  container.appendChild(buttons);
}

export function renderDashboard(container: HTMLElement, model: DashboardModel): void {
  container.replaceChildren();

  container.appendChild(el("div", "status", model.statusLine));
  if (model.errors.length > 0) {
    container.appendChild(
      el("div", "banner banner-degraded", `stale panels: ${model.errors.join(", ")}`),
    );
  }

  const table = el("table", "leaderboard");
  const head = el("tr");
  for (const col of ["arm", "copeland", "borda"]) head.appendChild(el("th", undefined, col));
  table.appendChild(head);
  for (const row of model.rows) {
    const tr = el("tr", row.highlighted ? "winner" : undefined);
    const armCell = el("td", undefined, row.armId);
    if (row.highlighted && row.confidenceMargin !== null) {
      armCell.textContent = `${row.armId} (margin ${row.confidenceMargin.toFixed(3)})`;
    }
    tr.appendChild(armCell);
    tr.appendChild(el("td", undefined, String(row.copeland)));
    tr.appendChild(el("td", undefined, row.borda.toFixed(3)));
    table.appendChild(tr);
  }
  container.appendChild(table);

  const stoppingBox = el("div", "stopping");
  stoppingBox.appendChild(el("div", "epsilon", `ε = ${model.epsilonText}`));
  stoppingBox.appendChild(
    el("div", `pac ${model.pacMet ? "pac-met" : ""}`, model.pacMet ? "PAC: met" : "PAC: open"),
  );
  if (model.blocking.length > 0) {
    const list = el("ul", "blocking");
    for (const b of model.blocking) {
      list.appendChild(el("li", undefined, `${b.arm} (lb ${b.lowerBound.toFixed(3)})`));
    }
    stoppingBox.appendChild(list);
  }
  container.appendChild(stoppingBox);

  const cost = el("div", "cost");
  for (const line of model.costLines) cost.appendChild(el("div", undefined, line));
  container.appendChild(cost);
}
