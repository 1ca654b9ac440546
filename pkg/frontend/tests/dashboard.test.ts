import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { DEFAULT_CONFIG } from "../src/config.js";
import { DashboardPoller, dashboardModel } from "../src/dashboard.js";
import type { LeaderboardView, StoppingView } from "../src/types.js";
import { FakeServer } from "./fakeserver.js";

function makePoller(fetchImpl: FetchLike, intervalMs = 1000) {
  return new DashboardPoller(new ApiClient(DEFAULT_CONFIG, fetchImpl), intervalMs);
}

afterEach(() => vi.useRealTimers());

describe("DashboardPoller", () => {
  it("pulls all three endpoints in one tick", async () => {
    const server = new FakeServer();
    const poller = makePoller(server.fetch);
    await poller.tick();
    expect(poller.state.session?.k).toBe(3);
    expect(poller.state.leaderboard?.arm_ids).toHaveLength(3);
    expect(poller.state.stopping?.pac.met).toBe(false);
    expect(poller.state.errors).toEqual([]);
  });

  it("keeps stale data and flags the endpoint when one poll fails", async () => {
    const server = new FakeServer();
    let failLeaderboard = false;
    const flaky: FetchLike = (url, init) => {
      if (failLeaderboard && url.includes("leaderboard")) {
        return Promise.reject(new TypeError("fetch failed"));
      }
      return server.fetch(url, init);
    };
    const poller = makePoller(flaky);
    await poller.tick();
    const board = poller.state.leaderboard;
    failLeaderboard = true;
    await poller.tick();
    expect(poller.state.leaderboard).toBe(board); // stale but still shown
    expect(poller.state.errors).toEqual(["leaderboard"]);
    expect(poller.state.session).not.toBeNull();
  });

  it("polls on the configured interval until stopped", async () => {
    vi.useFakeTimers();
    const server = new FakeServer();
    const poller = makePoller(server.fetch, 500);
    poller.start();
    await vi.advanceTimersByTimeAsync(1600);
    poller.stop();
    const sessionPolls = server.requests.filter((r) => r === "GET /api/session").length;
    expect(sessionPolls).toBe(4); // immediate + 3 ticks
    await vi.advanceTimersByTimeAsync(2000);
    expect(server.requests.filter((r) => r === "GET /api/session").length).toBe(4);
  });

  it("posts control actions and refreshes immediately", async () => {
    const server = new FakeServer();
    const poller = makePoller(server.fetch);
    await poller.control("pause");
    expect(server.paused).toBe(true);
    expect(poller.state.session?.paused).toBe(true);
    await poller.control("resume");
    expect(poller.state.session?.paused).toBe(false);
  });

  it("reflects a pool size change after mutate_now on the next poll", async () => {
    const server = new FakeServer();
    const poller = makePoller(server.fetch);
    await poller.tick();
    expect(poller.state.session?.k).toBe(3);
    await poller.control("mutate_now");
    expect(poller.state.session?.k).toBe(4);
    expect(poller.state.leaderboard?.arm_ids).toContain("p003");
  });
});

describe("dashboardModel", () => {
  const board: LeaderboardView = {
    arm_ids: ["p000", "p001", "p002"],
    copeland: [1, 2, 0],
    borda: [0.5, 0.8, 0.2],
    mu_hat: [
      [0.5, 0.4, 0.9],
      [0.6, 0.5, 0.95],
      [0.1, 0.05, 0.5],
    ],
    upper: [
      [0.5, 0.5, 1.0],
      [0.7, 0.5, 1.0],
      [0.2, 0.15, 0.5],
    ],
    lower: [
      [0.5, 0.3, 0.8],
      [0.55, 0.5, 0.9],
      [0.0, 0.0, 0.5],
    ],
  };
  const stoppingMet: StoppingView = {
    cover: { enabled: false, met: false },
    pac: { enabled: true, met: true },
    epsilon: null,
    best: 1,
    best_id: "p001",
    blocking: [],
    should_stop: true,
  };

  it("sorts rows by Copeland then Borda", () => {
    const model = dashboardModel({
      session: null,
      leaderboard: board,
      stopping: null,
      errors: [],
    });
    expect(model.rows.map((r) => r.armId)).toEqual(["p001", "p000", "p002"]);
  });

  it("highlights the PAC winner and derives its confidence margin", () => {
    const model = dashboardModel({
      session: null,
      leaderboard: board,
      stopping: stoppingMet,
      errors: [],
    });
    const winner = model.rows.find((r) => r.armId === "p001")!;
    expect(winner.highlighted).toBe(true);
    // min over opponents of lower[best][j] - 0.5: min(0.55, 0.9) - 0.5
    expect(winner.confidenceMargin).toBeCloseTo(0.05, 10);
    expect(model.rows.filter((r) => r.highlighted)).toHaveLength(1);
  });

  it("renders an infinity epsilon and a finite one", () => {
    const none = dashboardModel({ session: null, leaderboard: null, stopping: null, errors: [] });
    expect(none.epsilonText).toBe("∞");
    const finite = dashboardModel({
      session: null,
      leaderboard: null,
      stopping: { ...stoppingMet, epsilon: 0.25 },
      errors: [],
    });
    expect(finite.epsilonText).toBe("0.2500");
  });

  it("lists blocking opponents while the PAC gate is open", () => {
    const model = dashboardModel({
      session: null,
      leaderboard: board,
      stopping: {
        ...stoppingMet,
        pac: { enabled: true, met: false },
        blocking: [{ arm: "p002", lower_bound: 0.41 }],
        should_stop: false,
      },
      errors: [],
    });
    expect(model.pacMet).toBe(false);
    expect(model.blocking).toEqual([{ arm: "p002", lowerBound: 0.41 }]);
    expect(model.rows.every((r) => !r.highlighted)).toBe(true);
  });

  it("degrades to placeholders when nothing has been polled yet", () => {
    const model = dashboardModel({
      session: null,
      leaderboard: null,
      stopping: null,
      errors: ["session", "leaderboard", "stopping"],
    });
    expect(model.rows).toEqual([]);
    expect(model.statusLine).toContain("waiting");
    expect(model.errors).toHaveLength(3);
  });
});
