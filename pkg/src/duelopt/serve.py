"""HTTP face of one optimization session.

Exposes a running engine to the judge UI and to monitoring. The sampler
advances lazily: a new duel is drawn only when the previous ticket has been
fully judged and folded, so human latency never stalls a background loop.
Session mutations are serialized through one lock; reads take the same lock
briefly and see consistent snapshots.

Two modes. ``human_judge``: duels wait in a queue for blind A/B judgments.
``observe``: a background thread drives the engine with its own synchronous
judge and the API is monitoring plus pause/resume control.
"""

from __future__ import annotations

import threading
import time

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .behavioral import compute_cover_state
from .engine import Engine, EngineError
from .judges import DuplicateJudgmentError, HumanJudgeQueue, JudgeError, UnknownDuelError
from .stopping import check_stopping


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "detail": detail})


class Session:
    """One live run per process; all mutation goes through ``lock``."""

    def __init__(self, engine: Engine, mode: str = "human_judge"):
        if mode not in ("human_judge", "observe"):
            raise ValueError(f"unknown serve mode {mode!r}")
        if mode == "human_judge" and engine.judge is not None:
            raise ValueError("human_judge mode needs judge.type='human'")
        if mode == "observe" and engine.judge is None:
            raise ValueError("observe mode needs a synchronous judge")
        self.engine = engine
        self.mode = mode
        self.queue = HumanJudgeQueue()
        self.lock = threading.RLock()
        self.paused = False
        self.mutate_requested = False
        self._held_outcomes: list = []
        self._completed: set[str] = set()
        self._driver: threading.Thread | None = None

    # -- human-judge progression (caller holds the lock) -------------------

    def _advance(self) -> None:
        engine = self.engine
        if not engine.has_inflight and not self._held_outcomes:
            if self.mutate_requested and not engine.done():
                engine.force_mutation()
                self.mutate_requested = False
        if self.paused or engine.done() or engine.has_inflight:
            return
        self.queue.enqueue(engine.next_ticket())

    def next_item(self) -> dict | None:
        with self.lock:
            if self.mode == "human_judge":
                self._advance()
            return self.queue.next_item()

    def submit_judgment(self, duel_id: str, input_idx: int, choice: str) -> None:
        with self.lock:
            if duel_id in self._completed:
                # Fully judged duels leave the queue; a re-POST is a duplicate,
                # not an unknown duel, and must leave the ledger untouched.
                raise DuplicateJudgmentError(f"duel {duel_id!r} is already fully judged")
            outcome = self.queue.submit(duel_id, input_idx, choice)
            if outcome is None:
                return
            self._completed.add(duel_id)
            if self.paused:
                self._held_outcomes.append(outcome)
            else:
                self.engine.fold_outcome(outcome)
                self._advance()

    def control(self, action: str) -> None:
        with self.lock:
            if action == "pause":
                self.paused = True
            elif action == "resume":
                self.paused = False
                for outcome in self._held_outcomes:
                    self.engine.fold_outcome(outcome)
                self._held_outcomes = []
                if self.mode == "human_judge":
                    self._advance()
            elif action == "mutate_now":
                if self.engine.mutator is None:
                    raise EngineError("mutation is disabled for this run")
                self.mutate_requested = True
                if self.mode == "human_judge":
                    self._advance()
            else:
                raise ValueError(f"unknown action {action!r}")

    # -- observe-mode driver ----------------------------------------------

    def start_driver(self) -> None:
        if self.mode != "observe" or self._driver is not None:
            return
        self._driver = threading.Thread(target=self._drive, daemon=True)
        self._driver.start()

    def _drive(self) -> None:
        while True:
            with self.lock:
                if self.engine.done():
                    return
                if not self.paused:
                    if self.mutate_requested:
                        self.engine.force_mutation()
                        self.mutate_requested = False
                    ticket = self.engine.next_ticket()
                    self.engine.fold_outcome(self.engine.judge(ticket))
                    continue
            time.sleep(0.02)

    # -- read views --------------------------------------------------------

    def session_view(self) -> dict:
        with self.lock:
            engine = self.engine
            return {
                "mode": self.mode,
                "round": engine.t,
                "rounds": engine.rounds,
                "duel_in_round": engine.duel_in_round,
                "duels_per_round": engine.duels_per_round,
                "k": engine.ledger.size,
                "cost": engine.cost.to_dict(),
                "stopping": engine.stopping_status,
                "paused": self.paused,
                "done": engine.done(),
                "pending_judgments": self.queue.pending_count,
            }

    def leaderboard_view(self) -> dict:
        with self.lock:
            ledger = self.engine.ledger
            upper, lower = ledger.bound_matrices(max(self.engine.t, 1), self.engine.alpha)
            return {
                "arm_ids": list(ledger.arm_ids),
                "copeland": ledger.copeland_scores().tolist(),
                "borda": ledger.borda_scores().tolist(),
                "mu_hat": ledger.mu_hat_matrix().tolist(),
                "upper": upper.tolist(),
                "lower": lower.tolist(),
            }

    def stopping_view(self) -> dict:
        with self.lock:
            engine = self.engine
            cfg = engine.behavioral_cfg
            cover = compute_cover_state(
                engine.ledger,
                max(engine.t, 1),
                rho0=cfg["rho0"],
                alpha_exp=cfg["alpha_exp"],
                n_min=cfg["n_min"],
            )
            status = check_stopping(engine.ledger, cover, engine.stopping_config)
            doc = status.to_dict()
            doc["cover_state"] = cover.to_dict()
            doc["best_id"] = engine.ledger.arm_ids[status.best]
            doc["blocking"] = [
                {"arm": engine.ledger.arm_ids[a], "lower_bound": lb}
                for a, lb in status.blocking_opponents
            ]
            return doc


def create_app(config: dict, transport=None, engine: Engine | None = None) -> FastAPI:
    """Build the API app (and its session) from a run config.

    ``engine`` lets callers hand in a restored or pre-built engine; the
    serve block of the config still picks the mode, token, and CORS list.
    """
    if engine is None:
        engine = Engine(config, transport=transport)
    serve_cfg = engine.config["serve"]
    session = Session(engine, mode=serve_cfg["mode"])
    token = serve_cfg["token"]

    app = FastAPI(title="duelopt session", docs_url=None, redoc_url=None)
    app.state.session = session
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(serve_cfg["cors_origins"]),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return _error(400, "bad_request", str(exc.errors()[:1]))

    @app.middleware("http")
    async def bearer_guard(request: Request, call_next):
        if token and request.url.path.startswith("/api/"):
            if request.headers.get("authorization") != f"Bearer {token}":
                return _error(401, "unauthorized", "missing or wrong bearer token")
        return await call_next(request)

    @app.get("/api/session")
    def get_session():
        return session.session_view()

    @app.get("/api/duel/next")
    def get_next_duel():
        item = session.next_item()
        with session.lock:
            return {"duel": item, "done": session.engine.done(), "paused": session.paused}

    @app.post("/api/duel/{duel_id}/judgment")
    async def post_judgment(duel_id: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "bad_request", "body must be a JSON object")
        input_idx = body.get("input_idx")
        choice = body.get("choice")
        if not isinstance(input_idx, int) or isinstance(input_idx, bool):
            return _error(400, "bad_request", "input_idx must be an integer")
        try:
            session.submit_judgment(duel_id, input_idx, choice)
        except UnknownDuelError as exc:
            return _error(404, "unknown_duel", str(exc))
        except DuplicateJudgmentError as exc:
            return _error(409, "duplicate_judgment", str(exc))
        except JudgeError as exc:
            return _error(400, "bad_request", str(exc))
        return Response(status_code=204)

    @app.get("/api/leaderboard")
    def get_leaderboard():
        return session.leaderboard_view()

    @app.get("/api/stopping")
    def get_stopping():
        return session.stopping_view()

    @app.post("/api/control")
    async def post_control(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON")
        action = body.get("action") if isinstance(body, dict) else None
        try:
            session.control(action)
        except ValueError as exc:
            return _error(400, "bad_request", str(exc))
        except EngineError as exc:
            return _error(409, "conflict", str(exc))
        return JSONResponse(status_code=202, content={"status": "accepted", "action": action})

    if session.mode == "observe":
        session.start_driver()
    return app


def run_server(config: dict, transport=None) -> None:  # pragma: no cover - thin wrapper
    import uvicorn

    app = create_app(config, transport=transport)
    serve_cfg = app.state.session.engine.config["serve"]
    uvicorn.run(app, host=serve_cfg["host"], port=serve_cfg["port"], log_level="warning")
