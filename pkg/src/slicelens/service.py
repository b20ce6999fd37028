"""HTTP facade over search sessions for the browser UI.

Single-process, in-memory, single-tenant: sessions are owned by opaque
128-bit ids and reclaimed after a TTL. Slice queries never block beyond
the configured budget; when the cache cannot satisfy a query the
response carries partial results with status "searching" while a
background worker continues the search, and clients poll.
"""

from __future__ import annotations

import io
import secrets
import threading
import time
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .dataset import DataError, RawTable, build_dataset, parse_table, sample
from .engine import ALGORITHMS, SearchSession, SessionError
from .fdr import FdrError
from .stats import StatsError, loss_vector_for

DEFAULT_K = 10
DEFAULT_MIN_EFFECT_SIZE = 0.4


class DatasetUpload(BaseModel):
    content: Optional[str] = None
    path: Optional[str] = None
    label_column: str
    score_column: str
    delimiter: str = ","
    loss_kind: str = "log_loss"


class SessionCreate(BaseModel):
    dataset_id: str
    algorithm: str = "lattice"
    alpha: float = 0.05
    fdr: str = "investing"
    bins: int = 10
    top_values: int = 50
    sample_fraction: float = Field(default=1.0, gt=0.0, le=1.0)
    seed: int = 0
    workers: int = 1
    min_size: int = 2
    max_depth: Optional[int] = None
    min_leaf: int = 10
    num_clusters: int = 10
    schema_options: Optional[dict[str, dict]] = None


class _StoredDataset:
    def __init__(self, table: RawTable, loss_kind: str):
        self.table = table
        self.loss_kind = loss_kind
        self.created = time.monotonic()


class _ServiceSession:
    """Search session plus the continuation worker and access bookkeeping."""

    def __init__(self, session: SearchSession):
        self.session = session
        self.lock = threading.Lock()
        self.searching = False
        self.target: Optional[tuple[int, float]] = None
        self.last_access = time.monotonic()
        self._thread: Optional[threading.Thread] = None

    def touch(self) -> None:
        self.last_access = time.monotonic()

    def prime(self) -> None:
        """Warm the cache with the first level; never tests or spends wealth."""
        self._start_worker(priming=True)

    def _start_worker(self, priming: bool = False) -> None:
        with self.lock:
            if self.searching:
                return
            self.searching = True
        self._thread = threading.Thread(
            target=self._drive, kwargs={"priming": priming}, daemon=True)
        self._thread.start()

    def _drive(self, priming: bool = False) -> None:
        try:
            if priming:
                with self.lock:
                    self.session.continue_step()
            while True:
                with self.lock:
                    target = self.target
                    complete = True
                    if target is not None:
                        _, complete = self.session.cached_query(*target)
                    if complete:
                        # Flip the flag under the same lock acquisition as the
                        # completeness verdict, so a concurrent query either
                        # sees searching=False or a worker that will pick up
                        # its freshly-set target.
                        self.searching = False
                        return
                    if not self.session.continue_step():
                        self.searching = False
                        return
        except BaseException:
            with self.lock:
                self.searching = False
            raise

    def query(self, k: int, threshold: float, budget: float) -> tuple[dict, bool]:
        """Answer a slice query, kicking off continuation when needed.

        Returns (payload, cache_only). cache_only means the answer came
        entirely from already-evaluated slices.
        """
        self.touch()
        with self.lock:
            self.target = (k, threshold)
            views, complete = self.session.cached_query(k, threshold)
        if not complete:
            self._start_worker()
            deadline = time.monotonic() + budget
            while time.monotonic() < deadline:
                time.sleep(min(0.01, budget))
                with self.lock:
                    views, complete = self.session.cached_query(k, threshold)
                if complete:
                    break
        payload = {
            "k": k,
            "min_effect_size": threshold,
            "status": "complete" if complete else "searching",
            "slices": views,
            "progress": self._progress(),
        }
        return payload, complete

    def _progress(self) -> dict:
        s = self.session
        return {
            "explored": s.explored_count,
            "evaluations": s.eval_count,
            "exhausted": s.exhausted,
        }


def create_app(*, session_ttl: float = 3600.0, query_budget: float = 0.0,
               cors_origins: Optional[list[str]] = None) -> FastAPI:
    app = FastAPI(title="slicelens", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Cache-Only"],
    )
    datasets: dict[str, _StoredDataset] = {}
    sessions: dict[str, _ServiceSession] = {}
    store_lock = threading.Lock()

    def _purge() -> None:
        now = time.monotonic()
        with store_lock:
            expired = [sid for sid, s in sessions.items()
                       if now - s.last_access > session_ttl and not s.searching]
            for sid in expired:
                del sessions[sid]

    def _session(session_id: str) -> _ServiceSession:
        _purge()
        with store_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown or expired session")
        return session

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/datasets", status_code=201)
    def upload_dataset(body: DatasetUpload):
        if (body.content is None) == (body.path is None):
            raise HTTPException(status_code=400,
                                detail={"error": "provide exactly one of content or path"})
        source = io.StringIO(body.content) if body.content is not None else body.path
        try:
            table = parse_table(source, body.label_column, body.score_column,
                                delimiter=body.delimiter, loss_kind=body.loss_kind)
        except (DataError, OSError) as exc:
            raise HTTPException(status_code=400, detail={"error": str(exc)}) from None
        dataset_id = secrets.token_hex(16)
        with store_lock:
            datasets[dataset_id] = _StoredDataset(table, body.loss_kind)
        return {"dataset_id": dataset_id, "report": table.report.to_dict()}

    @app.post("/v1/sessions", status_code=202)
    def create_session(body: SessionCreate):
        with store_lock:
            stored = datasets.get(body.dataset_id)
        if stored is None:
            raise HTTPException(status_code=404, detail="unknown dataset")
        if body.algorithm not in ALGORITHMS:
            raise HTTPException(status_code=400, detail=f"unknown algorithm {body.algorithm!r}")
        try:
            dataset = build_dataset(stored.table, schema_options=body.schema_options,
                                    num_bins=body.bins, top_values=body.top_values)
            if body.sample_fraction < 1.0:
                dataset = sample(dataset, body.sample_fraction, body.seed)
            loss = loss_vector_for(dataset, stored.loss_kind)
            session = SearchSession(
                dataset, loss, algorithm=body.algorithm, alpha=body.alpha, fdr=body.fdr,
                workers=body.workers, min_size=body.min_size, max_depth=body.max_depth,
                min_leaf=body.min_leaf, num_clusters=body.num_clusters, seed=body.seed,
                loss_kind=stored.loss_kind,
            )
        except (DataError, StatsError, FdrError, SessionError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        service_session = _ServiceSession(session)
        session_id = secrets.token_hex(16)
        with store_lock:
            sessions[session_id] = service_session
        service_session.prime()
        return {"session_id": session_id}

    @app.get("/v1/sessions/{session_id}/slices")
    def query_slices(session_id: str, response: Response,
                     k: int = Query(default=DEFAULT_K, ge=0),
                     min_effect_size: float = Query(default=DEFAULT_MIN_EFFECT_SIZE)):
        service_session = _session(session_id)
        payload, cache_only = service_session.query(k, min_effect_size, query_budget)
        payload["session_id"] = session_id
        payload["cache_only"] = cache_only
        response.headers["X-Cache-Only"] = "true" if cache_only else "false"
        return payload

    @app.get("/v1/sessions/{session_id}/slices/{slice_id}/examples")
    def slice_examples(session_id: str, slice_id: str,
                       limit: int = Query(default=20, ge=0)):
        service_session = _session(session_id)
        service_session.touch()
        with service_session.lock:
            try:
                rows = service_session.session.drill_down(slice_id, limit)
            except SessionError as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from None
        return {"session_id": session_id, "slice_id": slice_id, "rows": rows}

    return app


def main() -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="slicelens HTTP service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8250)
    parser.add_argument("--session-ttl", type=float, default=3600.0)
    parser.add_argument("--query-budget", type=float, default=0.0)
    parser.add_argument("--cors-origin", action="append", default=None)
    args = parser.parse_args()
    app = create_app(session_ttl=args.session_ttl, query_budget=args.query_budget,
                     cors_origins=args.cors_origin)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
