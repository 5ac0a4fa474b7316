"""HTTP query service over immutable trained artifacts.

Endpoints:
    GET /search?q=<latex>&k=<n>&layout=<slt|opt>&model=<tag>
    GET /parse?q=<latex>&layout=<slt|opt>
    GET /health

Parse failures return 400 with a stage-labeled JSON body; an unserved
layout/model combination returns 404. Artifacts are loaded once and
shared read-only across request threads.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import ArtifactMismatch, MathGclError, ParseError, PipelineStageError
from .graphs import graph_to_record, latex_to_graph
from .index import EmbeddingIndex, load_index, query_pipeline
from .subword import EmbeddingTable, load_table
from .training import load_checkpoint

log = logging.getLogger(__name__)


@dataclass
class ServedModel:
    layout: str                  # "slt" | "opt"
    model: str                   # infograph | graphcl | bgrl | baseline
    index: EmbeddingIndex
    params: object | None        # EncoderParams, None for the baseline


@dataclass
class ServerState:
    table: EmbeddingTable
    models: dict[tuple[str, str], ServedModel]
    latex_by_id: dict[str, str]
    default_layout: str
    default_model: str
    default_k: int = 10


def build_state(table_path, entries: list[dict], corpus: list[tuple[str, str]],
                default_k: int = 10) -> ServerState:
    """entries: [{"layout", "model", "index", "checkpoint"?}, ...]"""
    table = load_table(table_path)
    models: dict[tuple[str, str], ServedModel] = {}
    for entry in entries:
        layout = entry["layout"].lower()
        model = entry["model"].lower()
        index = load_index(entry["index"])
        if index.layout.lower() != layout:
            raise ArtifactMismatch(
                f"index {entry['index']} holds {index.layout}, config says {layout}")
        params = None
        if model != "baseline":
            params, _ = load_checkpoint(entry["checkpoint"])
            if params.layout and params.layout.lower() != layout:
                raise ArtifactMismatch(
                    f"checkpoint {entry['checkpoint']} was trained on "
                    f"{params.layout}, config says {layout}")
            if params.objective != model:
                raise ArtifactMismatch(
                    f"checkpoint {entry['checkpoint']} holds a {params.objective} "
                    f"encoder, config says {model}")
        models[(layout, model)] = ServedModel(layout, model, index, params)
    if not models:
        raise MathGclError("no models to serve")
    first = next(iter(models))
    return ServerState(table, models, dict(corpus), first[0], first[1], default_k)


def _error_body(status: str, stage: str, exc: Exception) -> dict:
    body = {"error": {"stage": stage, "type": type(exc).__name__, "message": str(exc)}}
    if isinstance(exc, ParseError):
        body["error"]["offset"] = exc.offset
    return body


class _Handler(BaseHTTPRequestHandler):
    state: ServerState = None  # injected by make_server

    def log_message(self, fmt, *args):
        log.info(json.dumps({"event": "http", "line": fmt % args}))

    def _send(self, status: int, payload: dict):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        url = urlparse(self.path)
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        try:
            if url.path == "/health":
                self._send(200, {"status": "ok"})
            elif url.path == "/search":
                self._search(query)
            elif url.path == "/parse":
                self._parse(query)
            else:
                self._send(404, {"error": {"stage": "route",
                                           "type": "NotFound",
                                           "message": f"no route {url.path}"}})
        except Exception as exc:  # malformed user input must never 500
            log.warning("request failed: %s", exc)
            self._send(400, _error_body("error", "request", exc))

    def _search(self, query: dict):
        state = self.state
        latex = query.get("q", "")
        layout = query.get("layout", state.default_layout).lower()
        model = query.get("model", state.default_model).lower()
        try:
            k = int(query.get("k", state.default_k))
        except ValueError:
            self._send(400, {"error": {"stage": "request", "type": "BadParameter",
                                       "message": "k must be an integer"}})
            return
        served = state.models.get((layout, model))
        if served is None:
            self._send(404, {"error": {"stage": "artifacts", "type": "UnknownModel",
                                       "message": f"no artifacts for layout={layout} model={model}"}})
            return
        try:
            ranked = query_pipeline(latex, layout, state.table, served.params,
                                    served.index, max(k, 1))
        except PipelineStageError as exc:
            self._send(400, _error_body("error", exc.stage, exc.cause))
            return
        except MathGclError as exc:
            self._send(400, _error_body("error", "query", exc))
            return
        self._send(200, {
            "query": latex, "layout": layout, "model": model,
            "results": [{"id": formula_id,
                         "latex": state.latex_by_id.get(formula_id, ""),
                         "score": score}
                        for formula_id, score in ranked.items],
        })

    def _parse(self, query: dict):
        latex = query.get("q", "")
        layout = query.get("layout", self.state.default_layout)
        if layout.lower() not in ("slt", "opt"):
            self._send(404, {"error": {"stage": "artifacts", "type": "UnknownLayout",
                                       "message": f"layout {layout!r} not served"}})
            return
        try:
            g = latex_to_graph(latex, layout)
        except ParseError as exc:
            self._send(400, _error_body("error", "parse", exc))
            return
        self._send(200, {"query": latex, "graph": graph_to_record(g)})


def make_server(state: ServerState, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("Handler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(state: ServerState, host: str, port: int):
    server = make_server(state, host, port)
    log.info(json.dumps({"event": "serve.start", "host": host, "port": server.server_port}))
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
