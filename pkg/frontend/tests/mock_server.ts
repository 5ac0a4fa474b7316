// Recorded-fixture mock of the retrieval service. Responses were captured
// from a live instance (see tests/fixtures/); the mock replays them and
// records every request it serves.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture(name: string): unknown {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf-8"));
}

export interface RecordedRequest {
  path: string;
  params: URLSearchParams;
}

type Responder = (params: URLSearchParams) => { status: number; body: unknown };

export class MockServer {
  requests: RecordedRequest[] = [];
  private routes = new Map<string, Responder>();
  failNetwork = false;
  /** resolve gate: when set, responses wait until the gate resolves */
  gate: Promise<void> | null = null;

  route(path: string, responder: Responder): void {
    this.routes.set(path, responder);
  }

  get fetchFn() {
    return async (input: string, init?: RequestInit): Promise<Response> => {
      const url = new URL(input, "http://mock.test");
      const params = url.searchParams;
      this.requests.push({ path: url.pathname, params });
      if (this.gate) {
        await this.gate;
      }
      if (init?.signal?.aborted) {
        const err = new Error("aborted");
        err.name = "AbortError";
        throw err;
      }
      if (this.failNetwork) {
        throw new TypeError("fetch failed");
      }
      const responder = this.routes.get(url.pathname);
      if (!responder) {
        return jsonResponse(404, { error: { type: "NotFound", message: "no route" } });
      }
      const { status, body } = responder(params);
      return jsonResponse(status, body);
    };
  }

  searchRequests(): RecordedRequest[] {
    return this.requests.filter((r) => r.path === "/search");
  }
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** A mock preloaded with the recorded fixtures keyed by query text. */
export function recordedServer(): MockServer {
  const server = new MockServer();
  const demo = fixture("search_demo.json") as { query: string };
  const parseError = fixture("search_parse_error.json");
  const unknownModel = fixture("search_unknown_model.json");
  server.route("/search", (params) => {
    const q = params.get("q") ?? "";
    if (params.get("model") === "bgrl") {
      return { status: 404, body: unknownModel };
    }
    if (q === demo.query) {
      return { status: 200, body: demo };
    }
    if (q === "a^{3") {
      return { status: 400, body: parseError };
    }
    return { status: 200, body: { query: q, layout: params.get("layout"), model: params.get("model"), results: [] } };
  });
  server.route("/health", () => ({ status: 200, body: fixture("health.json") }));
  return server;
}
