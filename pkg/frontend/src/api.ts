// Typed client for the retrieval service's JSON API. One in-flight search
// at a time: a newer submission aborts the older one.

export interface SearchResult {
  id: string;
  latex: string;
  score: number;
}

export interface SearchResponse {
  query: string;
  layout: string;
  model: string;
  results: SearchResult[];
}

export interface ErrorPayload {
  error: {
    stage?: string;
    type: string;
    message: string;
    offset?: number;
  };
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly payload: ErrorPayload) {
    super(payload.error.message);
    this.name = "ApiError";
  }
}

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`request failed: ${cause instanceof Error ? cause.message : String(cause)}`);
    this.name = "NetworkError";
  }
}

export interface SearchOptions {
  layout: string;
  model: string;
  k: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class SearchClient {
  private inflight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  /** True while a search request is outstanding. */
  get busy(): boolean {
    return this.inflight !== null;
  }

  async search(query: string, opts: SearchOptions): Promise<SearchResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const params = new URLSearchParams({
      q: query,
      k: String(opts.k),
      layout: opts.layout,
      model: opts.model,
    });
    try {
      const response = await this.request(`/search?${params}`, controller.signal);
      return (await response.json()) as SearchResponse;
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
      }
    }
  }

  async health(): Promise<boolean> {
    try {
      await this.request("/health");
      return true;
    } catch {
      return false;
    }
  }

  private async request(path: string, signal?: AbortSignal): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, { signal });
    } catch (err) {
      if (err instanceof Error && err.name === "AbortError") {
        throw err;
      }
      throw new NetworkError(err);
    }
    if (!response.ok) {
      let payload: ErrorPayload;
      try {
        payload = (await response.json()) as ErrorPayload;
      } catch {
        payload = { error: { type: "HttpError", message: `status ${response.status}` } };
      }
      throw new ApiError(response.status, payload);
    }
    return response;
  }
}
