/**
 * Typed HTTP client for the marker service. Every interaction the UI has
 * with the backend goes through these calls — the UI never reaches into
 * service storage or internals.
 */

export type EventKind = "play" | "pause" | "seek";

export interface RedDotDto {
  red_dot_id: string;
  position_s: number;
  state: string;
}

export interface RegisterRequest {
  chat_log_path: string;
  model_path: string;
  video_id?: string;
  k?: number;
}

export interface RegisterResponse {
  video_id: string;
  length_s: number;
  red_dots: RedDotDto[];
}

export interface InteractionEventDto {
  user: string;
  red_dot_id: string;
  kind: EventKind;
  at_s: number;
  to_s?: number;
  wall_time: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export class ServiceClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body: unknown = await resp.json().catch(() => null);
    if (!resp.ok) {
      const detail =
        body !== null && typeof body === "object" && "detail" in body
          ? (body as { detail: unknown }).detail
          : body;
      throw new ServiceError(
        `${init?.method ?? "GET"} ${path} -> ${resp.status}`,
        resp.status,
        detail,
      );
    }
    return body;
  }

  async getRedDots(videoId: string): Promise<RedDotDto[]> {
    const path = `/videos/${encodeURIComponent(videoId)}/reddots`;
    return (await this.request(path)) as RedDotDto[];
  }

  /**
   * Post a batch of interaction events. The service is all-or-nothing: any
   * invalid record rejects the whole batch with a 400, surfaced here as a
   * ServiceError carrying the per-index rejection detail.
   */
  async postInteractions(videoId: string, events: InteractionEventDto[]): Promise<number> {
    const path = `/videos/${encodeURIComponent(videoId)}/interactions`;
    const body = (await this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(events),
    })) as { accepted: number };
    return body.accepted;
  }

  async registerVideo(req: RegisterRequest): Promise<RegisterResponse> {
    return (await this.request("/videos", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    })) as RegisterResponse;
  }

  async refine(videoId: string): Promise<unknown> {
    const path = `/videos/${encodeURIComponent(videoId)}/refine`;
    return this.request(path, { method: "POST" });
  }
}
