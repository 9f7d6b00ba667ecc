/** Typed client for the workbench API.
 *
 * Mutations are funneled through a promise chain so at most one is in
 * flight per client, honoring the server's single-writer session contract.
 */

import type {
  DatasetInfo,
  LabelResponse,
  NavigateResponse,
  ProjectionInfo,
  QueueResponse,
  SessionView,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly kind: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let kind = "Internal";
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body && body.error) {
      kind = body.error.kind ?? kind;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(kind, message, response.status);
}

export class ApiClient {
  private chain: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  /** Serialize mutations: each waits for the previous one to settle. */
  private mutate<T>(path: string, body: unknown, method = "POST"): Promise<T> {
    const run = async (): Promise<T> => {
      const response = await this.fetchFn(this.base + path, {
        method,
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
      if (!response.ok) throw await parseError(response);
      return (await response.json()) as T;
    };
    const next = this.chain.then(run, run);
    this.chain = next.catch(() => undefined);
    return next;
  }

  dataset(): Promise<DatasetInfo> {
    return this.getJson("/api/dataset");
  }

  projections(): Promise<ProjectionInfo[]> {
    return this.getJson("/api/projections");
  }

  /** Decode the binary coords payload: u32 (n, 2) header + f32 values. */
  async projectionCoords(name: string): Promise<Float32Array> {
    const response = await this.fetchFn(`${this.base}/api/projections/${name}/coords`);
    if (!response.ok) throw await parseError(response);
    const buffer = await response.arrayBuffer();
    const header = new DataView(buffer, 0, 8);
    const rows = header.getUint32(0, true);
    const cols = header.getUint32(4, true);
    if (cols !== 2 || buffer.byteLength !== 8 + rows * cols * 4) {
      throw new ApiError("ShapeMismatch", `bad coords payload for ${name}`, 0);
    }
    return new Float32Array(buffer, 8, rows * cols);
  }

  createSession(body: {
    track: string;
    method: string;
    budget: number;
    seed?: number;
    annotator_id?: string;
    annotator_group?: string;
  }): Promise<SessionView> {
    return this.mutate("/api/sessions", body);
  }

  session(id: string): Promise<SessionView> {
    return this.getJson(`/api/sessions/${id}`);
  }

  label(id: string, sampleId: string, value: string): Promise<LabelResponse> {
    return this.mutate(`/api/sessions/${id}/labels`, { sample_id: sampleId, value });
  }

  enqueue(id: string, sampleId: string): Promise<QueueResponse> {
    return this.mutate(`/api/sessions/${id}/queue`, { sample_id: sampleId });
  }

  navigate(id: string, action: string, sampleId?: string): Promise<NavigateResponse> {
    return this.mutate(`/api/sessions/${id}/navigate`, {
      action,
      sample_id: sampleId ?? null,
    });
  }

  exportUrl(id: string): string {
    return `${this.base}/api/sessions/${id}/export.csv`;
  }

  mediaUrl(sampleId: string, kind: string): string {
    return `${this.base}/media/${sampleId}/${kind}`;
  }
}
