import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { MockServer, coordsPayload, gridCoords } from "./mockserver.js";

describe("ApiClient", () => {
  it("decodes the binary coords payload", async () => {
    const server = new MockServer({ nSamples: 9 });
    const api = new ApiClient("", server.fetchFn);
    const coords = await api.projectionCoords("pca");
    expect(coords.length).toBe(18);
    expect(coords[0]).toBe(0);
    expect(coords[2]).toBe(10);
  });

  it("rejects malformed coords payloads", async () => {
    const fetchFn = async () =>
      new Response(coordsPayload(gridCoords(4)).slice(0, 20), { status: 200 });
    const api = new ApiClient("", fetchFn);
    await expect(api.projectionCoords("x")).rejects.toThrow(ApiError);
  });

  it("surfaces error envelopes with their kind", async () => {
    const server = new MockServer();
    const api = new ApiClient("", server.fetchFn);
    try {
      await api.label("mock-session", server.sampleId(0), "bogus");
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).kind).toBe("UnknownClass");
      expect((err as ApiError).status).toBe(422);
    }
  });

  it("keeps at most one mutation in flight", async () => {
    const server = new MockServer();
    const active: number[] = [];
    let concurrent = 0;
    server.latency = async () => {
      concurrent += 1;
      active.push(concurrent);
      await new Promise((resolve) => setTimeout(resolve, 5));
      concurrent -= 1;
    };
    const api = new ApiClient("", server.fetchFn);
    await Promise.all([
      api.enqueue("mock-session", server.sampleId(1)),
      api.enqueue("mock-session", server.sampleId(2)),
      api.enqueue("mock-session", server.sampleId(3)),
    ]);
    expect(Math.max(...active)).toBe(1);
    expect(server.queue).toEqual([1, 2, 3]);
  });

  it("continues the mutation chain after a rejection", async () => {
    const server = new MockServer();
    const api = new ApiClient("", server.fetchFn);
    await expect(api.label("mock-session", server.sampleId(0), "nope")).rejects.toThrow();
    const ok = await api.enqueue("mock-session", server.sampleId(4));
    expect(ok.queue).toEqual([4]);
  });
});
