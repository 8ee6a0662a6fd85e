/**
 * Protocol conformance: replay the hub's recorded request fixtures
 * byte-for-byte against this service and check status codes, error codes,
 * and response shapes. Vector values are backend-specific by design; the
 * recorded structural checks define equivalence.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import type { Server } from "node:http";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { builtinBackend } from "../src/backend.js";
import { BATCH_LIMIT, createServer, listen } from "../src/server.js";

interface FixtureCase {
  name: string;
  request: {
    method: string;
    path: string;
    body?: Record<string, unknown>;
    raw_body?: string;
  };
  expect: { status: number; error?: string; checks?: string[] };
}

const fixturePath = join(__dirname, "..", "..", "fixtures", "protocol", "cases.json");
const fixtures = JSON.parse(readFileSync(fixturePath, "utf-8")) as { cases: FixtureCase[] };

let server: Server;
let base: string;

beforeAll(async () => {
  server = createServer(builtinBackend({ dim: 32, name: "bridge-under-test" }));
  const port = await listen(server, 0, "127.0.0.1");
  base = `http://127.0.0.1:${port}`;
});

afterAll(() => {
  server.close();
});

async function fire(request: FixtureCase["request"]): Promise<Response> {
  if (request.method === "GET") {
    return fetch(base + request.path);
  }
  const body = request.raw_body ?? JSON.stringify(request.body);
  return fetch(base + request.path, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body,
  });
}

describe("recorded fixture replay", () => {
  it("has fixtures to replay", () => {
    expect(fixtures.cases.length).toBeGreaterThan(5);
  });

  for (const fixture of JSON.parse(readFileSync(fixturePath, "utf-8")).cases as FixtureCase[]) {
    it(`conforms on ${fixture.name}`, async () => {
      const infoDim = (await (await fetch(base + "/v1/info")).json()).dim as number;
      const resp = await fire(fixture.request);
      expect(resp.status).toBe(fixture.expect.status);
      const body = (await resp.json()) as Record<string, unknown>;
      if (fixture.expect.error) {
        expect(body.error).toBe(fixture.expect.error);
        expect(typeof body.message).toBe("string");
        return;
      }
      const checks = fixture.expect.checks ?? [];
      if (checks.includes("info_shape")) {
        expect(typeof body.name).toBe("string");
        expect(body.dim).toBe(infoDim);
        expect(body.capabilities).toEqual(["text", "image", "caption"]);
      }
      if (checks.includes("vector_shape")) {
        const inputs =
          (fixture.request.body?.texts as string[] | undefined) ??
          (fixture.request.body?.images_b64 as string[]);
        expect(body.dim).toBe(infoDim);
        const vectors = body.vectors as number[][];
        expect(vectors.length).toBe(inputs.length);
        for (const vec of vectors) {
          expect(vec.length).toBe(infoDim);
          expect(vec.every((x) => Number.isFinite(x))).toBe(true);
        }
      }
      if (checks.includes("unit_norm")) {
        for (const vec of body.vectors as number[][]) {
          const norm = Math.sqrt(vec.reduce((a, x) => a + x * x, 0));
          expect(Math.abs(norm - 1)).toBeLessThan(1e-5);
        }
      }
      if (checks.includes("caption_shape")) {
        const inputs = fixture.request.body?.images_b64 as string[];
        const captions = body.captions as string[];
        expect(captions.length).toBe(inputs.length);
        for (const caption of captions) {
          expect(typeof caption).toBe("string");
          expect(caption.length).toBeGreaterThan(0);
        }
      }
      if (checks.includes("deterministic")) {
        const again = await (await fire(fixture.request)).json();
        expect(again).toEqual(body);
      }
    });
  }
});

describe("protocol edges beyond the recorded cases", () => {
  it("enforces the batch limit", async () => {
    const resp = await fetch(base + "/v1/encode_text", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ texts: Array(BATCH_LIMIT + 1).fill("x") }),
    });
    expect(resp.status).toBe(400);
    expect((await resp.json()).error).toBe("InvalidInput");
  });

  it("404s unknown routes with the envelope", async () => {
    const resp = await fetch(base + "/v1/nothing", { method: "POST", body: "{}" });
    expect(resp.status).toBe(404);
    expect((await resp.json()).error).toBe("InvalidInput");
  });

  it("reports 503 while the backend is loading", async () => {
    const never = new Promise<never>(() => {});
    const loading = createServer(never);
    const port = await listen(loading, 0, "127.0.0.1");
    try {
      const resp = await fetch(`http://127.0.0.1:${port}/v1/info`);
      expect(resp.status).toBe(503);
    } finally {
      loading.close();
    }
  });
});
