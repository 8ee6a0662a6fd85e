/**
 * HTTP server for the encoder wire protocol.
 *
 *   POST /v1/encode_text   {"texts":[...]}      -> {"dim":D,"vectors":[[...],...]}
 *   POST /v1/encode_image  {"images_b64":[...]} -> {"dim":D,"vectors":[[...],...]}
 *   POST /v1/caption       {"images_b64":[...]} -> {"captions":[...]}
 *   GET  /v1/info          -> {"name":...,"dim":D,"capabilities":[...]}
 *
 * Errors use the shared envelope {"error": code, "message": text} with
 * 4xx/5xx statuses. Batches are capped at 64 items per request; 503 is
 * returned while a backend is still loading.
 */

import { createServer as createHttpServer, IncomingMessage, Server, ServerResponse } from "node:http";

import type { EncoderBackend } from "./backend.js";

export const BATCH_LIMIT = 64;
const BODY_LIMIT = 32 * 1024 * 1024;

export class ProtocolError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

function badRequest(code: string, message: string): ProtocolError {
  return new ProtocolError(code, message, 400);
}

async function readBody(req: IncomingMessage): Promise<Buffer> {
  const chunks: Buffer[] = [];
  let size = 0;
  for await (const chunk of req) {
    size += (chunk as Buffer).length;
    if (size > BODY_LIMIT) {
      throw badRequest("InvalidInput", "request body too large");
    }
    chunks.push(chunk as Buffer);
  }
  return Buffer.concat(chunks);
}

function parseJsonObject(raw: Buffer): Record<string, unknown> {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw.toString("utf-8"));
  } catch (err) {
    throw badRequest("MalformedPayload", `request body is not valid JSON: ${err}`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw badRequest("MalformedPayload", "request body must be a JSON object");
  }
  return parsed as Record<string, unknown>;
}

function requireStringList(body: Record<string, unknown>, key: string): string[] {
  const value = body[key];
  if (!Array.isArray(value) || value.length === 0) {
    throw badRequest("InvalidInput", `${key} must be a non-empty list`);
  }
  if (value.length > BATCH_LIMIT) {
    throw badRequest("InvalidInput", `${key} exceeds the batch limit of ${BATCH_LIMIT}`);
  }
  if (!value.every((v) => typeof v === "string")) {
    throw badRequest("InvalidInput", `${key} must contain only strings`);
  }
  return value as string[];
}

const BASE64_RE = /^[A-Za-z0-9+/]*={0,2}$/;

function decodeImages(body: Record<string, unknown>): Buffer[] {
  const items = requireStringList(body, "images_b64");
  return items.map((item, i) => {
    if (!BASE64_RE.test(item) || item.length % 4 !== 0) {
      throw badRequest("MalformedPayload", `images_b64[${i}] is not valid base64`);
    }
    return Buffer.from(item, "base64");
  });
}

function sendJson(res: ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "content-type": "application/json",
    "content-length": Buffer.byteLength(body),
  });
  res.end(body);
}

export function createServer(backendPromise: EncoderBackend | Promise<EncoderBackend>): Server {
  let backend: EncoderBackend | null = null;
  let loadError: Error | null = null;
  Promise.resolve(backendPromise)
    .then((b) => {
      backend = b;
    })
    .catch((err) => {
      loadError = err instanceof Error ? err : new Error(String(err));
    });

  return createHttpServer(async (req, res) => {
    try {
      if (loadError) {
        throw new ProtocolError("EncoderFailure", `backend failed to load: ${loadError.message}`, 500);
      }
      if (backend === null) {
        throw new ProtocolError("EncoderLoading", "backend is still loading", 503);
      }
      await route(backend, req, res);
    } catch (err) {
      if (err instanceof ProtocolError) {
        sendJson(res, err.status, { error: err.code, message: err.message });
      } else {
        sendJson(res, 500, { error: "InternalError", message: String(err) });
      }
    }
  });
}

async function route(backend: EncoderBackend, req: IncomingMessage, res: ServerResponse) {
  const { method, url } = req;
  if (method === "GET" && url === "/v1/info") {
    sendJson(res, 200, {
      name: backend.name,
      dim: backend.dim,
      capabilities: ["text", "image", "caption"],
    });
    return;
  }
  if (method !== "POST") {
    throw new ProtocolError("InvalidInput", `unsupported route ${method} ${url}`, 404);
  }
  const body = parseJsonObject(await readBody(req));
  switch (url) {
    case "/v1/encode_text": {
      const texts = requireStringList(body, "texts");
      const vectors = await backend.encodeTexts(texts);
      sendJson(res, 200, { dim: backend.dim, vectors });
      return;
    }
    case "/v1/encode_image": {
      const images = decodeImages(body);
      const vectors = await backend.encodeImages(images);
      sendJson(res, 200, { dim: backend.dim, vectors });
      return;
    }
    case "/v1/caption": {
      const images = decodeImages(body);
      const captions = await backend.captionImages(images);
      sendJson(res, 200, { captions });
      return;
    }
    default:
      throw new ProtocolError("InvalidInput", `unsupported route POST ${url}`, 404);
  }
}

export function listen(server: Server, port: number, host: string): Promise<number> {
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const addr = server.address();
      resolve(typeof addr === "object" && addr !== null ? addr.port : port);
    });
  });
}
