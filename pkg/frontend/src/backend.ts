/**
 * Encoder backends. The built-in backend is the deterministic featurizer;
 * model-backed implementations plug in through the config file (model
 * names and module paths are configuration, never code constants):
 *
 *   { "backend": "builtin", "dim": 32, "name": "builtin-featurizer" }
 *   { "backend": "module", "module": "./my-clip-backend.js", "model": "..." }
 *
 * A module backend must export `createBackend(config) -> EncoderBackend`.
 */

import { readFileSync } from "node:fs";

import { captionImage, embedImage, embedText, MIN_DIM } from "./features.js";

export interface EncoderBackend {
  name: string;
  dim: number;
  encodeTexts(texts: string[]): Promise<number[][]> | number[][];
  encodeImages(images: Buffer[]): Promise<number[][]> | number[][];
  captionImages(images: Buffer[]): Promise<string[]> | string[];
}

export interface BackendConfig {
  backend?: string;
  name?: string;
  dim?: number;
  module?: string;
  [key: string]: unknown;
}

export function builtinBackend(config: BackendConfig = {}): EncoderBackend {
  const dim = config.dim ?? 32;
  if (dim < MIN_DIM) {
    throw new Error(`dim must be >= ${MIN_DIM}, got ${dim}`);
  }
  return {
    name: config.name ?? "builtin-featurizer",
    dim,
    encodeTexts: (texts) => texts.map((t) => embedText(t, dim)),
    encodeImages: (images) => images.map((img) => embedImage(img, dim)),
    captionImages: (images) => images.map((img) => captionImage(img)),
  };
}

export async function loadBackend(config: BackendConfig = {}): Promise<EncoderBackend> {
  const kind = config.backend ?? "builtin";
  if (kind === "builtin") {
    return builtinBackend(config);
  }
  if (kind === "module") {
    if (!config.module) {
      throw new Error("module backend requires a 'module' path in the config");
    }
    const mod = await import(config.module);
    if (typeof mod.createBackend !== "function") {
      throw new Error(`backend module ${config.module} does not export createBackend`);
    }
    return mod.createBackend(config);
  }
  throw new Error(`unknown backend kind '${kind}'`);
}

export function readConfig(path: string | undefined): BackendConfig {
  if (!path) return {};
  return JSON.parse(readFileSync(path, "utf-8")) as BackendConfig;
}
