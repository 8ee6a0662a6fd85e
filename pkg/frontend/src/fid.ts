/**
 * FID feature extraction: encode every image in a directory and write the
 * features as the shared binary feature-matrix container, byte-compatible
 * with the hub's readers:
 *
 *   magic "MMFEAT" | version u16 LE | rows u32 LE | cols u32 LE | float32 LE data
 */

import { readdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { EncoderBackend } from "./backend.js";
import { ProtocolError } from "./server.js";

const MAGIC = Buffer.from("MMFEAT", "ascii");
const VERSION = 1;

export function serializeFeatureMatrix(rows: number[][]): Buffer {
  const rowCount = rows.length;
  const cols = rowCount > 0 ? rows[0].length : 0;
  const header = Buffer.alloc(MAGIC.length + 2 + 4 + 4);
  MAGIC.copy(header, 0);
  header.writeUInt16LE(VERSION, MAGIC.length);
  header.writeUInt32LE(rowCount, MAGIC.length + 2);
  header.writeUInt32LE(cols, MAGIC.length + 6);
  const data = Buffer.alloc(rowCount * cols * 4);
  for (let r = 0; r < rowCount; r++) {
    if (rows[r].length !== cols) {
      throw new ProtocolError("InvalidInput", "ragged feature rows", 400);
    }
    for (let c = 0; c < cols; c++) {
      data.writeFloatLE(rows[r][c], 4 * (r * cols + c));
    }
  }
  return Buffer.concat([header, data]);
}

export async function extractFidFeatures(
  imageDir: string,
  outFile: string,
  backend: EncoderBackend,
): Promise<{ rows: number; cols: number }> {
  let names: string[];
  try {
    names = readdirSync(imageDir).filter((n) => !n.startsWith(".")).sort();
  } catch (err) {
    throw new ProtocolError("UnreadableImage", `cannot read directory: ${err}`, 400);
  }
  if (names.length === 0) {
    throw new ProtocolError("EmptyInput", `no images in ${imageDir}`, 400);
  }
  const buffers = names.map((name) => {
    try {
      return readFileSync(join(imageDir, name));
    } catch (err) {
      throw new ProtocolError("UnreadableImage", `cannot read ${name}: ${err}`, 400);
    }
  });
  const vectors = await backend.encodeImages(buffers);
  writeFileSync(outFile, serializeFeatureMatrix(vectors));
  return { rows: vectors.length, cols: backend.dim };
}
