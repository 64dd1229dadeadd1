// Reader/writer for the core's tensor container: a flat little-endian
// float64 payload next to a JSON sidecar holding dims, a SHA-256 digest
// and metadata.

import { createHash } from 'node:crypto';
import { readFileSync, writeFileSync } from 'node:fs';

export const TENSOR_FORMAT_VERSION = 1;

export interface Tensor {
  data: Float64Array;
  shape: number[];
  metadata: Record<string, unknown>;
}

interface SidecarHeader {
  version: number;
  dtype: string;
  dims: number[];
  sha256: string;
  metadata: Record<string, unknown>;
}

function sidecarPath(path: string): string {
  return `${path}.json`;
}

export function readTensor(path: string): Tensor {
  const header = JSON.parse(readFileSync(sidecarPath(path), 'utf-8')) as SidecarHeader;
  if (header.version !== TENSOR_FORMAT_VERSION) {
    throw new Error(`${path}: tensor format version ${header.version}, expected ${TENSOR_FORMAT_VERSION}`);
  }
  const payload = readFileSync(path);
  const expected = header.dims.reduce((a, b) => a * b, 1) * 8;
  if (payload.length !== expected) {
    throw new Error(`${path}: payload holds ${payload.length} bytes, dims ${header.dims} imply ${expected}`);
  }
  const digest = createHash('sha256').update(payload).digest('hex');
  if (digest !== header.sha256) {
    throw new Error(`${path}: payload digest does not match header`);
  }
  // copy into an aligned buffer; Buffer slices may be unaligned for f64 views
  const aligned = new ArrayBuffer(payload.length);
  new Uint8Array(aligned).set(payload);
  return { data: new Float64Array(aligned), shape: header.dims, metadata: header.metadata };
}

export function writeTensor(path: string, data: Float64Array, shape: number[],
                            metadata: Record<string, unknown> = {}): void {
  const count = shape.reduce((a, b) => a * b, 1);
  if (count !== data.length) {
    throw new Error(`shape ${shape} implies ${count} values, got ${data.length}`);
  }
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  const header: SidecarHeader = {
    version: TENSOR_FORMAT_VERSION,
    dtype: '<f8',
    dims: shape,
    sha256: createHash('sha256').update(payload).digest('hex'),
    metadata,
  };
  writeFileSync(path, payload);
  writeFileSync(sidecarPath(path), JSON.stringify(header, null, 1) + '\n');
}
