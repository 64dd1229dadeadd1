// Minimal reader for the sktime-style .ts text files the core writes:
// header lines, then one instance per line with ':'-separated dimensions,
// ','-separated values and the class label last.

import { readFileSync } from 'node:fs';

export interface TsDataset {
  /** row-major (instances, channels, length) values */
  data: Float64Array;
  shape: [number, number, number];
  labels: Int32Array;
  classNames: string[];
}

export function readTsFile(path: string): TsDataset {
  const lines = readFileSync(path, 'utf-8').split('\n');
  let classNames: string[] = [];
  let inData = false;
  const instances: number[][][] = [];
  const rawLabels: string[] = [];

  for (const raw of lines) {
    const line = raw.trim();
    if (!line || line.startsWith('#')) continue;
    if (!inData) {
      if (line.toLowerCase() === '@data') {
        inData = true;
      } else if (line.toLowerCase().startsWith('@classlabel')) {
        const parts = line.split(/\s+/);
        if (parts[1]?.toLowerCase() !== 'true') {
          throw new Error(`${path}: expected "@classLabel true <labels...>"`);
        }
        classNames = parts.slice(2);
      }
      continue;
    }
    const parts = line.split(':');
    if (parts.length < 2) throw new Error(`${path}: data line without label`);
    rawLabels.push(parts[parts.length - 1].trim());
    instances.push(parts.slice(0, -1).map((dim) =>
      dim.split(',').map((tok) => (tok.trim() === '?' ? NaN : Number(tok)))));
  }
  if (!inData || instances.length === 0) {
    throw new Error(`${path}: no @data section`);
  }

  const n = instances.length;
  const channels = instances[0].length;
  const length = instances[0][0].length;
  const data = new Float64Array(n * channels * length);
  for (let i = 0; i < n; i++) {
    for (let c = 0; c < channels; c++) {
      if (instances[i][c].length !== length) {
        throw new Error(`${path}: unequal series lengths`);
      }
      data.set(instances[i][c], (i * channels + c) * length);
    }
  }
  const index = new Map(classNames.map((name, k) => [name, k]));
  const labels = new Int32Array(n);
  rawLabels.forEach((label, i) => {
    const k = index.get(label);
    if (k === undefined) throw new Error(`${path}: unknown label ${label}`);
    labels[i] = k;
  });
  return { data, shape: [n, channels, length], labels, classNames };
}
