// Array-in/array-out surface over the roman CLI. All numeric work
// happens in the core process; this module only moves arrays through
// the core's tensor-container and .ts file interfaces.

import { spawnSync } from 'node:child_process';
import { mkdtempSync, readFileSync, readdirSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { readTensor, writeTensor } from './tensor.js';
import { readTsFile, TsDataset } from './tsformat.js';

export { readTensor, writeTensor } from './tensor.js';
export { readTsFile } from './tsformat.js';
export type { Tensor } from './tensor.js';
export type { TsDataset } from './tsformat.js';

const CLI = process.env.ROMAN_CLI ?? 'roman';

export interface RoutedBatch {
  /** row-major (instances, pseudochannels, baseLength) values */
  data: Float64Array;
  shape: [number, number, number];
  plan: {
    base_length: number;
    window_counts: number[];
    starts: number[][];
    total_pseudochannels: number;
    pseudochannel_order: number[][];
    [key: string]: unknown;
  };
}

export interface GeneratedTask {
  train: TsDataset;
  test: TsDataset;
  metadata: Record<string, unknown>;
}

function runCli(args: string[]): void {
  const proc = spawnSync(CLI, args, { encoding: 'utf-8' });
  if (proc.error) {
    throw new Error(`failed to launch ${CLI}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    throw new Error(`${CLI} ${args.join(' ')} exited with ${proc.status}: ${proc.stderr}`);
  }
}

/** Core library version, for compatibility checks against this package. */
export function version(): string {
  const proc = spawnSync(CLI, ['--version'], { encoding: 'utf-8' });
  if (proc.error || proc.status !== 0) {
    throw new Error(`failed to query ${CLI} --version`);
  }
  return proc.stdout.trim();
}

function collectTensors(dir: string): RoutedBatch {
  const files = readdirSync(dir).filter((f) => f.startsWith('tensor_') && f.endsWith('.bin')).sort();
  if (files.length === 0) throw new Error(`no tensors written under ${dir}`);
  const first = readTensor(join(dir, files[0]));
  const [channels, baseLength] = first.shape;
  const data = new Float64Array(files.length * channels * baseLength);
  data.set(first.data, 0);
  for (let i = 1; i < files.length; i++) {
    const tensor = readTensor(join(dir, files[i]));
    data.set(tensor.data, i * channels * baseLength);
  }
  const plan = JSON.parse(readFileSync(join(dir, 'plan.json'), 'utf-8'));
  return { data, shape: [files.length, channels, baseLength], plan };
}

/**
 * Apply the routing operator to a (N, C, L) batch.
 *
 * The batch is handed to the core through its tensor-container format
 * and transformed without preprocessing, so scales=1 returns the input
 * values unchanged. Output is numerically identical to the tensor files
 * `roman transform` writes for the same values and configuration.
 */
export function transformBatch(values: Float64Array, shape: [number, number, number],
                               scales: number, alpha = 0.5): RoutedBatch {
  const work = mkdtempSync(join(tmpdir(), 'roman-ffi-'));
  try {
    const input = join(work, 'input.bin');
    writeTensor(input, values, shape);
    const outDir = join(work, 'out');
    runCli(['transform', '--input', input, '--scales', String(scales),
            '--alpha', String(alpha), '--no-preprocess', '--out', outDir]);
    return collectTensors(outDir);
  } finally {
    rmSync(work, { recursive: true, force: true });
  }
}

/**
 * Generate one synthetic task family (train and test splits plus the
 * generator's ground-truth metadata) through the core generator.
 */
export function generate(family: 'position' | 'longrange' | 'multiscale' | 'invariance',
                         seed: number, nTrain = 500, nTest = 250): GeneratedTask {
  const work = mkdtempSync(join(tmpdir(), 'roman-synth-'));
  try {
    runCli(['synth', '--family', family, '--seed', String(seed),
            '--n-train', String(nTrain), '--n-test', String(nTest), '--out', work]);
    const stem = `${family}_seed${seed}`;
    return {
      train: readTsFile(join(work, `${stem}_TRAIN.ts`)),
      test: readTsFile(join(work, `${stem}_TEST.ts`)),
      metadata: JSON.parse(readFileSync(join(work, `${stem}_metadata.json`), 'utf-8')),
    };
  } finally {
    rmSync(work, { recursive: true, force: true });
  }
}
