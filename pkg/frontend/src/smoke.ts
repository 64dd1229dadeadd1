// End-to-end smoke demo: generate the coarse-position task through the
// core, route it at four scales, and train a small pooled-convolution
// classifier written right here in the script. Run with:
//
//   node dist/smoke.js
//
// The classifier is intentionally simple (random kernels, proportion of
// positive values, least-squares head); the point is that routed arrays
// coming out of the binding plug directly into downstream code.

import { generate, transformBatch } from './index.js';

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0; a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

interface Kernel { channel: number; weights: number[]; dilation: number }

function sampleKernels(rand: () => number, count: number, channels: number,
                       length: number): Kernel[] {
  const kernels: Kernel[] = [];
  const maxDilation = Math.max(1, Math.floor((length - 1) / 8));
  for (let k = 0; k < count; k++) {
    const weights = Array.from({ length: 9 }, () => rand() * 2 - 1);
    const mean = weights.reduce((s, w) => s + w, 0) / 9;
    kernels.push({
      channel: Math.floor(rand() * channels),
      weights: weights.map((w) => w - mean),
      dilation: 1 + Math.floor(rand() * maxDilation),
    });
  }
  return kernels;
}

function pooledFeatures(data: Float64Array, shape: [number, number, number],
                        kernels: Kernel[]): number[][] {
  const [n, channels, length] = shape;
  return Array.from({ length: n }, (_, i) => kernels.map((kernel) => {
    const span = 8 * kernel.dilation;
    const outLen = length - span;
    if (outLen <= 0) return 0;
    let best = -Infinity;
    const base = (i * channels + kernel.channel) * length;
    for (let t = 0; t < outLen; t++) {
      let acc = 0;
      for (let j = 0; j < 9; j++) acc += kernel.weights[j] * data[base + t + j * kernel.dilation];
      if (acc > best) best = acc;
    }
    return best; // global max pooling over time
  }));
}

/** least-squares head on [1, features], solved by normal equations */
function fitHead(features: number[][], labels: Int32Array): number[] {
  const dims = features[0].length + 1;
  const gram = Array.from({ length: dims }, () => new Float64Array(dims));
  const rhs = new Float64Array(dims);
  features.forEach((row, i) => {
    const x = [1, ...row];
    const y = labels[i] === 1 ? 1 : -1;
    for (let a = 0; a < dims; a++) {
      rhs[a] += x[a] * y;
      for (let b = 0; b < dims; b++) gram[a][b] += x[a] * x[b];
    }
  });
  for (let a = 0; a < dims; a++) gram[a][a] += 1e-3; // ridge for stability
  // Gaussian elimination
  const w = new Float64Array(rhs);
  for (let col = 0; col < dims; col++) {
    let pivot = col;
    for (let r = col + 1; r < dims; r++) if (Math.abs(gram[r][col]) > Math.abs(gram[pivot][col])) pivot = r;
    [gram[col], gram[pivot]] = [gram[pivot], gram[col]];
    const tmp = w[col]; w[col] = w[pivot]; w[pivot] = tmp;
    for (let r = 0; r < dims; r++) {
      if (r === col || gram[r][col] === 0) continue;
      const f = gram[r][col] / gram[col][col];
      for (let c = col; c < dims; c++) gram[r][c] -= f * gram[col][c];
      w[r] -= f * w[col];
    }
  }
  return Array.from({ length: dims }, (_, a) => w[a] / gram[a][a]);
}

function accuracy(features: number[][], labels: Int32Array, head: number[]): number {
  let correct = 0;
  features.forEach((row, i) => {
    const score = head[0] + row.reduce((s, v, k) => s + v * head[k + 1], 0);
    if ((score > 0 ? 1 : 0) === labels[i]) correct++;
  });
  return correct / features.length;
}

const task = generate('position', 0, 200, 100);
console.log(`generated position task: train ${task.train.shape}, test ${task.test.shape}`);

for (const scales of [1, 4]) {
  const train = transformBatch(task.train.data, task.train.shape, scales, 0.5);
  const test = transformBatch(task.test.data, task.test.shape, scales, 0.5);
  const rand = mulberry32(7);
  const kernels = sampleKernels(rand, 400, train.shape[1], train.shape[2]);
  const head = fitHead(pooledFeatures(train.data, train.shape, kernels), task.train.labels);
  const acc = accuracy(pooledFeatures(test.data, test.shape, kernels), task.test.labels, head);
  console.log(`scales=${scales}: routed shape ${train.shape.join('x')}, pooled-conv test accuracy ${acc.toFixed(3)}`);
}
