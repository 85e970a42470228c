import * as fs from 'node:fs'
import * as path from 'node:path'

import { Bundle, readBundle, writeBundle } from './bundle.js'
import { NpyArray, parseNpz } from './npz.js'

export type ConversionReport = {
  source: string
  n: number
  m: number
  f: number
  c: number
  checksum: string
}

export type ConvertOptions = {
  /** Restrict to the largest connected component (default true). */
  largestCc?: boolean
  /** L1 row-normalize features (default true; skipped for bundle sources). */
  normalizeFeatures?: boolean
  name?: string
}

const ADJ_KEYS = ['adj_data', 'adj_indices', 'adj_indptr', 'adj_shape']
const ATTR_CSR_KEYS = ['attr_data', 'attr_indices', 'attr_indptr', 'attr_shape']

/**
 * Convert a citation-network .npz dump (CSR adjacency + CSR or dense
 * attributes + integer labels) or an existing bundle directory into a
 * validated bundle at out_dir.
 */
export function convert(
  source: string,
  outDir: string,
  options: ConvertOptions = {},
): ConversionReport {
  const largestCc = options.largestCc ?? true
  const bundle = isBundleDir(source)
    ? readBundle(source)
    : fromNpz(source, options)
  const filtered = largestCc && !isBundleDir(source)
    ? restrictToLargestComponent(bundle)
    : bundle
  const checksum = writeBundle(filtered, outDir)
  return {
    source,
    n: filtered.n,
    m: filtered.edges.length,
    f: filtered.f,
    c: filtered.c,
    checksum,
  }
}

function isBundleDir(source: string): boolean {
  return (
    fs.existsSync(source) &&
    fs.statSync(source).isDirectory() &&
    fs.existsSync(path.join(source, 'meta.json'))
  )
}

function fromNpz(source: string, options: ConvertOptions): Bundle {
  const arrays = parseNpz(fs.readFileSync(source))
  const keys = Object.keys(arrays)
  for (const key of [...ADJ_KEYS, 'labels']) {
    if (!(key in arrays)) {
      throw new Error(
        `unknown archive schema: missing ${key}; recognized keys are ` +
          `${[...ADJ_KEYS, ...ATTR_CSR_KEYS, 'attr_matrix', 'labels'].join(', ')} ` +
          `(found: ${keys.join(', ')})`,
      )
    }
  }

  const n = arrays.adj_shape.data[0]
  const edges = edgesFromCsr(
    n,
    arrays.adj_indptr.data,
    arrays.adj_indices.data,
  )

  let features: Float64Array
  let f: number
  if (ATTR_CSR_KEYS.every((k) => k in arrays)) {
    f = arrays.attr_shape.data[1]
    features = denseFromCsr(
      n,
      f,
      arrays.attr_indptr.data,
      arrays.attr_indices.data,
      arrays.attr_data.data,
    )
  } else if ('attr_matrix' in arrays) {
    const attr = arrays.attr_matrix as NpyArray
    if (attr.shape.length !== 2 || attr.shape[0] !== n) {
      throw new Error(`attr_matrix shape [${attr.shape}] does not match n=${n}`)
    }
    f = attr.shape[1]
    features = Float64Array.from(attr.data)
  } else {
    throw new Error(
      'unknown archive schema: no attributes; recognized keys are ' +
        `${ATTR_CSR_KEYS.join(', ')} or attr_matrix`,
    )
  }

  const labelsRaw = arrays.labels.data
  if (labelsRaw.length !== n) {
    throw new Error(`labels length ${labelsRaw.length} does not match n=${n}`)
  }
  const labels = Int32Array.from(labelsRaw)

  if (options.normalizeFeatures ?? true) {
    l1NormalizeRows(features, n, f)
  }

  const name = options.name ?? path.basename(source).replace(/\.npz$/i, '')
  return {
    name,
    n,
    f,
    c: relabelInPlace(labels),
    edges,
    features,
    labels,
    notes: { feature_normalization: 'l1-row' },
  }
}

/** Undirected edge list (u < v, deduped, no self-loops) from CSR structure. */
function edgesFromCsr(
  n: number,
  indptr: Float64Array,
  indices: Float64Array,
): Array<[number, number]> {
  const seen = new Set<number>()
  const edges: Array<[number, number]> = []
  for (let u = 0; u < n; u++) {
    for (let p = indptr[u]; p < indptr[u + 1]; p++) {
      const v = indices[p]
      if (u === v) continue
      const a = Math.min(u, v)
      const b = Math.max(u, v)
      const key = a * n + b
      if (!seen.has(key)) {
        seen.add(key)
        edges.push([a, b])
      }
    }
  }
  edges.sort((x, y) => x[0] - y[0] || x[1] - y[1])
  return edges
}

function denseFromCsr(
  n: number,
  f: number,
  indptr: Float64Array,
  indices: Float64Array,
  data: Float64Array,
): Float64Array {
  const out = new Float64Array(n * f)
  for (let i = 0; i < n; i++) {
    for (let p = indptr[i]; p < indptr[i + 1]; p++) {
      out[i * f + indices[p]] = data[p]
    }
  }
  return out
}

function l1NormalizeRows(features: Float64Array, n: number, f: number): void {
  for (let i = 0; i < n; i++) {
    let total = 0
    for (let j = 0; j < f; j++) total += Math.abs(features[i * f + j])
    if (total === 0) continue
    for (let j = 0; j < f; j++) features[i * f + j] /= total
  }
}

/** Remap labels to contiguous [0, c) in order of first appearance by value. */
function relabelInPlace(labels: Int32Array): number {
  const present = Array.from(new Set(labels)).sort((a, b) => a - b)
  const map = new Map(present.map((v, i) => [v, i]))
  for (let i = 0; i < labels.length; i++) {
    labels[i] = map.get(labels[i])!
  }
  return present.length
}

function restrictToLargestComponent(bundle: Bundle): Bundle {
  const adj: number[][] = Array.from({ length: bundle.n }, () => [])
  for (const [u, v] of bundle.edges) {
    adj[u].push(v)
    adj[v].push(u)
  }
  const component = new Int32Array(bundle.n).fill(-1)
  const sizes: number[] = []
  for (let start = 0; start < bundle.n; start++) {
    if (component[start] >= 0) continue
    const id = sizes.length
    let size = 0
    const queue = [start]
    component[start] = id
    while (queue.length) {
      const u = queue.pop()!
      size++
      for (const v of adj[u]) {
        if (component[v] < 0) {
          component[v] = id
          queue.push(v)
        }
      }
    }
    sizes.push(size)
  }
  const keepId = sizes.indexOf(Math.max(...sizes))

  const oldToNew = new Int32Array(bundle.n).fill(-1)
  let next = 0
  for (let u = 0; u < bundle.n; u++) {
    if (component[u] === keepId) oldToNew[u] = next++
  }
  const n = next
  const features = new Float64Array(n * bundle.f)
  const labels = new Int32Array(n)
  for (let u = 0; u < bundle.n; u++) {
    const i = oldToNew[u]
    if (i < 0) continue
    features.set(
      bundle.features.subarray(u * bundle.f, (u + 1) * bundle.f),
      i * bundle.f,
    )
    labels[i] = bundle.labels[u]
  }
  const edges = bundle.edges
    .filter(([u]) => oldToNew[u] >= 0)
    .map(([u, v]): [number, number] => [oldToNew[u], oldToNew[v]])
  return {
    ...bundle,
    n,
    c: relabelInPlace(labels),
    edges,
    features,
    labels,
    notes: { ...bundle.notes, largest_connected_component: true },
  }
}
