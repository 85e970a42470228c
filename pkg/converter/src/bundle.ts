import { createHash } from 'node:crypto'
import * as fs from 'node:fs'
import * as path from 'node:path'

export type Bundle = {
  name: string
  n: number
  f: number
  c: number
  /** Undirected edges as [u, v] with u < v, deduplicated, no self-loops. */
  edges: Array<[number, number]>
  /** Row-major n x f features. */
  features: Float64Array
  labels: Int32Array
  notes?: Record<string, unknown>
}

export function writeBundle(bundle: Bundle, dir: string): string {
  fs.mkdirSync(dir, { recursive: true })
  const meta: Record<string, unknown> = {
    n: bundle.n,
    f: bundle.f,
    c: bundle.c,
    name: bundle.name,
    ...bundle.notes,
  }
  fs.writeFileSync(
    path.join(dir, 'meta.json'),
    JSON.stringify(meta, null, 2) + '\n',
  )
  fs.writeFileSync(
    path.join(dir, 'edges.tsv'),
    bundle.edges.map(([u, v]) => `${u}\t${v}\n`).join(''),
  )
  fs.writeFileSync(
    path.join(dir, 'labels.tsv'),
    Array.from(bundle.labels, (l) => `${l}\n`).join(''),
  )
  const payload = Buffer.from(
    bundle.features.buffer,
    bundle.features.byteOffset,
    bundle.features.byteLength,
  )
  fs.writeFileSync(path.join(dir, 'features.bin'), payload)
  return createHash('sha256').update(payload).digest('hex')
}

export function readBundle(dir: string): Bundle {
  const meta = JSON.parse(
    fs.readFileSync(path.join(dir, 'meta.json'), 'utf8'),
  ) as Record<string, unknown>
  const n = Number(meta.n)
  const f = Number(meta.f)
  const c = Number(meta.c)

  const payload = fs.readFileSync(path.join(dir, 'features.bin'))
  if (payload.length !== n * f * 8) {
    throw new Error(
      `${dir}: feature payload size ${payload.length} != n*f*8 = ${n * f * 8}`,
    )
  }
  const features = new Float64Array(n * f)
  for (let i = 0; i < n * f; i++) features[i] = payload.readDoubleLE(i * 8)

  const labelLines = fs
    .readFileSync(path.join(dir, 'labels.tsv'), 'utf8')
    .split('\n')
    .filter((s) => s.length > 0)
  if (labelLines.length !== n) {
    throw new Error(`${dir}: labels.tsv has ${labelLines.length} lines, expected ${n}`)
  }
  const labels = Int32Array.from(labelLines, Number)

  const edges: Array<[number, number]> = []
  for (const line of fs
    .readFileSync(path.join(dir, 'edges.tsv'), 'utf8')
    .split('\n')) {
    if (!line) continue
    const [u, v] = line.split('\t').map(Number)
    edges.push([u, v])
  }

  const { n: _n, f: _f, c: _c, name, ...notes } = meta
  return {
    name: String(name ?? 'unnamed'),
    n,
    f,
    c,
    edges,
    features,
    labels,
    notes,
  }
}

export function featuresChecksum(dir: string): string {
  const payload = fs.readFileSync(path.join(dir, 'features.bin'))
  return createHash('sha256').update(payload).digest('hex')
}
