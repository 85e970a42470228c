import { zipSync } from 'fflate'

/** Serialize one array into npy v1 bytes. */
export function makeNpy(
  descr: string,
  shape: number[],
  values: number[],
): Uint8Array {
  const shapeStr =
    shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(', ')})`
  let header = `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shapeStr}, }`
  const unpadded = 10 + header.length + 1
  header += ' '.repeat((64 - (unpadded % 64)) % 64) + '\n'

  const writers: Record<
    string,
    [number, (v: DataView, o: number, x: number) => void]
  > = {
    '<f8': [8, (v, o, x) => v.setFloat64(o, x, true)],
    '<f4': [4, (v, o, x) => v.setFloat32(o, x, true)],
    '<i8': [8, (v, o, x) => v.setBigInt64(o, BigInt(x), true)],
    '<i4': [4, (v, o, x) => v.setInt32(o, x, true)],
    '|u1': [1, (v, o, x) => v.setUint8(o, x)],
  }
  const [size, write] = writers[descr]
  const out = new Uint8Array(10 + header.length + size * values.length)
  out.set([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59, 1, 0])
  const view = new DataView(out.buffer)
  view.setUint16(8, header.length, true)
  for (let i = 0; i < header.length; i++) {
    out[10 + i] = header.charCodeAt(i)
  }
  for (let i = 0; i < values.length; i++) {
    write(view, 10 + header.length + i * size, values[i])
  }
  return out
}

export function makeNpz(entries: Record<string, Uint8Array>): Uint8Array {
  const named: Record<string, Uint8Array> = {}
  for (const [key, bytes] of Object.entries(entries)) {
    named[`${key}.npy`] = bytes
  }
  return zipSync(named)
}

/**
 * CSR arrays for a directed edge list over n nodes (all values 1.0).
 * Intentionally keeps duplicates/self-loops as given so tests can check
 * that the converter cleans them up.
 */
export function csrFromDirected(
  n: number,
  directed: Array<[number, number]>,
): { data: number[]; indices: number[]; indptr: number[]; shape: number[] } {
  const byRow: number[][] = Array.from({ length: n }, () => [])
  for (const [u, v] of directed) byRow[u].push(v)
  const indices = byRow.flat()
  const indptr = [0]
  for (const row of byRow) indptr.push(indptr[indptr.length - 1] + row.length)
  return { data: indices.map(() => 1), indices, indptr, shape: [n, n] }
}

/** A full npz fixture: CSR adjacency + CSR one-hot-ish attrs + labels. */
export function graphNpz(
  n: number,
  directed: Array<[number, number]>,
  labels: number[],
  featureRows?: number[][],
): Uint8Array {
  const adj = csrFromDirected(n, directed)
  const rows =
    featureRows ?? labels.map((l) => [l === 0 ? 2 : 0, l === 0 ? 0 : 4, 2])
  const f = rows[0].length
  const attrData: number[] = []
  const attrIndices: number[] = []
  const attrIndptr = [0]
  for (const row of rows) {
    row.forEach((x, j) => {
      if (x !== 0) {
        attrData.push(x)
        attrIndices.push(j)
      }
    })
    attrIndptr.push(attrData.length)
  }
  return makeNpz({
    adj_data: makeNpy('<f4', [adj.data.length], adj.data),
    adj_indices: makeNpy('<i4', [adj.indices.length], adj.indices),
    adj_indptr: makeNpy('<i4', [adj.indptr.length], adj.indptr),
    adj_shape: makeNpy('<i8', [2], adj.shape),
    attr_data: makeNpy('<f4', [attrData.length], attrData),
    attr_indices: makeNpy('<i4', [attrIndices.length], attrIndices),
    attr_indptr: makeNpy('<i4', [attrIndptr.length], attrIndptr),
    attr_shape: makeNpy('<i8', [2], [n, f]),
    labels: makeNpy('<i8', [n], labels),
  })
}
