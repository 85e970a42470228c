import { unzipSync } from 'fflate'

export type NpyArray = {
  data: Float64Array
  shape: number[]
}

const MAGIC = '\x93NUMPY'

/** Parse a single .npy buffer into a float64 array plus its shape. */
export function parseNpy(bytes: Uint8Array): NpyArray {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength)
  for (let i = 0; i < MAGIC.length; i++) {
    if (bytes[i] !== MAGIC.charCodeAt(i)) {
      throw new Error('not an npy payload (bad magic)')
    }
  }
  const major = bytes[6]
  const headerLen =
    major >= 2 ? view.getUint32(8, true) : view.getUint16(8, true)
  const headerStart = major >= 2 ? 12 : 10
  const header = new TextDecoder('latin1').decode(
    bytes.subarray(headerStart, headerStart + headerLen),
  )

  const descr = matchField(header, 'descr')
  const fortran = matchField(header, 'fortran_order') === 'True'
  if (fortran) throw new Error('fortran-order npy arrays are not supported')
  const shapeMatch = header.match(/'shape'\s*:\s*\(([^)]*)\)/)
  if (!shapeMatch) throw new Error('npy header missing shape')
  const shape = shapeMatch[1]
    .split(',')
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map(Number)

  const count = shape.reduce((a, b) => a * b, 1)
  const offset = headerStart + headerLen
  const data = readValues(view, bytes.byteOffset + offset, descr, count)
  return { data, shape }
}

function matchField(header: string, name: string): string {
  const m = header.match(new RegExp(`'${name}'\\s*:\\s*'?([^',}]+)'?`))
  if (!m) throw new Error(`npy header missing ${name}`)
  return m[1].trim()
}

function readValues(
  view: DataView,
  offset: number,
  descr: string,
  count: number,
): Float64Array {
  const out = new Float64Array(count)
  const little = !descr.startsWith('>')
  const code = descr.replace(/^[<>|=]/, '')
  const readers: Record<string, [number, (o: number) => number]> = {
    f8: [8, (o) => view.getFloat64(o, little)],
    f4: [4, (o) => view.getFloat32(o, little)],
    i8: [8, (o) => Number(view.getBigInt64(o, little))],
    i4: [4, (o) => view.getInt32(o, little)],
    i2: [2, (o) => view.getInt16(o, little)],
    i1: [1, (o) => view.getInt8(o)],
    u8: [8, (o) => Number(view.getBigUint64(o, little))],
    u4: [4, (o) => view.getUint32(o, little)],
    u2: [2, (o) => view.getUint16(o, little)],
    u1: [1, (o) => view.getUint8(o)],
    b1: [1, (o) => view.getUint8(o)],
  }
  const reader = readers[code]
  if (!reader) throw new Error(`unsupported npy dtype ${descr}`)
  const [size, read] = reader
  if (offset + size * count > view.byteOffset + view.byteLength) {
    throw new Error('npy payload truncated')
  }
  for (let i = 0; i < count; i++) out[i] = read(offset + i * size)
  return out
}

/** Unpack a .npz archive into named float64 arrays. */
export function parseNpz(buffer: Uint8Array): Record<string, NpyArray> {
  const files = unzipSync(buffer)
  const out: Record<string, NpyArray> = {}
  for (const [name, bytes] of Object.entries(files)) {
    out[name.replace(/\.npy$/i, '')] = parseNpy(bytes)
  }
  return out
}
