import { describe, expect, it } from 'vitest'

import { parseNpy, parseNpz } from '../src/npz.js'
import { makeNpy, makeNpz } from './helpers.js'

describe('parseNpy', () => {
  it('round-trips float64', () => {
    const arr = parseNpy(makeNpy('<f8', [2, 2], [1.5, -2, 0, 1e-12]))
    expect(arr.shape).toEqual([2, 2])
    expect(Array.from(arr.data)).toEqual([1.5, -2, 0, 1e-12])
  })

  it('widens float32 and integers to float64', () => {
    expect(Array.from(parseNpy(makeNpy('<f4', [2], [0.5, 3])).data)).toEqual([
      0.5, 3,
    ])
    expect(Array.from(parseNpy(makeNpy('<i8', [2], [-7, 9])).data)).toEqual([
      -7, 9,
    ])
    expect(Array.from(parseNpy(makeNpy('|u1', [3], [0, 1, 255])).data)).toEqual(
      [0, 1, 255],
    )
  })

  it('parses 1-d shapes with trailing comma', () => {
    expect(parseNpy(makeNpy('<f8', [3], [1, 2, 3])).shape).toEqual([3])
  })

  it('rejects bad magic', () => {
    const bytes = makeNpy('<f8', [1], [0])
    bytes[0] = 0x50
    expect(() => parseNpy(bytes)).toThrow(/magic/)
  })

  it('rejects truncated payload', () => {
    const bytes = makeNpy('<f8', [4], [1, 2, 3, 4])
    expect(() => parseNpy(bytes.subarray(0, bytes.length - 8))).toThrow(
      /truncated/,
    )
  })
})

describe('parseNpz', () => {
  it('unpacks entries and strips the .npy suffix', () => {
    const npz = makeNpz({
      a: makeNpy('<f8', [2], [1, 2]),
      b: makeNpy('<i4', [1], [5]),
    })
    const out = parseNpz(npz)
    expect(Object.keys(out).sort()).toEqual(['a', 'b'])
    expect(Array.from(out.a.data)).toEqual([1, 2])
    expect(Array.from(out.b.data)).toEqual([5])
  })
})
