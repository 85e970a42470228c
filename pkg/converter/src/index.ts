export { convert } from './convert.js'
export type { ConversionReport, ConvertOptions } from './convert.js'
export { readBundle, writeBundle, featuresChecksum } from './bundle.js'
export type { Bundle } from './bundle.js'
export { parseNpy, parseNpz } from './npz.js'
export type { NpyArray } from './npz.js'
