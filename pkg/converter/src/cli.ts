#!/usr/bin/env node
import { parseArgs } from 'node:util'

import { convert } from './convert.js'

export function run(argv: string[]): number {
  const [command, ...rest] = argv
  if (command !== 'convert') {
    process.stderr.write(
      'usage: bundle-convert convert --source <path> --out <dir> [--largest-cc|--no-largest-cc]\n',
    )
    return 2
  }
  const { values } = parseArgs({
    args: rest,
    options: {
      source: { type: 'string' },
      out: { type: 'string' },
      'largest-cc': { type: 'boolean', default: true },
      'no-largest-cc': { type: 'boolean', default: false },
      name: { type: 'string' },
    },
  })
  if (!values.source || !values.out) {
    process.stderr.write('convert: --source and --out are required\n')
    return 2
  }
  try {
    const report = convert(values.source, values.out, {
      largestCc: values['no-largest-cc'] ? false : values['largest-cc'],
      name: values.name,
    })
    process.stdout.write(JSON.stringify(report) + '\n')
    return 0
  } catch (err) {
    process.stderr.write(`convert: ${(err as Error).message}\n`)
    return 1
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(run(process.argv.slice(2)))
}
