/**
 * The `fdsf v1` exchange container: one ASCII header line
 * `fdsf v1 <count> <dim>\n` followed by row-major little-endian
 * float32 values.
 */

import { openSync, closeSync, writeSync, readFileSync } from 'fs'

export interface FeatureMatrix {
  count: number
  dim: number
  /** row-major, count * dim values */
  rows: Float32Array
}

export class FormatError extends Error {}

export function writeFeatures(path: string, features: FeatureMatrix): void {
  const { count, dim, rows } = features
  if (count <= 0 || dim <= 0) {
    throw new FormatError('feature file must have positive count and dim')
  }
  if (rows.length !== count * dim) {
    throw new FormatError('rows length does not match count * dim')
  }
  for (let i = 0; i < rows.length; i++) {
    if (!Number.isFinite(rows[i])) {
      throw new FormatError(`non-finite value at flat index ${i}`)
    }
  }
  const header = Buffer.from(`fdsf v1 ${count} ${dim}\n`, 'ascii')
  // Serialize explicitly little-endian regardless of host order.
  const payload = Buffer.alloc(rows.length * 4)
  for (let i = 0; i < rows.length; i++) {
    payload.writeFloatLE(rows[i], i * 4)
  }
  const fd = openSync(path, 'w')
  try {
    writeSync(fd, header)
    writeSync(fd, payload)
  } finally {
    closeSync(fd)
  }
}

export function readFeatures(path: string): FeatureMatrix {
  const buf = readFileSync(path)
  const newline = buf.indexOf(0x0a)
  if (newline < 0 || newline > 256) {
    throw new FormatError('missing or overlong header line')
  }
  const fields = buf.subarray(0, newline).toString('ascii').trim().split(' ')
  if (fields[0] !== 'fdsf' || fields[1] !== 'v1' || fields.length !== 4) {
    throw new FormatError(`expected 'fdsf v1 <count> <dim>' header`)
  }
  const count = Number(fields[2])
  const dim = Number(fields[3])
  if (!Number.isInteger(count) || !Number.isInteger(dim) || count <= 0 || dim <= 0) {
    throw new FormatError('fdsf header must declare positive count and dim')
  }
  const payload = buf.subarray(newline + 1)
  if (payload.length !== count * dim * 4) {
    throw new FormatError(
      `payload is ${payload.length} bytes, expected ${count * dim * 4}`,
    )
  }
  const rows = new Float32Array(count * dim)
  for (let i = 0; i < rows.length; i++) {
    rows[i] = payload.readFloatLE(i * 4)
    if (!Number.isFinite(rows[i])) {
      throw new FormatError(`non-finite value at flat index ${i}`)
    }
  }
  return { count, dim, rows }
}
