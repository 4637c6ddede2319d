/**
 * Region annotations: which rectangle of which image produces which
 * output row. TSV format, one region per line:
 *
 *   row_id<TAB>image_id<TAB>x<TAB>y<TAB>w<TAB>h
 *
 * or, for whole-image grounding:
 *
 *   row_id<TAB>image_id<TAB>WHOLE
 */

import { readFileSync } from 'fs'

export interface Box {
  x: number
  y: number
  w: number
  h: number
}

export interface RegionSpec {
  rowId: number
  imageId: string
  /** null means the whole image */
  box: Box | null
}

export class RegionError extends Error {}

function parseLine(line: string, lineno: number): RegionSpec {
  const fields = line.split('\t')
  if (fields.length !== 3 && fields.length !== 6) {
    throw new RegionError(`line ${lineno}: expected 3 or 6 tab-separated fields`)
  }
  const rowId = Number(fields[0])
  if (!Number.isInteger(rowId) || rowId < 0) {
    throw new RegionError(`line ${lineno}: row_id must be a non-negative integer`)
  }
  const imageId = fields[1]
  if (!imageId) {
    throw new RegionError(`line ${lineno}: empty image_id`)
  }
  if (fields.length === 3) {
    if (fields[2] !== 'WHOLE') {
      throw new RegionError(`line ${lineno}: third field must be WHOLE`)
    }
    return { rowId, imageId, box: null }
  }
  const [x, y, w, h] = fields.slice(2).map(Number)
  if ([x, y, w, h].some(v => !Number.isFinite(v))) {
    throw new RegionError(`line ${lineno}: non-numeric box field`)
  }
  if (w <= 0 || h <= 0) {
    throw new RegionError(`line ${lineno}: box must have positive width and height`)
  }
  if (x < 0 || y < 0) {
    throw new RegionError(`line ${lineno}: box origin must be non-negative`)
  }
  return { rowId, imageId, box: { x, y, w, h } }
}

export function parseRegions(text: string): RegionSpec[] {
  const regions: RegionSpec[] = []
  const lines = text.split('\n')
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trimEnd()
    if (!line || line.startsWith('#')) continue
    regions.push(parseLine(line, i + 1))
  }
  if (regions.length === 0) {
    throw new RegionError('no regions found')
  }
  // The row ids define the output layout: they must be exactly 0..N-1.
  const seen = new Set<number>()
  for (const r of regions) {
    if (seen.has(r.rowId)) {
      throw new RegionError(`duplicate row_id ${r.rowId}`)
    }
    seen.add(r.rowId)
  }
  for (let i = 0; i < regions.length; i++) {
    if (!seen.has(i)) {
      throw new RegionError(
        `row_ids must cover 0..${regions.length - 1}; missing ${i}`,
      )
    }
  }
  return regions
}

export function loadRegions(path: string): RegionSpec[] {
  return parseRegions(readFileSync(path, 'utf-8'))
}
