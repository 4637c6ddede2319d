/**
 * The extraction pipeline: regions + images -> fdsf v1 feature file.
 */

import * as tf from '@tensorflow/tfjs'
import { existsSync } from 'fs'
import { join } from 'path'
import { Backbone } from './backbone'
import { FeatureMatrix } from './fdsf'
import { DecodedImage, ImageError, decodeImage, preprocessRegion } from './image'
import { RegionSpec } from './regions'

export interface ExtractOptions {
  regions: RegionSpec[]
  imageDir: string
  backbone: Backbone
  /** regions per forward pass, default 64 */
  batchSize?: number
  /** emit a zero row for unreadable images instead of failing */
  allowMissing?: boolean
  log?: (message: string) => void
}

const IMAGE_EXTENSIONS = ['', '.png', '.jpg', '.jpeg']

function resolveImage(imageDir: string, imageId: string): string | null {
  for (const ext of IMAGE_EXTENSIONS) {
    const candidate = join(imageDir, imageId + ext)
    if (existsSync(candidate)) return candidate
  }
  return null
}

export async function extract(options: ExtractOptions): Promise<FeatureMatrix> {
  const { regions, imageDir, backbone } = options
  const batchSize = options.batchSize ?? 64
  const allowMissing = options.allowMissing ?? false
  const log = options.log ?? ((m: string) => console.error(m))

  const count = regions.length
  const dim = backbone.featureDim
  const rows = new Float32Array(count * dim)

  // Group by image so each file is decoded once, then emit by row_id.
  const byImage = new Map<string, RegionSpec[]>()
  for (const region of regions) {
    const group = byImage.get(region.imageId)
    if (group) group.push(region)
    else byImage.set(region.imageId, [region])
  }

  const pending: { region: RegionSpec; input: tf.Tensor3D }[] = []

  const flush = () => {
    if (pending.length === 0) return
    const batch = tf.stack(pending.map(p => p.input)) as tf.Tensor4D
    const features = backbone.run(batch)
    const values = features.dataSync() as Float32Array
    pending.forEach((p, i) => {
      rows.set(values.subarray(i * dim, (i + 1) * dim), p.region.rowId * dim)
      p.input.dispose()
    })
    batch.dispose()
    features.dispose()
    pending.length = 0
  }

  for (const [imageId, group] of byImage) {
    const path = resolveImage(imageDir, imageId)
    let image: DecodedImage | null = null
    let failure: string | null = null
    if (path === null) {
      failure = `image ${imageId} not found under ${imageDir}`
    } else {
      try {
        image = decodeImage(path)
      } catch (e) {
        failure = (e as Error).message
      }
    }
    if (image === null) {
      if (!allowMissing) {
        throw new ImageError(failure!)
      }
      log(`skipping ${group.length} region(s): ${failure}`)
      continue // rows stay zero
    }
    for (const region of group) {
      pending.push({
        region,
        input: preprocessRegion(image, region.box, backbone.inputSize),
      })
      if (pending.length >= batchSize) flush()
    }
  }
  flush()

  return { count, dim, rows }
}
