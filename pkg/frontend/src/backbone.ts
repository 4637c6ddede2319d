/**
 * Pluggable CNN backbones.
 *
 * Production use loads a pretrained graph model (ResNet101 exported
 * for tfjs) whose output is the 1000-way final layer. Tests use a
 * deterministic stub with the same contract.
 */

import * as tf from '@tensorflow/tfjs'

export const FEATURE_DIM = 1000
export const INPUT_SIZE = 224

export interface Backbone {
  inputSize: number
  featureDim: number
  /** [batch, size, size, 3] -> [batch, featureDim] */
  run(batch: tf.Tensor4D): tf.Tensor2D
  dispose(): void
}

export async function loadGraphBackbone(urlOrPath: string): Promise<Backbone> {
  const handle =
    urlOrPath.startsWith('http://') || urlOrPath.startsWith('https://')
      ? urlOrPath
      : `file://${urlOrPath}`
  const model = await tf.loadGraphModel(handle)
  return {
    inputSize: INPUT_SIZE,
    featureDim: FEATURE_DIM,
    run(batch) {
      return tf.tidy(() => {
        const out = model.predict(batch) as tf.Tensor
        const flat = out.reshape([batch.shape[0], -1]) as tf.Tensor2D
        if (flat.shape[1] !== FEATURE_DIM) {
          throw new Error(
            `backbone emits ${flat.shape[1]} features, expected ${FEATURE_DIM}`,
          )
        }
        return flat.clone()
      })
    },
    dispose() {
      model.dispose()
    },
  }
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

/**
 * A deterministic test backbone: average-pool each input to a small
 * grid and project it through a fixed seeded random matrix. Shares the
 * real backbone's interface, dimensionality and determinism, with no
 * pretrained weights.
 */
export function stubBackbone(seed = 0): Backbone {
  const grid = 8
  const rand = mulberry32(seed)
  const proj = tf.tensor2d(
    Float32Array.from({ length: grid * grid * 3 * FEATURE_DIM }, () =>
      rand() * 2 - 1,
    ),
    [grid * grid * 3, FEATURE_DIM],
  )
  return {
    inputSize: INPUT_SIZE,
    featureDim: FEATURE_DIM,
    run(batch) {
      return tf.tidy(() => {
        const pooled = tf.avgPool(batch, batch.shape[1] / grid, batch.shape[1] / grid, 'valid')
        const flat = pooled.reshape([batch.shape[0], grid * grid * 3]) as tf.Tensor2D
        return flat.matMul(proj) as tf.Tensor2D
      })
    },
    dispose() {
      proj.dispose()
    },
  }
}
