/**
 * Image decoding and region preprocessing.
 *
 * Crops are squash-resized (bilinear, aspect ratio not preserved) to
 * the backbone's canonical input size, scaled to [0, 1] and normalized
 * with the ImageNet channel statistics.
 */

import * as tf from '@tensorflow/tfjs'
import { readFileSync } from 'fs'
import { PNG } from 'pngjs'
import * as jpeg from 'jpeg-js'
import { Box } from './regions'

export const IMAGENET_MEAN = [0.485, 0.456, 0.406]
export const IMAGENET_STD = [0.229, 0.224, 0.225]

export class ImageError extends Error {}

export interface DecodedImage {
  width: number
  height: number
  /** RGB, row-major, 3 bytes per pixel */
  data: Uint8Array
}

export function decodeImage(path: string): DecodedImage {
  let buf: Buffer
  try {
    buf = readFileSync(path)
  } catch (e) {
    throw new ImageError(`cannot read ${path}: ${(e as Error).message}`)
  }
  if (buf.length >= 8 && buf.readUInt32BE(0) === 0x89504e47) {
    const png = PNG.sync.read(buf)
    return { width: png.width, height: png.height, data: dropAlpha(png.data, png.width * png.height) }
  }
  if (buf.length >= 2 && buf[0] === 0xff && buf[1] === 0xd8) {
    const img = jpeg.decode(buf, { useTArray: true })
    return { width: img.width, height: img.height, data: dropAlpha(img.data, img.width * img.height) }
  }
  throw new ImageError(`${path}: not a PNG or JPEG file`)
}

function dropAlpha(rgba: Uint8Array | Buffer, pixels: number): Uint8Array {
  const rgb = new Uint8Array(pixels * 3)
  for (let p = 0; p < pixels; p++) {
    rgb[p * 3] = rgba[p * 4]
    rgb[p * 3 + 1] = rgba[p * 4 + 1]
    rgb[p * 3 + 2] = rgba[p * 4 + 2]
  }
  return rgb
}

export function cropBox(image: DecodedImage, box: Box | null): DecodedImage {
  if (box === null) {
    return image
  }
  const x = Math.floor(box.x)
  const y = Math.floor(box.y)
  const w = Math.round(box.w)
  const h = Math.round(box.h)
  if (x + w > image.width || y + h > image.height) {
    throw new ImageError(
      `box (${box.x},${box.y},${box.w},${box.h}) exceeds ` +
        `${image.width}x${image.height} image bounds`,
    )
  }
  const data = new Uint8Array(w * h * 3)
  for (let row = 0; row < h; row++) {
    const src = ((y + row) * image.width + x) * 3
    data.set(image.data.subarray(src, src + w * 3), row * w * 3)
  }
  return { width: w, height: h, data }
}

/** Crop, squash-resize and normalize one region to [size, size, 3]. */
export function preprocessRegion(
  image: DecodedImage,
  box: Box | null,
  size: number,
): tf.Tensor3D {
  const crop = cropBox(image, box)
  return tf.tidy(() => {
    const pixels = tf.tensor3d(crop.data, [crop.height, crop.width, 3], 'int32')
    const resized = tf.image.resizeBilinear(pixels, [size, size], false)
    const scaled = resized.div<tf.Tensor3D>(255)
    return scaled.sub(IMAGENET_MEAN).div<tf.Tensor3D>(IMAGENET_STD)
  })
}
