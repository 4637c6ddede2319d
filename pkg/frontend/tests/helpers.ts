import { PNG } from 'pngjs'
import { writeFileSync } from 'fs'
import { join } from 'path'

/** Write a PNG whose pixel values follow a deterministic pattern. */
export function writeTestPng(
  dir: string,
  name: string,
  width: number,
  height: number,
  pixel: (x: number, y: number) => [number, number, number],
): string {
  const png = new PNG({ width, height })
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = pixel(x, y)
      const i = (y * width + x) * 4
      png.data[i] = r
      png.data[i + 1] = g
      png.data[i + 2] = b
      png.data[i + 3] = 255
    }
  }
  const path = join(dir, name)
  writeFileSync(path, PNG.sync.write(png))
  return path
}

export function gradientPixel(x: number, y: number): [number, number, number] {
  return [(x * 7) % 256, (y * 11) % 256, (x + y) % 256]
}
