#!/usr/bin/env node
/**
 * fds-extract: images + region boxes -> fdsf v1 feature file.
 *
 *   fds-extract --regions regions.tsv --images DIR --out features.fdsf \
 *       --model MODEL [--batch 64] [--allow-missing]
 *
 * MODEL is a tfjs graph-model URL or local model.json path, or
 * `stub:<seed>` for the deterministic test backbone.
 */

import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'
import { Backbone, loadGraphBackbone, stubBackbone } from './backbone'
import { writeFeatures } from './fdsf'
import { extract } from './extract'
import { loadRegions } from './regions'

async function resolveBackbone(model: string): Promise<Backbone> {
  if (model.startsWith('stub:')) {
    return stubBackbone(Number(model.slice(5) || '0'))
  }
  return loadGraphBackbone(model)
}

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option('regions', { type: 'string', demandOption: true, describe: 'Region TSV file' })
    .option('images', { type: 'string', demandOption: true, describe: 'Image directory' })
    .option('out', { type: 'string', demandOption: true, describe: 'Output fdsf path' })
    .option('model', { type: 'string', demandOption: true, describe: 'Backbone model URL/path or stub:<seed>' })
    .option('batch', { type: 'number', default: 64 })
    .option('allow-missing', { type: 'boolean', default: false })
    .strict()
    .parse()

  const regions = loadRegions(argv.regions)
  const backbone = await resolveBackbone(argv.model)
  try {
    const features = await extract({
      regions,
      imageDir: argv.images,
      backbone,
      batchSize: argv.batch,
      allowMissing: argv['allow-missing'],
    })
    writeFeatures(argv.out, features)
    console.log(
      JSON.stringify({ out: argv.out, count: features.count, dim: features.dim }),
    )
  } finally {
    backbone.dispose()
  }
}

main().catch(e => {
  console.error(JSON.stringify({ error: (e as Error).message }))
  process.exit(1)
})
