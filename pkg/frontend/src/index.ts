export { FeatureMatrix, FormatError, readFeatures, writeFeatures } from './fdsf'
export { Box, RegionSpec, RegionError, loadRegions, parseRegions } from './regions'
export {
  DecodedImage,
  ImageError,
  IMAGENET_MEAN,
  IMAGENET_STD,
  cropBox,
  decodeImage,
  preprocessRegion,
} from './image'
export {
  Backbone,
  FEATURE_DIM,
  INPUT_SIZE,
  loadGraphBackbone,
  stubBackbone,
} from './backbone'
export { ExtractOptions, extract } from './extract'
