export { attackConfig, kernelFor, perturb, runAttacks, SUPPORTED_ATTACKS } from './attacks.js';
export type { AttackConfig, RunOptions } from './attacks.js';
export { generateSmokeDataset, loadDataset, SMOKE_DEFAULTS, SMOKE_LABELS } from './dataset.js';
export type { Dataset, DatasetItem, SkippedItem, SmokeOptions } from './dataset.js';
export { applyTemplate, encodeLabels, getEncoder, listEncoders } from './encoders.js';
export type { EncodeResult, LabelEncoder } from './encoders.js';
export {
  parsePredictions,
  parseTargetTable,
  targetFor,
  writeEmbeddings,
  writePredictions,
} from './formats.js';
export type {
  EmbeddingRow,
  PredictionRecord,
  Provenance,
  TargetRow,
  TargetTable,
} from './formats.js';
export { cosine, dot, l2normalize, norm, templateRank } from './vector.js';
export {
  exportClassTemplates,
  getVisionModel,
  IMAGE_PIXELS,
  IMAGE_SIDE,
  listVisionModels,
  predictClass,
} from './vision.js';
export type { TemplateExport, VisionModel } from './vision.js';
