export {
  ContainerFormatError,
  readContainer,
  writeContainer,
  type ContainerTensor,
  type DtypeTag,
} from './container.js';
export {
  CheckpointFormatError,
  DTYPE_BYTES,
  byteLengthOf,
  elementCount,
  isFloatDtype,
  readCheckpoint,
  resolveModelJson,
  writeCheckpoint,
  type Checkpoint,
  type WeightEntry,
  type WeightSpec,
} from './tfjs.js';
export {
  ManifestError,
  loadManifest,
  saveManifest,
  validateManifest,
  type BridgeManifest,
} from './manifest.js';
export {
  SOURCE_FORMAT,
  fromContainer,
  toContainer,
  type FromContainerResult,
  type ToContainerResult,
} from './convert.js';
