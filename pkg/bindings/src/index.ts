export { ArrayView, MaskView, Shape3, Units, rawPathFor, readMask, readVolume, writeMask, writeVolume } from "./ctv";
export {
  BindOptions,
  BoundTransform,
  EvaluationResult,
  PhantomOptions,
  TransformName,
  WindowOptions,
  applyWindow,
  bind,
  bindSamples,
  diceScore,
  evaluatePair,
  generatePhantom,
} from "./bind";
export { runCli } from "./cli";
export { CtaugError, ValidationError } from "./errors";
