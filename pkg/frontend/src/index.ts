export {
  ServiceClient,
  ServiceError,
  type EventKind,
  type FetchLike,
  type InteractionEventDto,
  type RedDotDto,
  type RegisterRequest,
  type RegisterResponse,
} from "./api.js";
export { EventRecorder, USER_KEY, type RecorderOptions, type StorageLike } from "./recorder.js";
export { HtmlVideoAdapter, type MediaAdapter, type MediaEvent } from "./media.js";
export { PlayerUI, type PlayerOptions } from "./player.js";
