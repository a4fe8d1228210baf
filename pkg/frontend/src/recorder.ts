/**
 * Batching recorder for viewer interaction events.
 *
 * The recorder owns three responsibilities the player shouldn't care about:
 *  - assigning each event a strictly increasing integer wall clock, so the
 *    service's per-user ordering (and its dedup key) is stable even when two
 *    events land inside the same millisecond;
 *  - debouncing seeks, so a drag across the timeline becomes one seek from
 *    the drag origin to the final resting point rather than a burst of
 *    intermediate hops;
 *  - batching and retrying delivery. Failed batches are requeued in front,
 *    so delivery is at-least-once; the service dedups on
 *    (user, wall_time, kind), which makes the retry safe.
 */

import type { EventKind, InteractionEventDto, ServiceClient } from "./api.js";

export const USER_KEY = "vodmarks.user";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export interface RecorderOptions {
  /** Queue length that triggers an immediate flush. */
  batchSize?: number;
  /** Period of the background flush timer started by start(). */
  flushIntervalMs?: number;
  /** Quiet time after which a pending seek is committed. */
  seekDebounceMs?: number;
  /** Millisecond clock, injectable for tests. */
  now?: () => number;
  /** Persistent storage for the anonymous user id. */
  storage?: StorageLike;
}

function memoryStorage(): StorageLike {
  const data = new Map<string, string>();
  return {
    getItem: (key) => data.get(key) ?? null,
    setItem: (key, value) => {
      data.set(key, value);
    },
  };
}

function defaultStorage(): StorageLike {
  try {
    const ls = globalThis.localStorage;
    if (ls) {
      return ls;
    }
  } catch {
    // Access to localStorage can throw in privacy modes; fall through.
  }
  return memoryStorage();
}

function freshUserId(): string {
  const cryptoObj = globalThis.crypto;
  if (cryptoObj && typeof cryptoObj.randomUUID === "function") {
    return `viewer-${cryptoObj.randomUUID()}`;
  }
  return `viewer-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}

interface PendingSeek {
  redDotId: string;
  fromS: number;
  toS: number;
  wallTime: number;
  timer: ReturnType<typeof setTimeout> | null;
}

export class EventRecorder {
  readonly user: string;

  private readonly batchSize: number;
  private readonly flushIntervalMs: number;
  private readonly seekDebounceMs: number;
  private readonly now: () => number;

  private queue: InteractionEventDto[] = [];
  private pendingSeek: PendingSeek | null = null;
  private lastWall = 0;
  private intervalTimer: ReturnType<typeof setInterval> | null = null;
  private inflight: Promise<void> | null = null;

  constructor(
    private readonly client: ServiceClient,
    private readonly videoId: string,
    options: RecorderOptions = {},
  ) {
    this.batchSize = options.batchSize ?? 20;
    this.flushIntervalMs = options.flushIntervalMs ?? 5000;
    this.seekDebounceMs = options.seekDebounceMs ?? 300;
    this.now = options.now ?? (() => Date.now());
    const storage = options.storage ?? defaultStorage();
    let user = storage.getItem(USER_KEY);
    if (!user) {
      user = freshUserId();
      storage.setItem(USER_KEY, user);
    }
    this.user = user;
  }

  /** Integer clock that never repeats or goes backwards within a session. */
  private wallTime(): number {
    const t = Math.max(Math.floor(this.now()), this.lastWall + 1);
    this.lastWall = t;
    return t;
  }

  private enqueue(
    kind: EventKind,
    redDotId: string,
    atS: number,
    toS: number | undefined,
    wallTime: number,
  ): void {
    const event: InteractionEventDto = {
      user: this.user,
      red_dot_id: redDotId,
      kind,
      at_s: Math.max(0, atS),
      wall_time: wallTime,
    };
    if (kind === "seek" && toS !== undefined) {
      event.to_s = Math.max(0, toS);
    }
    this.queue.push(event);
    if (this.queue.length >= this.batchSize) {
      void this.flush();
    }
  }

  recordPlay(redDotId: string, atS: number): void {
    this.commitPendingSeek();
    this.enqueue("play", redDotId, atS, undefined, this.wallTime());
  }

  recordPause(redDotId: string, atS: number): void {
    this.commitPendingSeek();
    this.enqueue("pause", redDotId, atS, undefined, this.wallTime());
  }

  /**
   * Record a seek, debounced: successive seeks on the same dot within the
   * debounce window collapse into one event that keeps the original origin
   * and original wall time and takes the latest target. A seek on a
   * different dot commits the pending one immediately.
   */
  recordSeek(redDotId: string, fromS: number, toS: number): void {
    if (this.pendingSeek && this.pendingSeek.redDotId === redDotId) {
      if (this.pendingSeek.timer !== null) {
        clearTimeout(this.pendingSeek.timer);
      }
      this.pendingSeek.toS = toS;
      this.pendingSeek.timer = setTimeout(() => this.commitPendingSeek(), this.seekDebounceMs);
      return;
    }
    this.commitPendingSeek();
    this.pendingSeek = {
      redDotId,
      fromS,
      toS,
      // The wall time is fixed now, at first sight of the gesture, so the
      // committed seek still sorts before any play/pause recorded while the
      // debounce window was open.
      wallTime: this.wallTime(),
      timer: setTimeout(() => this.commitPendingSeek(), this.seekDebounceMs),
    };
  }

  commitPendingSeek(): void {
    const pending = this.pendingSeek;
    if (!pending) {
      return;
    }
    this.pendingSeek = null;
    if (pending.timer !== null) {
      clearTimeout(pending.timer);
    }
    this.enqueue("seek", pending.redDotId, pending.fromS, pending.toS, pending.wallTime);
  }

  get queuedCount(): number {
    return this.queue.length + (this.pendingSeek ? 1 : 0);
  }

  /** Start the periodic background flush. */
  start(): void {
    if (this.intervalTimer === null) {
      this.intervalTimer = setInterval(() => void this.flush(), this.flushIntervalMs);
    }
  }

  /** Stop the periodic background flush (queued events stay queued). */
  stop(): void {
    if (this.intervalTimer !== null) {
      clearInterval(this.intervalTimer);
      this.intervalTimer = null;
    }
  }

  /**
   * Send everything queued so far. On failure the batch is put back at the
   * front of the queue for the next attempt. Returns the number of events
   * the service accepted in this call.
   */
  async flush(): Promise<number> {
    this.commitPendingSeek();
    while (this.inflight) {
      await this.inflight;
    }
    if (this.queue.length === 0) {
      return 0;
    }
    const batch = this.queue.splice(0, this.queue.length);
    let accepted = 0;
    const send = async (): Promise<void> => {
      try {
        accepted = await this.client.postInteractions(this.videoId, batch);
      } catch (err) {
        this.queue.unshift(...batch);
        throw err;
      }
    };
    this.inflight = send().finally(() => {
      this.inflight = null;
    });
    await this.inflight;
    return accepted;
  }
}
