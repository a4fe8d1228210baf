import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { InteractionEventDto } from "../src/api.js";
import { ServiceClient } from "../src/api.js";
import type { StorageLike } from "../src/recorder.js";
import { EventRecorder, USER_KEY } from "../src/recorder.js";

interface Capture {
  client: ServiceClient;
  batches: InteractionEventDto[][];
  failNext: { value: boolean };
}

function captureClient(): Capture {
  const batches: InteractionEventDto[][] = [];
  const failNext = { value: false };
  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    if (failNext.value) {
      failNext.value = false;
      return new Response(JSON.stringify({ detail: "boom" }), {
        status: 500,
        headers: { "content-type": "application/json" },
      });
    }
    expect(input).toContain("/interactions");
    const events = JSON.parse(String(init?.body)) as InteractionEventDto[];
    batches.push(events);
    return new Response(JSON.stringify({ accepted: events.length }), {
      status: 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { client: new ServiceClient("http://service.test", fetchFn), batches, failNext };
}

function memStorage(): StorageLike {
  const data = new Map<string, string>();
  return {
    getItem: (k) => data.get(k) ?? null,
    setItem: (k, v) => void data.set(k, v),
  };
}

/** Assert an event is exactly what the service schema accepts. */
function assertSchemaValid(ev: InteractionEventDto): void {
  expect(typeof ev.user).toBe("string");
  expect(ev.user.length).toBeGreaterThan(0);
  expect(typeof ev.red_dot_id).toBe("string");
  expect(ev.red_dot_id.length).toBeGreaterThan(0);
  expect(["play", "pause", "seek"]).toContain(ev.kind);
  expect(ev.at_s).toBeGreaterThanOrEqual(0);
  expect(Number.isInteger(ev.wall_time)).toBe(true);
  expect(ev.wall_time).toBeGreaterThanOrEqual(0);
  if (ev.kind === "seek") {
    expect(ev.to_s).toBeGreaterThanOrEqual(0);
  } else {
    expect(ev).not.toHaveProperty("to_s");
  }
}

describe("EventRecorder", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("persists one anonymous user id across recorder instances", () => {
    const { client } = captureClient();
    const storage = memStorage();
    const a = new EventRecorder(client, "vid", { storage });
    const b = new EventRecorder(client, "vid", { storage });
    expect(a.user).toBe(b.user);
    expect(a.user.length).toBeGreaterThan(0);
    expect(storage.getItem(USER_KEY)).toBe(a.user);
  });

  it("assigns strictly increasing integer wall times even with a frozen clock", async () => {
    const { client, batches } = captureClient();
    const rec = new EventRecorder(client, "vid", {
      storage: memStorage(),
      now: () => 1_000_000, // frozen
    });
    rec.recordPlay("rd-1", 10);
    rec.recordPause("rd-1", 12);
    rec.recordPlay("rd-1", 13);
    await rec.flush();
    const walls = batches[0]!.map((e) => e.wall_time);
    expect(walls).toEqual([1_000_000, 1_000_001, 1_000_002]);
    for (const ev of batches[0]!) {
      assertSchemaValid(ev);
    }
  });

  it("debounces a run of seeks into one event keeping origin and first wall time", async () => {
    const { client, batches } = captureClient();
    let t = 5_000;
    const rec = new EventRecorder(client, "vid", {
      storage: memStorage(),
      now: () => t,
      seekDebounceMs: 300,
    });
    rec.recordSeek("rd-1", 40, 60);
    t += 100;
    vi.advanceTimersByTime(100);
    rec.recordSeek("rd-1", 60, 90);
    t += 100;
    vi.advanceTimersByTime(100);
    rec.recordSeek("rd-1", 90, 110);
    t += 400;
    vi.advanceTimersByTime(400); // debounce expires
    await rec.flush();
    expect(batches[0]).toHaveLength(1);
    const seek = batches[0]![0]!;
    expect(seek.kind).toBe("seek");
    expect(seek.at_s).toBe(40); // origin of the first hop
    expect(seek.to_s).toBe(110); // target of the last hop
    expect(seek.wall_time).toBe(5_000); // stamped at first sight
    assertSchemaValid(seek);
  });

  it("commits a pending seek before a play so order survives the debounce", async () => {
    const { client, batches } = captureClient();
    let t = 9_000;
    const rec = new EventRecorder(client, "vid", {
      storage: memStorage(),
      now: () => t,
      seekDebounceMs: 300,
    });
    rec.recordSeek("rd-1", 0, 120);
    t += 50;
    rec.recordPlay("rd-1", 120); // arrives inside the debounce window
    await rec.flush();
    const kinds = batches[0]!.map((e) => e.kind);
    expect(kinds).toEqual(["seek", "play"]);
    const [seek, play] = batches[0]!;
    expect(seek!.wall_time).toBeLessThan(play!.wall_time);
  });

  it("auto-flushes when the queue reaches batchSize", async () => {
    const { client, batches } = captureClient();
    const rec = new EventRecorder(client, "vid", {
      storage: memStorage(),
      batchSize: 3,
      now: () => 42,
    });
    rec.recordPlay("rd-1", 1);
    rec.recordPause("rd-1", 2);
    expect(batches).toHaveLength(0);
    rec.recordPlay("rd-1", 3);
    await vi.waitFor(() => expect(batches).toHaveLength(1));
    expect(batches[0]).toHaveLength(3);
    expect(rec.queuedCount).toBe(0);
  });

  it("flushes on the background interval", async () => {
    const { client, batches } = captureClient();
    const rec = new EventRecorder(client, "vid", {
      storage: memStorage(),
      flushIntervalMs: 1000,
      now: () => 7,
    });
    rec.start();
    rec.recordPlay("rd-1", 5);
    expect(batches).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(1100);
    expect(batches).toHaveLength(1);
    rec.stop();
  });

  it("requeues the batch when delivery fails and resends it next flush", async () => {
    const { client, batches, failNext } = captureClient();
    const rec = new EventRecorder(client, "vid", {
      storage: memStorage(),
      now: () => 77,
    });
    rec.recordPlay("rd-1", 5);
    rec.recordPause("rd-1", 9);
    failNext.value = true;
    await expect(rec.flush()).rejects.toThrow();
    expect(batches).toHaveLength(0);
    expect(rec.queuedCount).toBe(2);
    const accepted = await rec.flush();
    expect(accepted).toBe(2);
    expect(batches).toHaveLength(1);
    expect(batches[0]!.map((e) => e.kind)).toEqual(["play", "pause"]);
  });

  it("clamps negative positions to zero and keeps to_s only on seeks", async () => {
    const { client, batches } = captureClient();
    const rec = new EventRecorder(client, "vid", {
      storage: memStorage(),
      now: () => 1,
      seekDebounceMs: 0,
    });
    rec.recordSeek("rd-1", -3, -1);
    rec.commitPendingSeek();
    rec.recordPlay("rd-1", -0.5);
    await rec.flush();
    const [seek, play] = batches[0]!;
    expect(seek!.at_s).toBe(0);
    expect(seek!.to_s).toBe(0);
    expect(play!.at_s).toBe(0);
    for (const ev of batches[0]!) {
      assertSchemaValid(ev);
    }
  });
});
