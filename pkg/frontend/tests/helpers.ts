// Shared test plumbing: fixture loading and a scripted stand-in for the
// service. Component tests never touch the network; every response is a
// recording of what the real service returned (see fixtures/README).

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { FetchLike } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  const raw = readFileSync(join(here, "fixtures", `${name}.json`), "utf8");
  return JSON.parse(raw) as T;
}

export interface ScriptedResponse {
  status?: number;
  body?: unknown;
  // Resolved by the test to release a held response (spinner checks).
  after?: Promise<void>;
}

export interface RecordedCall {
  method: string;
  path: string;
  payload?: unknown;
}

// Routes requests by "METHOD path". Queued responses are consumed in
// order; the last one repeats, which keeps polling and refetch loops
// simple to script.
export class FakeService {
  readonly calls: RecordedCall[] = [];
  private readonly queues = new Map<string, ScriptedResponse[]>();

  on(method: string, path: string, ...responses: ScriptedResponse[]): this {
    const key = `${method} ${path}`;
    const queue = this.queues.get(key) ?? [];
    queue.push(...responses);
    this.queues.set(key, queue);
    return this;
  }

  readonly fetcher: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const payload = init?.body ? (JSON.parse(String(init.body)) as unknown) : undefined;
    this.calls.push({ method, path: input, payload });

    const queue = this.queues.get(`${method} ${input}`);
    if (!queue || queue.length === 0) {
      throw new Error(`unscripted request: ${method} ${input}`);
    }
    const next = queue.length > 1 ? (queue.shift() as ScriptedResponse) : queue[0];
    if (next.after) await next.after;
    return new Response(JSON.stringify(next.body ?? {}), {
      status: next.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
}

export function deferred(): { promise: Promise<void>; release: () => void } {
  let release!: () => void;
  const promise = new Promise<void>((resolve) => {
    release = resolve;
  });
  return { promise, release };
}
