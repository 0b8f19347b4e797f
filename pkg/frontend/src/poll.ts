// The service is poll-only; one second between probes everywhere.

export const POLL_INTERVAL_MS = 1000;

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

// Repeats `probe` until `done` accepts its value or the deadline passes.
export async function pollUntil<T>(
  probe: () => Promise<T>,
  done: (value: T) => boolean,
  intervalMs: number = POLL_INTERVAL_MS,
  timeoutMs: number = 120_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = await probe();
    if (done(value)) return value;
    if (Date.now() >= deadline) {
      throw new Error("polling timed out");
    }
    await sleep(intervalMs);
  }
}
