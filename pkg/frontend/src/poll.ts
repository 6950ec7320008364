// Status polling at a fixed interval until a terminal state.

import type { ApiClient } from "./api";
import type { ExperimentStatus } from "./types";

const TERMINAL = new Set(["done", "failed", "cancelled"]);

export interface PollHandle {
  promise: Promise<ExperimentStatus>;
  stop: () => void;
}

export function pollStatus(
  client: ApiClient,
  id: string,
  onUpdate: (status: ExperimentStatus) => void,
  intervalMs = 1000,
  setTimer: (fn: () => void, ms: number) => unknown = setTimeout,
  clearTimer: (handle: unknown) => void = (h) => clearTimeout(h as number),
): PollHandle {
  let stopped = false;
  let timer: unknown = null;

  const promise = new Promise<ExperimentStatus>((resolve, reject) => {
    const tick = async () => {
      if (stopped) return;
      try {
        const status = await client.status(id);
        onUpdate(status);
        if (TERMINAL.has(status.state)) {
          resolve(status);
          return;
        }
      } catch (err) {
        reject(err);
        return;
      }
      timer = setTimer(tick, intervalMs);
    };
    void tick();
  });

  return {
    promise,
    stop: () => {
      stopped = true;
      if (timer !== null) clearTimer(timer);
    },
  };
}
