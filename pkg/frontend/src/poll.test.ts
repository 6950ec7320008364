import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "./api";
import { pollStatus } from "./poll";
import type { ExperimentStatus } from "./types";

function status(state: ExperimentStatus["state"], completed = 0): ExperimentStatus {
  return {
    id: "j1",
    state,
    progress: { completed, total: 4, fraction: completed / 4 },
    submitted_at: 0,
    started_at: null,
    finished_at: null,
    error: state === "failed" ? "boom" : null,
  };
}

function clientReturning(sequence: ExperimentStatus[]): ApiClient {
  let i = 0;
  const fetchImpl = vi.fn(async () => {
    const body = sequence[Math.min(i, sequence.length - 1)];
    i += 1;
    return new Response(JSON.stringify(body), { status: 200 });
  });
  return new ApiClient("", fetchImpl);
}

describe("pollStatus", () => {
  it("polls until done and reports every update", async () => {
    const client = clientReturning([
      status("queued"),
      status("running", 2),
      status("done", 4),
    ]);
    const updates: string[] = [];
    const immediate = (fn: () => void) => {
      fn();
      return 0;
    };
    const handle = pollStatus(client, "j1", (s) => updates.push(s.state), 1000, immediate, () => {});
    const final = await handle.promise;
    expect(final.state).toBe("done");
    expect(updates).toEqual(["queued", "running", "done"]);
  });

  it("resolves on cancelled and failed states too", async () => {
    for (const terminal of ["cancelled", "failed"] as const) {
      const client = clientReturning([status("running"), status(terminal)]);
      const immediate = (fn: () => void) => {
        fn();
        return 0;
      };
      const handle = pollStatus(client, "j1", () => {}, 1000, immediate, () => {});
      const final = await handle.promise;
      expect(final.state).toBe(terminal);
    }
  });

  it("stop() halts the scheduling", async () => {
    const client = clientReturning([status("running")]);
    let scheduled = 0;
    const timers: (() => void)[] = [];
    const handle = pollStatus(
      client,
      "j1",
      () => {},
      1000,
      (fn) => {
        scheduled += 1;
        timers.push(fn);
        return scheduled;
      },
      () => {},
    );
    await Promise.resolve();
    await new Promise((r) => setTimeout(r, 0));
    handle.stop();
    const before = scheduled;
    timers.forEach((fn) => fn());
    await new Promise((r) => setTimeout(r, 0));
    expect(scheduled).toBe(before);
  });
});
