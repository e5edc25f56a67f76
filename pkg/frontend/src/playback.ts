// Replay: turn an execution trace into an animation script (mirroring the
// server's trace-to-script rule), compile it server-side, and schedule the
// timeline against a clock. Speed changes re-request a compiled timeline
// with an adjusted leading setSpeed step.

import type { KernelClient } from "./api.js";
import type { ExecutionTrace, ScriptStep, Timeline } from "./model.js";

export function traceToScript(trace: ExecutionTrace, perFiringMs: number): ScriptStep[] {
  if (trace.events.length === 0) throw new Error("trace has no events");
  const steps: ScriptStep[] = [];
  for (const event of trace.events) {
    for (const port of Object.keys(event.consumedVia).sort()) {
      steps.push({ kind: "traverse", linkId: event.consumedVia[port], durationMs: perFiringMs });
    }
    steps.push({ kind: "highlight", nodeId: event.nodeId, durationMs: perFiringMs });
  }
  return steps;
}

export function withSpeed(steps: ScriptStep[], factor: number): ScriptStep[] {
  if (factor === 1) return steps;
  return [{ kind: "setSpeed", factor }, ...steps];
}

export interface PlaybackEvent {
  atMs: number;
  event: Timeline["entries"][number]["event"];
}

export interface Player {
  /** resolves when the timeline has fully played out */
  done: Promise<void>;
  cancel(): void;
}

export type Clock = {
  now(): number;
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
};

export const realClock: Clock = {
  now: () => performance.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (handle) => clearTimeout(handle as Parameters<typeof clearTimeout>[0]),
};

/** Drive a compiled timeline: emit each entry at its absolute time. */
export function play(
  timeline: Timeline,
  onEvent: (entry: PlaybackEvent) => void,
  clock: Clock = realClock,
): Player {
  const started = clock.now();
  const handles: unknown[] = [];
  let cancelled = false;
  let resolveDone: () => void = () => undefined;
  const done = new Promise<void>((resolve) => {
    resolveDone = resolve;
  });
  for (const entry of timeline.entries) {
    handles.push(
      clock.setTimeout(() => {
        if (!cancelled) onEvent({ atMs: entry.atMs, event: entry.event });
      }, entry.atMs),
    );
  }
  handles.push(
    clock.setTimeout(() => {
      if (!cancelled) resolveDone();
    }, timeline.totalMs),
  );
  void started;
  return {
    done,
    cancel() {
      cancelled = true;
      for (const handle of handles) clock.clearTimeout(handle);
      resolveDone();
    },
  };
}

export class ReplayController {
  speed = 1;
  private steps: ScriptStep[] = [];
  private player: Player | null = null;

  constructor(
    readonly client: KernelClient,
    readonly onEvent: (entry: PlaybackEvent) => void,
    readonly clock: Clock = realClock,
  ) {}

  /** Run the workspace's dataflow model, fetch the trace, play it back. */
  async replayRun(uri: string, perFiringMs = 400): Promise<{ runId: string; timeline: Timeline }> {
    const run = await this.client.runDataflow(uri);
    const trace = await this.client.getTrace(run.runId);
    this.steps = traceToScript(trace, perFiringMs);
    const timeline = await this.restart();
    return { runId: run.runId, timeline };
  }

  /** Recompile at the current speed and start playing from the beginning. */
  async restart(): Promise<Timeline> {
    this.stop();
    const timeline = await this.client.compileTimeline(withSpeed(this.steps, this.speed));
    this.player = play(timeline, this.onEvent, this.clock);
    return timeline;
  }

  async setSpeed(factor: number): Promise<Timeline> {
    this.speed = factor;
    return this.restart();
  }

  stop(): void {
    this.player?.cancel();
    this.player = null;
  }

  get finished(): Promise<void> {
    return this.player?.done ?? Promise.resolve();
  }
}
