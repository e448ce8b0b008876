import type { KeyEventMsg } from "./types.js";

export type CaptureStatus = "capturing" | "complete" | "retry";

/**
 * Keystroke trial capture for a fixed key sequence.
 *
 * Pure state machine: the DOM layer feeds normalized (key, action,
 * timestamp) triples from keydown/keyup listeners and a monotonic
 * high-resolution clock. Timestamps are stored exactly as fed; nothing is
 * rounded or resampled.
 *
 * Any deviation voids the trial: a key outside the expected sequence,
 * Backspace, or losing window focus clears the buffer (the label of an
 * unexpected key is never stored).
 */
export class CaptureBuffer {
  private expected: string[];
  private buffer: KeyEventMsg[] = [];
  private downsSeen = 0;
  private pairsDone = 0;
  private open = new Set<string>();
  private lastT = -Infinity;
  status: CaptureStatus = "capturing";
  lastError = "";

  constructor(expectedKeys: string[]) {
    this.expected = [...expectedKeys];
  }

  get events(): KeyEventMsg[] {
    return this.buffer.map((e) => ({ ...e }));
  }

  get progress(): number {
    return this.pairsDone;
  }

  get required(): number {
    return this.expected.length;
  }

  get complete(): boolean {
    return this.status === "complete";
  }

  /** Feed one normalized key event; returns the resulting status. */
  feed(key: string, action: "down" | "up", t_ms: number): CaptureStatus {
    if (this.status === "complete") return this.status;
    if (key === "Backspace") {
      return this.void_("trial cleared: backspace pressed");
    }
    if (t_ms < this.lastT) {
      return this.void_("trial cleared: non-monotonic timestamps");
    }
    if (action === "down") {
      if (this.downsSeen >= this.expected.length || key !== this.expected[this.downsSeen]) {
        return this.void_("trial cleared: key sequence mismatch");
      }
      if (this.open.has(key)) {
        return this.void_("trial cleared: key already held");
      }
      this.downsSeen += 1;
      this.open.add(key);
    } else {
      if (!this.open.has(key)) {
        // releasing a key we never tracked (e.g. held before capture began)
        return this.status;
      }
      this.open.delete(key);
      this.pairsDone += 1;
    }
    this.lastT = t_ms;
    this.buffer.push({ key, action, t_ms });
    if (this.pairsDone === this.expected.length && this.open.size === 0) {
      this.status = "complete";
    } else {
      this.status = "capturing";
    }
    return this.status;
  }

  /** Window blur mid-trial invalidates the capture. */
  blur(): void {
    if (this.buffer.length > 0 && this.status !== "complete") {
      this.void_("trial cleared: window lost focus");
    }
  }

  reset(): void {
    this.buffer = [];
    this.downsSeen = 0;
    this.pairsDone = 0;
    this.open.clear();
    this.lastT = -Infinity;
    this.status = "capturing";
    this.lastError = "";
  }

  private void_(reason: string): CaptureStatus {
    this.reset();
    this.status = "retry";
    this.lastError = reason;
    return this.status;
  }
}

/** Map a DOM KeyboardEvent.key to the password key labels. */
export function normalizeKey(domKey: string): string {
  if (domKey === "CapsLock") return "caps";
  if (domKey.length === 1) return domKey.toLowerCase();
  return domKey;
}
