/** Per-trial rating state and the submit gate.
 *
 * A stimulus unlocks submission only once it has been played at least
 * once and its slider has been touched (moved or explicitly confirmed).
 * Sliders start at the 50 midpoint but an untouched midpoint never
 * counts as a rating.
 */

import type { StimulusRef } from "./api.js";

export const SLIDER_MIN = 0;
export const SLIDER_MAX = 100;
export const SLIDER_DEFAULT = 50;

export interface StimulusState {
  key: string;
  url: string;
  /** Blinded ordinal label: Sample A, Sample B, ... */
  label: string;
  played: boolean;
  touched: boolean;
  score: number;
}

const LETTERS = "ABCD";

export class TrialState {
  readonly stimuli: StimulusState[];

  constructor(refs: StimulusRef[]) {
    this.stimuli = refs.map((ref, i) => ({
      key: ref.key,
      url: ref.url,
      label: `Sample ${LETTERS[i] ?? String(i + 1)}`,
      played: false,
      touched: false,
      score: SLIDER_DEFAULT,
    }));
  }

  private find(key: string): StimulusState {
    const s = this.stimuli.find((s) => s.key === key);
    if (!s) {
      throw new Error(`unknown stimulus key ${key}`);
    }
    return s;
  }

  markPlayed(key: string): void {
    this.find(key).played = true;
  }

  /** Clamp to integer steps inside [0, 100] and count as touched. */
  setScore(key: string, value: number): void {
    const s = this.find(key);
    s.score = Math.min(SLIDER_MAX, Math.max(SLIDER_MIN, Math.round(value)));
    s.touched = true;
  }

  /** Accept the current position (e.g. keep the 50 midpoint). */
  confirmScore(key: string): void {
    this.find(key).touched = true;
  }

  get canSubmit(): boolean {
    return this.stimuli.every((s) => s.played && s.touched);
  }

  /** What still blocks submission, for the inline hint. */
  blockers(): string[] {
    const out: string[] = [];
    for (const s of this.stimuli) {
      if (!s.played) {
        out.push(`${s.label} has not been played`);
      } else if (!s.touched) {
        out.push(`${s.label} has no rating yet`);
      }
    }
    return out;
  }

  scores(): Record<string, number> {
    const out: Record<string, number> = {};
    for (const s of this.stimuli) {
      out[s.key] = s.score;
    }
    return out;
  }
}
