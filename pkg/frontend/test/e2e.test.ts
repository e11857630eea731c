// @vitest-environment jsdom
/** Scripted end-to-end session against the real campaign server.
 *
 * Spawns the Python service on a throwaway campaign (3 trials, 3 systems),
 * drives the actual DOM app through every trial, and checks the gating,
 * the progress/completion screens, and the resulting rating log.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/ui.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const SENTENCES = ["fraza unu", "fraza doi", "fraza trei"];
const SYSTEMS = ["adapter-tts", "baseline-ro", "unadapted-base"];

let server: ChildProcess;
let logPath: string;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(check: () => boolean, what: string, timeoutMs = 5000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) {
      return;
    }
    await sleep(25);
  }
  throw new Error(`timed out waiting for ${what}`);
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "rating-ui-e2e-"));
  logPath = join(dir, "ratings.jsonl");
  const systems = SYSTEMS.map((name, i) => {
    const files: Record<string, string> = {};
    SENTENCES.forEach((sentence, j) => {
      const p = join(dir, `sys${i}_${j}.wav`);
      writeFileSync(p, Buffer.from([0x52, 0x49, 0x46, 0x46, i, j]));
      files[sentence] = p;
    });
    return { name, role: i === 2 ? "low_anchor" : "candidate", files };
  });
  const manifestPath = join(dir, "campaign.json");
  writeFileSync(
    manifestPath,
    JSON.stringify({
      id: "e2e",
      task: "naturalness",
      sentences: SENTENCES,
      systems,
      seed: 21,
    }),
  );

  server = spawn(
    "python3",
    [
      "-m",
      "adaptts.cli",
      "campaign",
      "serve",
      "--manifest",
      manifestPath,
      "--log",
      logPath,
      "--port",
      String(PORT),
    ],
    { stdio: "ignore" },
  );

  const deadline = Date.now() + 20000;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/campaigns/e2e/report.csv`);
      if (res.ok) {
        break;
      }
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) {
      throw new Error("campaign server did not come up");
    }
    await sleep(100);
  }
}, 30000);

afterAll(() => {
  server?.kill();
});

function queryAll(selector: string): HTMLElement[] {
  return Array.from(document.querySelectorAll<HTMLElement>(selector));
}

function submitButton(): HTMLButtonElement {
  return document.querySelector("#submit-btn") as HTMLButtonElement;
}

describe("scripted listening session", () => {
  it("completes a 3-trial campaign with gated submits", async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById("app") as HTMLElement;
    const app = new App(root, new ApiClient(BASE, "e2e"));

    app.renderRegister("probe");
    (document.getElementById("handle-input") as HTMLInputElement).value = "probe";
    (document.getElementById("register-form") as HTMLFormElement).dispatchEvent(
      new window.Event("submit", { bubbles: true, cancelable: true }),
    );
    await waitFor(() => document.getElementById("trial") !== null, "first trial");

    const progressSeen: string[] = [];
    for (let round = 0; round < SENTENCES.length; round++) {
      progressSeen.push(document.getElementById("progress")!.textContent ?? "");
      const cards = queryAll(".stimulus");
      expect(cards).toHaveLength(SYSTEMS.length);

      // Blinding: nothing in the document names a system.
      const html = document.body.innerHTML;
      for (const name of SYSTEMS) {
        expect(html).not.toContain(name);
      }

      // Gate: untouched and unplayed -> disabled submit.
      expect(submitButton().disabled).toBe(true);

      // Play everything; still blocked until every slider is touched.
      for (const card of cards) {
        (card.querySelector(".play-btn") as HTMLButtonElement).click();
      }
      expect(submitButton().disabled).toBe(true);

      cards.forEach((card, i) => {
        const slider = card.querySelector(".score-slider") as HTMLInputElement;
        slider.value = String(40 + 10 * i);
        slider.dispatchEvent(new window.Event("input", { bubbles: true }));
      });
      expect(submitButton().disabled).toBe(false);

      const before = document.getElementById("progress")!.textContent;
      submitButton().click();
      await waitFor(
        () =>
          document.getElementById("done") !== null ||
          document.getElementById("progress")?.textContent !== before,
        `advance past ${before}`,
      );
    }

    expect(progressSeen).toEqual(["Trial 1 / 3", "Trial 2 / 3", "Trial 3 / 3"]);
    await waitFor(() => document.getElementById("done") !== null, "completion screen");
    expect(document.getElementById("done")!.textContent).toContain("All trials completed");
    expect(document.getElementById("done")!.textContent).toContain("3");

    // The server log holds exactly trials x stimuli rating records.
    const ratingLines = readFileSync(logPath, "utf-8")
      .split("\n")
      .filter((line: string) => line.trim())
      .map((line: string) => JSON.parse(line) as { type: string; score: number })
      .filter((rec) => rec.type === "rating");
    expect(ratingLines).toHaveLength(SENTENCES.length * SYSTEMS.length);
    for (const rec of ratingLines) {
      expect(rec.score).toBeGreaterThanOrEqual(0);
      expect(rec.score).toBeLessThanOrEqual(100);
    }
  }, 30000);

  it("re-serves the same stimulus order to the same listener", async () => {
    const api = new ApiClient(BASE, "e2e");
    const listener = await api.register("refresher");
    const first = await api.nextTrial(listener);
    const second = await api.nextTrial(listener);
    expect(first.stimuli?.map((s) => s.key)).toEqual(second.stimuli?.map((s) => s.key));
  });
});
