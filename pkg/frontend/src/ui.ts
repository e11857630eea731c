/** DOM view: register screen, trial screen with gated submit, completion.
 *
 * The client only ever sees opaque stimulus keys and /audio URLs; labels
 * are ordinals. Entered scores survive a failed submission: the retry
 * button resends the same trial state.
 */

import { ApiClient, SubmitRejected, type TrialPayload } from "./api.js";
import { SLIDER_DEFAULT, SLIDER_MAX, SLIDER_MIN, TrialState } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export class App {
  private listener: string | null = null;
  private trial: TrialState | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {}

  renderRegister(defaultHandle = ""): void {
    this.root.replaceChildren();
    const form = el("form", { id: "register-form" });
    form.append(el("h1", {}, "Listening test"));
    form.append(
      el(
        "p",
        { class: "intro" },
        "You will rate short audio samples, one trial at a time. Play every sample, set every slider, then submit.",
      ),
    );
    const handle = el("input", {
      id: "handle-input",
      placeholder: "your name or nickname",
      value: defaultHandle,
    });
    const start = el("button", { id: "start-btn", type: "submit" }, "Start");
    form.append(handle, start);
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const value = handle.value.trim();
      if (value) {
        void this.start(value);
      }
    });
    this.root.append(form);
  }

  async start(handle: string): Promise<void> {
    try {
      this.listener = await this.api.register(handle);
    } catch (err) {
      this.renderFatal(`Could not register: ${(err as Error).message}`);
      return;
    }
    await this.advance();
  }

  /** Fetch the next trial (or completion) and render it. */
  async advance(): Promise<void> {
    if (this.listener === null) {
      return;
    }
    let payload: TrialPayload;
    try {
      payload = await this.api.nextTrial(this.listener);
    } catch (err) {
      this.renderFatal(`Could not load the next trial: ${(err as Error).message}`);
      return;
    }
    if (payload.done) {
      this.renderDone(payload);
    } else {
      this.renderTrial(payload);
    }
  }

  private audioCard(url: string, onPlay: () => void): HTMLElement {
    const wrap = el("div", { class: "player" });
    const audio = el("audio", { src: url, preload: "none" });
    audio.addEventListener("play", onPlay);
    const btn = el("button", { class: "play-btn", type: "button" }, "Play");
    btn.addEventListener("click", () => {
      // jsdom and some browsers return undefined / reject without a user
      // gesture; the explicit button click is the gesture we gate on.
      try {
        void audio.play()?.catch?.(() => undefined);
      } catch {
        /* playback backends without media support */
      }
      onPlay();
    });
    wrap.append(btn, audio);
    return wrap;
  }

  renderTrial(payload: TrialPayload): void {
    const trial = new TrialState(payload.stimuli ?? []);
    this.trial = trial;
    this.root.replaceChildren();

    const container = el("div", { id: "trial" });
    const progress = payload.progress ?? { completed: 0, total: 1 };
    container.append(
      el(
        "div",
        { id: "progress" },
        `Trial ${progress.completed + 1} / ${progress.total}`,
      ),
    );
    container.append(el("p", { id: "prompt" }, payload.prompt ?? ""));
    container.append(el("p", { id: "sentence" }, payload.sentence ?? ""));

    if (payload.reference_url) {
      const ref = el("section", { id: "reference" });
      ref.append(el("h2", {}, "Reference speaker"));
      ref.append(this.audioCard(payload.reference_url, () => undefined));
      container.append(ref);
    }

    const list = el("div", { id: "stimuli" });
    const submit = el("button", { id: "submit-btn", type: "button" }, "Submit ratings");
    const hint = el("div", { id: "gate-hint" });
    const errorBox = el("div", { id: "error-banner", hidden: "" });

    const refreshGate = () => {
      if (trial.canSubmit) {
        submit.removeAttribute("disabled");
        hint.textContent = "";
      } else {
        submit.setAttribute("disabled", "");
        hint.textContent = trial.blockers().join("; ");
      }
    };

    for (const stimulus of trial.stimuli) {
      const card = el("div", { class: "stimulus", "data-key": stimulus.key });
      card.append(el("h2", {}, stimulus.label));
      card.append(
        this.audioCard(stimulus.url, () => {
          trial.markPlayed(stimulus.key);
          card.classList.add("played");
          refreshGate();
        }),
      );

      const sliderRow = el("div", { class: "slider-row" });
      sliderRow.append(el("span", { class: "endpoint" }, "Bad"));
      const slider = el("input", {
        type: "range",
        class: "score-slider",
        min: String(SLIDER_MIN),
        max: String(SLIDER_MAX),
        step: "1",
        value: String(SLIDER_DEFAULT),
      });
      const value = el("span", { class: "score-value" }, String(SLIDER_DEFAULT));
      slider.addEventListener("input", () => {
        trial.setScore(stimulus.key, Number(slider.value));
        value.textContent = slider.value;
        card.classList.add("touched");
        refreshGate();
      });
      sliderRow.append(slider, el("span", { class: "endpoint" }, "Excellent"), value);
      card.append(sliderRow);

      const confirm = el(
        "button",
        { class: "confirm-btn", type: "button" },
        `Keep ${SLIDER_DEFAULT}`,
      );
      confirm.addEventListener("click", () => {
        trial.confirmScore(stimulus.key);
        card.classList.add("touched");
        refreshGate();
      });
      card.append(confirm);
      list.append(card);
    }

    submit.addEventListener("click", () => void this.submitCurrent(payload, errorBox));
    container.append(list, hint, errorBox, submit);
    this.root.append(container);
    refreshGate();
  }

  private async submitCurrent(payload: TrialPayload, errorBox: HTMLElement): Promise<void> {
    if (!this.trial || !this.listener || !payload.trial_id || !this.trial.canSubmit) {
      return;
    }
    errorBox.setAttribute("hidden", "");
    errorBox.replaceChildren();
    try {
      await this.api.submit(this.listener, payload.trial_id, this.trial.scores());
    } catch (err) {
      errorBox.removeAttribute("hidden");
      if (err instanceof SubmitRejected) {
        errorBox.append(el("p", { class: "field-error" }, `Rejected: ${err.detail}`));
      } else {
        // Network trouble: keep every entered score and offer a retry.
        errorBox.append(el("p", {}, "Could not reach the server. Your ratings are kept."));
        const retry = el("button", { id: "retry-btn", type: "button" }, "Retry");
        retry.addEventListener("click", () => void this.submitCurrent(payload, errorBox));
        errorBox.append(retry);
      }
      return;
    }
    await this.advance();
  }

  renderDone(payload: TrialPayload): void {
    this.root.replaceChildren();
    const done = el("div", { id: "done" });
    done.append(el("h1", {}, "All trials completed"));
    done.append(
      el(
        "p",
        {},
        `Thank you! You rated ${payload.completed ?? "all"} of ${payload.total ?? ""} trials.`,
      ),
    );
    this.root.append(done);
  }

  renderFatal(message: string): void {
    this.root.replaceChildren();
    const box = el("div", { id: "fatal" });
    box.append(el("p", {}, message));
    const retry = el("button", { id: "retry-btn", type: "button" }, "Retry");
    retry.addEventListener("click", () => {
      this.listener === null ? this.renderRegister() : void this.advance();
    });
    box.append(retry);
    this.root.append(box);
  }
}
