/** Typed client for the campaign HTTP API. */

export interface StimulusRef {
  key: string;
  url: string;
}

export interface Progress {
  completed: number;
  total: number;
}

export interface TrialPayload {
  done: boolean;
  campaign?: string;
  task?: string;
  prompt?: string;
  trial_id?: string;
  sentence?: string;
  progress?: Progress;
  stimuli?: StimulusRef[];
  reference_url?: string | null;
  completed?: number;
  total?: number;
}

/** A submission the server refused (bad score, unknown key, ...). */
export class SubmitRejected extends Error {
  constructor(readonly detail: string) {
    super(detail);
  }
}

export class ApiClient {
  constructor(
    readonly base: string,
    readonly campaignId: string,
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async register(handle: string): Promise<string> {
    const res = await fetch(this.url("/listeners"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ handle }),
    });
    if (!res.ok) {
      throw new Error(`registration failed (${res.status})`);
    }
    const body = (await res.json()) as { listener_id: string };
    return body.listener_id;
  }

  async nextTrial(listener: string): Promise<TrialPayload> {
    const res = await fetch(
      this.url(`/campaigns/${this.campaignId}/next?listener=${encodeURIComponent(listener)}`),
    );
    if (!res.ok) {
      throw new Error(`could not fetch the next trial (${res.status})`);
    }
    return (await res.json()) as TrialPayload;
  }

  async submit(listener: string, trialId: string, scores: Record<string, number>): Promise<void> {
    const res = await fetch(this.url(`/campaigns/${this.campaignId}/ratings`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ listener_id: listener, trial_id: trialId, scores }),
    });
    if (res.status === 400) {
      const body = (await res.json()) as { detail?: string };
      throw new SubmitRejected(body.detail ?? "submission rejected");
    }
    if (!res.ok) {
      throw new Error(`submission failed (${res.status})`);
    }
  }
}
