// Typed client for the pedal service JSON API. Every UI state change goes
// through these calls; the UI itself holds no DSP logic.

export type Engine = "traditional" | "neural";

export interface Params {
  gain: number;
  treble: number;
  level: number;
  engine: Engine;
}

export interface Meta {
  version: string;
  neural_fs: number;
  engines: Engine[];
  gain_grid: number[];
  block_sizes: number[];
}

export interface ResponsePayload {
  engine: Engine;
  treble: number;
  gain: number;
  frequencies: number[];
  magnitudes: number[];
  analog_tone_magnitudes: number[];
}

export interface ProcessTicket {
  job_id: string;
  cached: boolean;
}

/** Server said no: carries the HTTP status and the `detail` body. */
export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

type Fetch = typeof fetch;

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return res.statusText || `HTTP ${res.status}`;
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: Fetch = (...args) => fetch(...args),
  ) {}

  private async checked(res: Response): Promise<Response> {
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return res;
  }

  async getParams(): Promise<Params> {
    const res = await this.fetchFn(`${this.base}/api/params`);
    return (await this.checked(res)).json();
  }

  async postParams(update: Partial<Params>): Promise<Params> {
    const res = await this.fetchFn(`${this.base}/api/params`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(update),
    });
    return (await this.checked(res)).json();
  }

  async process(payload: ArrayBuffer, name: string): Promise<ProcessTicket> {
    const form = new FormData();
    form.append("file", new Blob([payload], { type: "audio/wav" }), name);
    const res = await this.fetchFn(`${this.base}/api/process`, {
      method: "POST",
      body: form,
    });
    return (await this.checked(res)).json();
  }

  async result(jobId: string): Promise<ArrayBuffer> {
    const res = await this.fetchFn(`${this.base}/api/result/${jobId}`);
    return (await this.checked(res)).arrayBuffer();
  }

  async response(
    treble: number,
    engine: Engine,
    points = 60,
  ): Promise<ResponsePayload> {
    const query = `treble=${treble}&engine=${engine}&points=${points}`;
    const res = await this.fetchFn(`${this.base}/api/response?${query}`);
    return (await this.checked(res)).json();
  }

  async meta(): Promise<Meta> {
    const res = await this.fetchFn(`${this.base}/api/meta`);
    return (await this.checked(res)).json();
  }
}
