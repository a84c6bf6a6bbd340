import type {
  ImportanceResponse,
  MetaResponse,
  RankRecord,
  RankResponse,
  ScenarioPayload,
  ScenarioResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly fields: string[] = [],
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

async function throwServiceError(response: Response): Promise<never> {
  let message = `service returned ${response.status}`;
  let fields: string[] = [];
  try {
    const body = await response.json();
    if (typeof body.error === "string") message = body.error;
    if (Array.isArray(body.fields)) {
      fields = body.fields.map(String);
      message = `${message}: ${fields.join(", ")}`;
    }
  } catch {
    // non-JSON error body; keep the status message
  }
  throw new ServiceError(message, response.status, fields);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await throwServiceError(response);
    return response.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await throwServiceError(response);
    return response.json() as Promise<T>;
  }

  health(): Promise<{ status: string }> {
    return this.get("/v1/health");
  }

  meta(): Promise<MetaResponse> {
    return this.get("/v1/model/meta");
  }

  importance(): Promise<ImportanceResponse> {
    return this.get("/v1/importance");
  }

  scenario(payload: ScenarioPayload): Promise<ScenarioResponse> {
    return this.post("/v1/scenario", payload);
  }

  rank(records: RankRecord[]): Promise<RankResponse> {
    return this.post("/v1/rank", { records });
  }
}
