import type {
  AckResponse,
  ModelCard,
  SessionDetail,
  SessionsResponse,
} from "./types.js";

export class HttpError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "HttpError";
  }
}

async function requestJson<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  if (!res.ok) {
    let detail = `HTTP ${res.status}`;
    try {
      const body = (await res.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new HttpError(res.status, detail);
  }
  return (await res.json()) as T;
}

export interface TriageApi {
  sessions(): Promise<SessionsResponse>;
  sessionDetail(studentId: string): Promise<SessionDetail>;
  setAcknowledged(studentId: string, acknowledged: boolean): Promise<AckResponse>;
  modelCard(): Promise<ModelCard>;
}

export function createApi(baseUrl: string): TriageApi {
  const root = baseUrl.replace(/\/$/, "");
  return {
    sessions: () => requestJson<SessionsResponse>(`${root}/api/sessions`),
    sessionDetail: (studentId) =>
      requestJson<SessionDetail>(
        `${root}/api/sessions/${encodeURIComponent(studentId)}`,
      ),
    setAcknowledged: (studentId, acknowledged) =>
      requestJson<AckResponse>(
        `${root}/api/sessions/${encodeURIComponent(studentId)}/ack`,
        {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ acknowledged }),
        },
      ),
    modelCard: () => requestJson<ModelCard>(`${root}/api/model`),
  };
}
