import type {
  AuthResponse,
  ConfigResponse,
  EnrollFinishResponse,
  EnrollStartResponse,
  EnrollTrialResponse,
  ErrorBody,
  KeyEventMsg,
  ReportPayload,
  UsersResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

/** Thin JSON client for the biokey service; events pass through untouched. */
export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("unreachable", `service unreachable: ${String(err)}`, 0);
    }
    const text = await resp.text();
    let parsed: unknown = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      throw new ApiError("bad_response", `non-JSON response (${resp.status})`, resp.status);
    }
    if (!resp.ok) {
      const e = (parsed ?? {}) as Partial<ErrorBody>;
      throw new ApiError(e.code ?? "error", e.message ?? `HTTP ${resp.status}`, resp.status);
    }
    return parsed as T;
  }

  config(): Promise<ConfigResponse> {
    return this.request("GET", "/api/config");
  }

  enrollStart(userId: string, trials: number): Promise<EnrollStartResponse> {
    return this.request("POST", "/api/enroll/start", { user_id: userId, trials });
  }

  enrollTrial(token: string, events: KeyEventMsg[]): Promise<EnrollTrialResponse> {
    return this.request("POST", "/api/enroll/trial", { token, events });
  }

  enrollFinish(token: string): Promise<EnrollFinishResponse> {
    return this.request("POST", "/api/enroll/finish", { token });
  }

  authenticate(
    userId: string,
    trials: KeyEventMsg[][],
    method: "template" | "classifier",
  ): Promise<AuthResponse> {
    return this.request("POST", "/api/auth", { user_id: userId, trials, method });
  }

  users(): Promise<UsersResponse> {
    return this.request("GET", "/api/users");
  }

  report(): Promise<ReportPayload> {
    return this.request("GET", "/api/report");
  }
}
