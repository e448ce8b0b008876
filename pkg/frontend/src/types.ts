export type KeyAction = "down" | "up";

export interface KeyEventMsg {
  key: string;
  action: KeyAction;
  t_ms: number;
}

export interface EnrollStartResponse {
  token: string;
  trials_required: number;
}

export interface EnrollTrialResponse {
  received: number;
  required: number;
  holds: number[];
}

export interface EnrollFinishResponse {
  user_id: string;
  templates: number;
}

export interface TrialResult {
  accepted: boolean;
  score: number;
  latency_ms: number;
  genuine_distance?: number;
  imposter_distance?: number | null;
}

export interface AuthResponse {
  user_id: string;
  method: string;
  decision: "accept" | "reject";
  accepted_trials: number;
  total_trials: number;
  score: number;
  latency_ms: number;
  per_trial: TrialResult[];
}

export interface UsersResponse {
  users: { user_id: string; templates: number }[];
}

export interface ConfigResponse {
  password_keys: string[];
}

export interface ErrorBody {
  code: string;
  message: string;
}

/** Shape of /api/report payloads: either a cross-validation report (roc per
 * class) or a template-matching report (cmc + far/frr curves). */
export interface ReportPayload {
  accuracy?: number;
  macro_f1?: number;
  roc?: Record<string, { fpr: number[]; tpr: number[]; auc: number }>;
  cmc?: number[];
  far_frr?: { thresholds: number[]; far: number[]; frr: number[] };
  summary?: Record<string, unknown>;
  [key: string]: unknown;
}
