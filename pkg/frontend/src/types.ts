/** Wire shapes of the risk service, mirrored field for field. */

export interface TopFeature {
  name: string;
  value: number;
}

export interface TriageRow {
  student_id: string;
  score: number;
  rank: number;
  top_features: TopFeature[];
  acknowledged: boolean;
  updated_at: number;
  /** Activity counts over the session span, oldest bucket first. */
  recent_activity: number[];
}

export interface SessionsResponse {
  server_time: number;
  assessments: TriageRow[];
}

export interface FeatureBreakdownEntry {
  name: string;
  value: number;
  unitized: number;
  imputed: boolean;
}

export interface RecentCommand {
  timestamp: string;
  text: string;
  interpreter?: string;
  task: number | string | null;
}

export interface SessionDetail extends TriageRow {
  features: FeatureBreakdownEntry[];
  recent_commands: RecentCommand[];
}

export interface ModelCard {
  kind: string;
  hyperparameters: Record<string, unknown>;
  platform: string;
  threshold: number;
  selected_features: string[];
  metrics: Record<string, number | null> | null;
}

/** The ack endpoint returns the bare assessment, without activity buckets. */
export type AckResponse = Omit<TriageRow, "recent_activity">;

export interface DashboardConfig {
  baseUrl: string;
  pollIntervalMs: number;
  alertThreshold: number;
}
