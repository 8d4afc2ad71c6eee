/** Wire types mirroring the labeling service's JSON bodies. */

export interface SessionProgress {
  labeled: number;
  budget: number;
  batch_size: number;
  queries_issued: number;
  mean_pool_uncertainty: number;
  status: string;
  class_names: string[];
}

export interface SessionHandle {
  session_id: string;
  status: "awaiting_label" | "ready" | "finished" | "failed";
  progress: SessionProgress;
  dataset: string;
}

export interface QueryCard {
  session_id: string;
  instance_id: string;
  channel_names: string[];
  values: number[][]; // C channels x T samples
  class_names: string[];
  probabilities: number[];
  strategy_score: number | null;
  query_index: number;
  budget: number;
}

export interface CurvePoint {
  query_count: number;
  accuracy: number | null;
  mean_pool_uncertainty: number;
}

export interface LabelHistoryEntry {
  instance_id: string;
  class_name: string;
  sequence: number;
}

export interface CurveResponse {
  session_id: string;
  points: CurvePoint[];
  label_history: LabelHistoryEntry[];
}
