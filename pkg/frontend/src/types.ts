// Payload shapes of the review API. The UI is a pure view over these:
// every displayed number comes verbatim from a payload field.

export interface ScenePayload {
  rank: number;
  start_s: number;
  end_s: number;
  outlierness: number;
  tier: "dark" | "light";
  representative_frame: number;
  top_modality: string | null;
  degenerate_attribution: boolean;
  importances: Record<string, number>;
}

export interface SceneReportPayload {
  session: string;
  k: number;
  window_s: number;
  generator: string;
  config: Record<string, unknown>;
  scenes: ScenePayload[];
}

export interface WindowPayload {
  window_index: number;
  start_s: number;
  end_s: number;
  unscored: boolean;
  scored_frames: number;
  outlierness: number | null;
  importances: Record<string, number> | null;
  representative_frame: number | null;
  degenerate_attribution: boolean;
}

export interface ScoreSeriesPayload {
  session: string;
  window_s: number;
  layout: { fps: number; modalities: { name: string; dim: number }[] };
  config: Record<string, unknown>;
  windows: WindowPayload[];
}

export interface SessionPayload {
  id: string;
  title: string;
  created_at: string;
  status: "pending" | "scored" | "failed";
  video_path: string | null;
  error: string | null;
}
