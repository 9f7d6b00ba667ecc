/** Payload shapes of the workbench HTTP API. */

export interface ClassInfo {
  class_id: string;
  display_name: string;
  color: string;
  shortcut_key: string;
}

export interface TrackInfo {
  track_name: string;
  allows_erroneous: boolean;
  classes: ClassInfo[];
  has_ground_truth: boolean;
}

export interface SampleInfo {
  sample_id: string;
  global_index: number;
  duration_s: number;
  media: { kind: string; channels: string }[];
}

export interface DatasetInfo {
  name: string;
  n_samples: number;
  n_dims: number;
  tracks: TrackInfo[];
  samples: SampleInfo[];
}

export interface ProjectionInfo {
  name: string;
  provenance: string;
  n_points: number;
}

export interface CurrentSample {
  index: number;
  sample_id: string;
}

export interface SessionView {
  session_id: string;
  config: {
    dataset_name: string;
    track: string;
    method: "RND" | "FAFT" | "2DV";
    budget: number;
    seed: number;
    annotator_id: string;
    annotator_group: string;
  };
  status: "active" | "complete";
  labeled_count: number;
  total_count: number;
  current: CurrentSample | null;
  queue: number[];
  order_length: number;
  labels: Record<string, string>;
}

export interface LabelResponse {
  labeled_count: number;
  status: "active" | "complete";
}

export interface NavigateResponse {
  current: CurrentSample | null;
  labeled_count: number;
  queue: number[];
}

export interface QueueResponse {
  queue: number[];
  labeled_count: number;
}

export interface ApiErrorBody {
  error: { kind: string; message: string };
}

/** Reserved label value for samples no class applies to. */
export const ERRONEOUS = "ERRONEOUS";

/** Color used for points that have no label yet. */
export const UNLABELED_COLOR = "#00b050";
