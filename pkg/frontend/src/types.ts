/** JSON shapes served by the review API; mirrors the service serializers. */

export type AlertKind = "pose" | "rostrum";

export interface Resolution {
  resolved_value: boolean;
  resolver: string;
  timestamp: number;
}

export interface AlertView {
  alert_id: string;
  sample_id: string;
  kind: AlertKind;
  human_value: boolean;
  ai_value: boolean;
  resolution: Resolution | null;
}

export interface FusionView {
  kind: AlertKind;
  alert: boolean;
  human_value: boolean;
  ai_value: boolean;
}

/** Keypoint tuples are [index, x, y, visible]. */
export type KeypointTuple = [number, number, number, boolean];

export interface SkeletonView {
  view: "lateral" | "dorsal";
  rostrum: "intact" | "broken";
  keypoints: KeypointTuple[];
}

export interface MeasurementsView {
  unit: "px" | "cm";
  values: Record<string, number>;
  clamped: string[];
}

export interface ResultView {
  sample_id: string;
  fusion_pose: FusionView;
  fusion_rostrum: FusionView;
  skeleton: SkeletonView | null;
  measurements_px: MeasurementsView | null;
  measurements_cm: MeasurementsView | null;
  status: "completed" | "awaiting_review" | "failed";
  failure_reason: string | null;
}

/** Human-readable label for a boolean alert value. */
export function valueLabel(kind: AlertKind, value: boolean): string {
  if (kind === "pose") return value ? "Lateral" : "Dorsal";
  return value ? "Intact" : "Broken";
}
