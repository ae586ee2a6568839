import { IndexReportPayload } from './api';

/**
 * View model for the index report. Every number here is copied verbatim
 * from the service payload — the client never derives a score, including
 * the attainment view, which the service supplies alongside deprivation.
 */

export interface DimensionBar {
  id: string;
  deprivation: number;
  attainment: number;
}

export interface ScoreRow {
  id: string;
  score: number;
}

export interface ReportView {
  childId: string;
  computedAt: string;
  overallDeprivation: number;
  overallAttainment: number;
  /** Exactly the overarching dimensions the service returned. */
  dimensions: DimensionBar[];
  /** Drill-down panels, one row per lower-level score. */
  broad: ScoreRow[];
  constructs: ScoreRow[];
  weights: Record<string, Record<string, number>>;
}

export function buildReportView(payload: IndexReportPayload): ReportView {
  const dimensionIds = Object.keys(payload.overarching_scores).sort();
  return {
    childId: payload.child_id,
    computedAt: payload.computed_at,
    overallDeprivation: payload.overall,
    overallAttainment: payload.attainment.overall,
    dimensions: dimensionIds.map((id) => ({
      id,
      deprivation: payload.overarching_scores[id],
      attainment: payload.attainment.overarching_scores[id],
    })),
    broad: Object.keys(payload.broad_scores)
      .sort()
      .map((id) => ({ id, score: payload.broad_scores[id] })),
    constructs: Object.keys(payload.construct_scores)
      .sort()
      .map((id) => ({ id, score: payload.construct_scores[id] })),
    weights: payload.weights_used,
  };
}
