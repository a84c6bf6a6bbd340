// Pure view-geometry helpers; all sizing math lives here so it can be tested
// without a DOM. Every number rendered comes from a service response field.

import type { CityRanking, ScenarioResponse } from "./types.js";

export interface SignedBar {
  name: string;
  value: number;
  widthPct: number; // 0..50, half the track per sign
  positive: boolean;
}

/** SHAP bars sorted by |value| descending, widths relative to the largest. */
export function shapBars(shap: Record<string, number>): SignedBar[] {
  const entries = Object.entries(shap);
  const peak = Math.max(...entries.map(([, v]) => Math.abs(v)), 0);
  return entries
    .sort((a, b) => Math.abs(b[1]) - Math.abs(a[1]))
    .map(([name, value]) => ({
      name,
      value,
      widthPct: peak === 0 ? 0 : (Math.abs(value) / peak) * 50,
      positive: value >= 0,
    }));
}

export interface ProbabilityBar {
  label: string;
  probability: number;
  widthPct: number;
}

export function probabilityBars(probabilities: number[], labels: string[]): ProbabilityBar[] {
  return probabilities.map((p, i) => ({
    label: labels[i] ?? `Class ${i}`,
    probability: p,
    widthPct: Math.max(0, Math.min(100, p * 100)),
  }));
}

export interface GaugeGeometry {
  valuePct: number;
  cuts: { value: number; pct: number }[];
  scaleMax: number;
}

/** Position of the index needle and the class-boundary ticks on a 0..max track. */
export function gaugeGeometry(sci: number, bins: number[]): GaugeGeometry {
  const top = bins.length > 0 ? bins[bins.length - 1] : 1;
  const scaleMax = Math.max(top * 1.3, sci, 1e-12);
  const clamp = (v: number) => Math.max(0, Math.min(100, (v / scaleMax) * 100));
  return {
    valuePct: clamp(sci),
    cuts: bins.map((value) => ({ value, pct: clamp(value) })),
    scaleMax,
  };
}

/** The explanation widget's annotated sum: bars must add up to margin - baseline. */
export function shapSum(response: ScenarioResponse): number {
  return Object.values(response.shap).reduce((a, b) => a + b, 0);
}

export type RankSortKey = "mean_sci" | "city" | "modal_class";

export function sortRankings(
  cities: CityRanking[],
  key: RankSortKey,
  descending: boolean,
): CityRanking[] {
  const sorted = [...cities].sort((a, b) => {
    const left = a[key];
    const right = b[key];
    const cmp = typeof left === "number" && typeof right === "number"
      ? left - right
      : String(left).localeCompare(String(right));
    return descending ? -cmp : cmp;
  });
  return sorted;
}

/** Class histogram totalled across the ranked cities. */
export function totalHistogram(cities: CityRanking[], labels: string[]): Record<string, number> {
  const totals: Record<string, number> = {};
  for (const label of labels) totals[label] = 0;
  for (const city of cities) {
    for (const [label, count] of Object.entries(city.histogram)) {
      totals[label] = (totals[label] ?? 0) + count;
    }
  }
  return totals;
}
