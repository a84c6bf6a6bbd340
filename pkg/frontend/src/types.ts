// Wire types of the sitescreen scenario service.

export const FEATURE_NAMES = [
  "solar_irradiance",
  "temperature",
  "wind_speed",
  "aod",
  "land_cover_class",
  "water_proximity",
  "elevation",
  "month",
] as const;

export type FeatureName = (typeof FEATURE_NAMES)[number];

export type ScenarioPayload = Record<FeatureName, number>;

export interface ScenarioResponse {
  proxy_class: number;
  proxy_label: string;
  probabilities: number[];
  shap: Record<string, number>;
  shap_baseline: number;
  sci: number;
  sci_class: string;
  contributions: Record<string, number>;
}

export interface FeatureRange {
  min: number;
  max: number;
}

export interface MetaResponse {
  format_version: number;
  dataset_fingerprint: string;
  bins: number[];
  weight_mode: string;
  class_labels: string[];
  feature_names: string[];
  scaling: Record<string, FeatureRange>;
}

export interface ImportanceEntry {
  name: string;
  mean_abs_shap: number;
  weight: number;
}

export interface ImportanceResponse {
  features: ImportanceEntry[];
}

export interface RankRecord {
  city: string;
  date: string;
  solar_irradiance: number;
  temperature: number;
  wind_speed: number;
  aod: number | null;
  land_cover_class: number;
  water_proximity: number;
  elevation: number;
  month: number;
}

export interface CityRanking {
  city: string;
  mean_sci: number;
  modal_class: string;
  histogram: Record<string, number>;
}

export interface RankResponse {
  cities: CityRanking[];
}
