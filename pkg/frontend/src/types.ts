export type LevelLabel = 'None' | 'Low' | 'Medium' | 'Serious';

export interface MunicipalitySummary {
  code: number;
  state: number;
  year: number;
  internet: number;
  computer: number;
  ethnic: number;
  school: number;
  global_score: number;
  population: number;
  connectivity: number;
  rural_index: number;
  n_students: number;
  votes: Record<string, boolean>;
  scores: Record<string, number>;
  total_risk: number;
  level: string;
}

export interface MunicipalitiesResponse {
  v: number;
  items: MunicipalitySummary[];
}

export interface WhatifRequest {
  code: number;
  year: number;
  d_internet: number;
  d_computer: number;
  d_connectivity: number;
}

export interface WhatifResponse {
  v: number;
  code: number;
  year: number;
  delta: Record<string, number>;
  baseline_level: string;
  baseline_total_risk: number;
  new_level: string;
  new_total_risk: number;
  assessment: MunicipalitySummary;
}

export interface MetricsResponse {
  v: number;
  auc_per_model: Record<string, number | null>;
  confusion: number[][];
}

export interface ApiError {
  error: string;
  detail: string;
}
