import type { MunicipalitySummary, WhatifResponse } from '../src/types.js';

export function summary(over: Partial<MunicipalitySummary> = {}): MunicipalitySummary {
  return {
    code: 10000,
    state: 1,
    year: 2019,
    internet: 20,
    computer: 30,
    ethnic: 40,
    school: 70,
    global_score: 250,
    population: 10000,
    connectivity: 25,
    rural_index: 50,
    n_students: 60,
    votes: { logistic: false, forest_regression: false, forest_classifier: false },
    scores: { logistic: 0.2, forest_regression: -260, forest_classifier: 0.1 },
    total_risk: 0,
    level: 'None',
    ...over,
  };
}

export const FOUR_LEVELS: MunicipalitySummary[] = [
  summary({ code: 1, level: 'None', total_risk: 0 }),
  summary({ code: 2, level: 'Low', total_risk: 1 }),
  summary({ code: 3, level: 'Medium', total_risk: 2 }),
  summary({ code: 4, level: 'Serious', total_risk: 3 }),
];

export function whatifResponse(over: Partial<WhatifResponse> = {}): WhatifResponse {
  return {
    v: 1,
    code: 10000,
    year: 2019,
    delta: { d_internet: 0, d_computer: 0, d_connectivity_subscribers: 0 },
    baseline_level: 'Serious',
    baseline_total_risk: 3,
    new_level: 'Medium',
    new_total_risk: 2,
    assessment: summary({ level: 'Medium', total_risk: 2 }),
    ...over,
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}
