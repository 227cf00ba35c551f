import { describe, expect, it } from 'vitest';

import { decodeState, defaultState, encodeState } from '../src/state.js';

describe('view-state URL round trip', () => {
  it('reload reproduces the full view', () => {
    const state = defaultState();
    state.year = '2019';
    state.level = 'Serious';
    state.selectedCode = '10012';
    state.selectedYear = '2019';
    state.dInternet = 12;
    state.dConnectivity = 250;
    state.sortKey = 'total_risk';
    state.sortDesc = true;
    const back = decodeState(encodeState(state));
    expect(back).toEqual(state);
  });

  it('defaults encode to an empty query string', () => {
    expect(encodeState(defaultState()).toString()).toBe('');
  });

  it('negative or garbled deltas decode to zero', () => {
    const params = new URLSearchParams('di=-5&dc=abc&ds=10');
    const state = decodeState(params);
    expect(state.dInternet).toBe(0);
    expect(state.dComputer).toBe(0);
    expect(state.dConnectivity).toBe(10);
  });
});
