export interface ViewState {
  year: string;
  state: string;
  level: string;
  selectedCode: string;
  selectedYear: string;
  dInternet: number;
  dComputer: number;
  dConnectivity: number;
  sortKey: string;
  sortDesc: boolean;
}

export function defaultState(): ViewState {
  return {
    year: '',
    state: '',
    level: '',
    selectedCode: '',
    selectedYear: '',
    dInternet: 0,
    dComputer: 0,
    dConnectivity: 0,
    sortKey: 'code',
    sortDesc: false,
  };
}

const NUMERIC_KEYS = ['di', 'dc', 'ds'] as const;

/** Full view state lives in the URL so a reload reproduces the view. */
export function encodeState(state: ViewState): URLSearchParams {
  const params = new URLSearchParams();
  if (state.year) params.set('year', state.year);
  if (state.state) params.set('state', state.state);
  if (state.level) params.set('level', state.level);
  if (state.selectedCode) params.set('sel', state.selectedCode);
  if (state.selectedYear) params.set('selYear', state.selectedYear);
  if (state.dInternet) params.set('di', String(state.dInternet));
  if (state.dComputer) params.set('dc', String(state.dComputer));
  if (state.dConnectivity) params.set('ds', String(state.dConnectivity));
  if (state.sortKey !== 'code') params.set('sort', state.sortKey);
  if (state.sortDesc) params.set('desc', '1');
  return params;
}

export function decodeState(params: URLSearchParams): ViewState {
  const state = defaultState();
  state.year = params.get('year') ?? '';
  state.state = params.get('state') ?? '';
  state.level = params.get('level') ?? '';
  state.selectedCode = params.get('sel') ?? '';
  state.selectedYear = params.get('selYear') ?? '';
  const [di, dc, ds] = NUMERIC_KEYS.map((k) => {
    const raw = Number(params.get(k) ?? '0');
    return Number.isFinite(raw) && raw >= 0 ? raw : 0;
  });
  state.dInternet = di;
  state.dComputer = dc;
  state.dConnectivity = ds;
  state.sortKey = params.get('sort') ?? 'code';
  state.sortDesc = params.get('desc') === '1';
  return state;
}

export function pushStateToUrl(state: ViewState): void {
  const qs = encodeState(state).toString();
  const url = `${window.location.pathname}${qs ? `?${qs}` : ''}`;
  window.history.replaceState(null, '', url);
}
