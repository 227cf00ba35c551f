import { ApiClient } from './api.js';
import { decodeState, pushStateToUrl, ViewState } from './state.js';
import { renderTable } from './table.js';
import { createWhatifPanel, WhatifPanel } from './whatif.js';
import type { MunicipalitySummary } from './types.js';

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get('api');
  return fromQuery ?? 'http://localhost:8080';
}

function bindFilter(id: string, value: string, onChange: (v: string) => void): void {
  const el = document.getElementById(id) as HTMLInputElement | HTMLSelectElement;
  el.value = value;
  el.addEventListener('change', () => onChange(el.value));
}

async function start(): Promise<void> {
  const api = new ApiClient(apiBase());
  const state: ViewState = decodeState(new URLSearchParams(window.location.search));
  const tableHost = document.getElementById('table-host')!;
  const panelHost = document.getElementById('panel-host')!;
  const banner = document.getElementById('retry-banner')!;
  let panel: WhatifPanel | null = null;
  let items: MunicipalitySummary[] = [];

  function select(item: MunicipalitySummary | null): void {
    panel?.dispose();
    panelHost.replaceChildren();
    if (!item) return;
    state.selectedCode = String(item.code);
    state.selectedYear = String(item.year);
    pushStateToUrl(state);
    panel = createWhatifPanel(api, item, (deltas) => {
      state.dInternet = deltas.dInternet;
      state.dComputer = deltas.dComputer;
      state.dConnectivity = deltas.dConnectivity;
      pushStateToUrl(state);
    });
    panelHost.appendChild(panel.element);
    if (state.dInternet || state.dComputer || state.dConnectivity) {
      panel.setDeltas(state.dInternet, state.dComputer, state.dConnectivity);
    }
  }

  function redraw(): void {
    renderTable(tableHost, items, state.sortKey, state.sortDesc, {
      onSelect: select,
      onSort: (key, desc) => {
        state.sortKey = key;
        state.sortDesc = desc;
        pushStateToUrl(state);
        redraw();
      },
    });
  }

  async function refresh(): Promise<void> {
    banner.hidden = true;
    try {
      const response = await api.municipalities({
        year: state.year,
        state: state.state,
        level: state.level,
      });
      items = response.items;
      redraw();
      const sel = items.find(
        (m) => String(m.code) === state.selectedCode && String(m.year) === state.selectedYear,
      );
      if (sel) select(sel);
    } catch {
      banner.hidden = false;
    }
  }

  bindFilter('filter-year', state.year, (v) => {
    state.year = v;
    pushStateToUrl(state);
    void refresh();
  });
  bindFilter('filter-state', state.state, (v) => {
    state.state = v;
    pushStateToUrl(state);
    void refresh();
  });
  bindFilter('filter-level', state.level, (v) => {
    state.level = v;
    pushStateToUrl(state);
    void refresh();
  });
  document.getElementById('retry-button')!.addEventListener('click', () => void refresh());

  await refresh();
}

window.addEventListener('DOMContentLoaded', () => void start());
