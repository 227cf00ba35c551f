import { ApiClient, ApiHttpError } from './api.js';
import { levelBadge } from './table.js';
import type { MunicipalitySummary, WhatifResponse } from './types.js';

export const DEBOUNCE_MS = 250;

export interface WhatifPanel {
  element: HTMLElement;
  setDeltas(dInternet: number, dComputer: number, dConnectivity: number): void;
  dispose(): void;
}

interface SliderSpec {
  key: 'd_internet' | 'd_computer' | 'd_connectivity';
  label: string;
  max: number;
  step: number;
}

const SLIDERS: SliderSpec[] = [
  { key: 'd_internet', label: 'Internet (+pp)', max: 100, step: 1 },
  { key: 'd_computer', label: 'Computer (+pp)', max: 100, step: 1 },
  { key: 'd_connectivity', label: 'Connections (+subscribers)', max: 5000, step: 10 },
];

/** Sparkline of the total_risk values seen while dragging: the response
 * history is the interactive analogue of a search trace. */
function renderSparkline(svg: SVGSVGElement, history: number[]): void {
  svg.replaceChildren();
  const w = 160;
  const h = 28;
  svg.setAttribute('viewBox', `0 0 ${w} ${h}`);
  if (history.length === 0) return;
  const step = history.length > 1 ? w / (history.length - 1) : 0;
  const points = history
    .map((risk, i) => `${(i * step).toFixed(1)},${(h - 4 - risk * ((h - 8) / 3)).toFixed(1)}`)
    .join(' ');
  const line = document.createElementNS('http://www.w3.org/2000/svg', 'polyline');
  line.setAttribute('points', points);
  line.setAttribute('fill', 'none');
  line.setAttribute('stroke', 'currentColor');
  line.setAttribute('stroke-width', '1.5');
  svg.appendChild(line);
}

export function createWhatifPanel(
  api: ApiClient,
  selected: MunicipalitySummary,
  onDeltasChange?: (d: { dInternet: number; dComputer: number; dConnectivity: number }) => void,
): WhatifPanel {
  const root = document.createElement('section');
  root.className = 'whatif-panel';

  const title = document.createElement('h2');
  title.textContent = `What-if: municipality ${selected.code} (${selected.year})`;
  root.appendChild(title);

  const transition = document.createElement('div');
  transition.className = 'level-transition';
  const baselineBadge = levelBadge(selected.level);
  baselineBadge.classList.add('baseline');
  const arrow = document.createElement('span');
  arrow.textContent = ' → ';
  const resultSlot = document.createElement('span');
  resultSlot.className = 'whatif-result';
  resultSlot.appendChild(levelBadge(selected.level));
  transition.append(baselineBadge, arrow, resultSlot);
  root.appendChild(transition);

  const errorBox = document.createElement('p');
  errorBox.className = 'whatif-error';
  errorBox.hidden = true;
  root.appendChild(errorBox);

  const sparkline = document.createElementNS('http://www.w3.org/2000/svg', 'svg');
  sparkline.classList.add('sparkline');
  root.appendChild(sparkline);

  const inputs = new Map<SliderSpec['key'], HTMLInputElement>();
  const readouts = new Map<SliderSpec['key'], HTMLSpanElement>();
  const history: number[] = [selected.total_risk];
  let timer: ReturnType<typeof setTimeout> | null = null;
  let disposed = false;

  async function post(): Promise<void> {
    const body = {
      code: selected.code,
      year: selected.year,
      d_internet: Number(inputs.get('d_internet')!.value),
      d_computer: Number(inputs.get('d_computer')!.value),
      d_connectivity: Number(inputs.get('d_connectivity')!.value),
    };
    try {
      const response: WhatifResponse = await api.whatif(body);
      if (disposed) return;
      errorBox.hidden = true;
      // the displayed level is the server's string, never recomputed here
      resultSlot.replaceChildren(levelBadge(response.new_level));
      history.push(response.new_total_risk);
      if (history.length > 40) history.shift();
      renderSparkline(sparkline, history);
    } catch (err) {
      if (disposed || (err instanceof DOMException && err.name === 'AbortError')) return;
      if (err instanceof ApiHttpError) {
        errorBox.textContent = err.detail || err.message;
        errorBox.hidden = false;
      } else {
        errorBox.textContent = 'request failed; is the service running?';
        errorBox.hidden = false;
      }
    }
  }

  function schedule(): void {
    if (timer !== null) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      void post();
    }, DEBOUNCE_MS);
  }

  for (const spec of SLIDERS) {
    const row = document.createElement('label');
    row.className = 'slider-row';
    const caption = document.createElement('span');
    caption.textContent = spec.label;
    const input = document.createElement('input');
    input.type = 'range';
    input.min = '0';
    input.max = String(spec.max);
    input.step = String(spec.step);
    input.value = '0';
    input.dataset.knob = spec.key;
    const readout = document.createElement('span');
    readout.className = 'slider-value';
    readout.textContent = '0';
    input.addEventListener('input', () => {
      readout.textContent = input.value;
      onDeltasChange?.({
        dInternet: Number(inputs.get('d_internet')!.value),
        dComputer: Number(inputs.get('d_computer')!.value),
        dConnectivity: Number(inputs.get('d_connectivity')!.value),
      });
      schedule();
    });
    inputs.set(spec.key, input);
    readouts.set(spec.key, readout);
    row.append(caption, input, readout);
    root.appendChild(row);
  }

  return {
    element: root,
    setDeltas(dInternet, dComputer, dConnectivity) {
      inputs.get('d_internet')!.value = String(dInternet);
      inputs.get('d_computer')!.value = String(dComputer);
      inputs.get('d_connectivity')!.value = String(dConnectivity);
      readouts.get('d_internet')!.textContent = String(dInternet);
      readouts.get('d_computer')!.textContent = String(dComputer);
      readouts.get('d_connectivity')!.textContent = String(dConnectivity);
      if (dInternet || dComputer || dConnectivity) schedule();
    },
    dispose() {
      disposed = true;
      if (timer !== null) clearTimeout(timer);
    },
  };
}
