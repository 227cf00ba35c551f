import type { MunicipalitySummary } from './types.js';

export interface TableCallbacks {
  onSelect: (item: MunicipalitySummary) => void;
  onSort: (key: string, desc: boolean) => void;
}

const COLUMNS: Array<{ key: string; label: string; sortable: boolean }> = [
  { key: 'code', label: 'Code', sortable: true },
  { key: 'state', label: 'State', sortable: true },
  { key: 'year', label: 'Year', sortable: true },
  { key: 'level', label: 'Level', sortable: true },
  { key: 'total_risk', label: 'Risk', sortable: true },
  { key: 'global_score', label: 'Score', sortable: true },
  { key: 'internet', label: 'Internet %', sortable: true },
  { key: 'computer', label: 'Computer %', sortable: true },
  { key: 'connectivity', label: 'Conn/1000', sortable: true },
];

function sortValue(item: MunicipalitySummary, key: string): number | string {
  if (key === 'level') return item.total_risk;
  return (item as unknown as Record<string, number | string>)[key];
}

export function sortItems(
  items: MunicipalitySummary[],
  key: string,
  desc: boolean,
): MunicipalitySummary[] {
  const sorted = [...items].sort((a, b) => {
    const va = sortValue(a, key);
    const vb = sortValue(b, key);
    if (va < vb) return -1;
    if (va > vb) return 1;
    return a.code - b.code;
  });
  if (desc) sorted.reverse();
  return sorted;
}

/** Level badge: the text content is the server's level string, verbatim;
 * the class only selects the color. */
export function levelBadge(level: string): HTMLSpanElement {
  const span = document.createElement('span');
  span.className = `badge badge-${level.toLowerCase()}`;
  span.textContent = level;
  return span;
}

export function renderTable(
  container: HTMLElement,
  items: MunicipalitySummary[],
  sortKey: string,
  sortDesc: boolean,
  callbacks: TableCallbacks,
): void {
  container.replaceChildren();
  if (items.length === 0) {
    const empty = document.createElement('p');
    empty.className = 'empty-state';
    empty.textContent = 'no municipalities match';
    container.appendChild(empty);
    return;
  }

  const table = document.createElement('table');
  table.className = 'municipalities';
  const thead = document.createElement('thead');
  const headRow = document.createElement('tr');
  for (const col of COLUMNS) {
    const th = document.createElement('th');
    th.textContent = col.label + (sortKey === col.key ? (sortDesc ? ' ↓' : ' ↑') : '');
    if (col.sortable) {
      th.dataset.sortKey = col.key;
      th.addEventListener('click', () => {
        callbacks.onSort(col.key, sortKey === col.key ? !sortDesc : false);
      });
    }
    headRow.appendChild(th);
  }
  thead.appendChild(headRow);
  table.appendChild(thead);

  const tbody = document.createElement('tbody');
  for (const item of sortItems(items, sortKey, sortDesc)) {
    const tr = document.createElement('tr');
    tr.dataset.code = String(item.code);
    tr.dataset.year = String(item.year);
    const cells: Array<string | HTMLElement> = [
      String(item.code),
      String(item.state),
      String(item.year),
      levelBadge(item.level),
      String(item.total_risk),
      item.global_score.toFixed(1),
      item.internet.toFixed(1),
      item.computer.toFixed(1),
      item.connectivity.toFixed(1),
    ];
    for (const cell of cells) {
      const td = document.createElement('td');
      if (typeof cell === 'string') td.textContent = cell;
      else td.appendChild(cell);
      tr.appendChild(td);
    }
    tr.addEventListener('click', () => callbacks.onSelect(item));
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  container.appendChild(table);
}
