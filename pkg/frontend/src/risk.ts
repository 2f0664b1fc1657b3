// Risk choropleth: grid cells shaded by eggs-per-trap, with a legend and a
// per-cell trap list on click.

import type { RiskCell } from './types.js';

export interface RiskStyle {
  fill: string;
  intensity: number; // 0..1, monotone in eggs_per_trap
}

/** Shade for a cell given the maximum eggs_per_trap on the layer. */
export function cellStyle(cell: RiskCell, maxEggsPerTrap: number): RiskStyle {
  const intensity =
    maxEggsPerTrap <= 0 ? 0 : Math.min(1, cell.eggs_per_trap / maxEggsPerTrap);
  // white -> deep red ramp
  const g = Math.round(235 - 180 * intensity);
  const b = Math.round(235 - 200 * intensity);
  return { fill: `rgb(245,${g},${b})`, intensity };
}

export function renderRisk(
  container: HTMLElement,
  cells: RiskCell[],
  onCellSelect?: (cell: RiskCell) => void,
): void {
  container.replaceChildren();
  if (cells.length === 0) {
    const empty = document.createElement('p');
    empty.className = 'empty-state';
    empty.textContent = 'No reports in this window.';
    container.appendChild(empty);
    return;
  }

  const maxEpt = Math.max(...cells.map((c) => c.eggs_per_trap));
  const list = document.createElement('div');
  list.className = 'risk-cells';
  for (const cell of cells) {
    const style = cellStyle(cell, maxEpt);
    const row = document.createElement('button');
    row.type = 'button';
    row.className = 'risk-cell';
    row.style.background = style.fill;
    row.dataset.cellId = cell.cell_id;
    row.dataset.intensity = style.intensity.toFixed(3);
    row.innerHTML =
      `<span class="cell-id">${cell.cell_id}</span>` +
      `<span>${cell.eggs_per_trap.toFixed(1)} eggs/trap</span>` +
      `<span>${Math.round(cell.positive_trap_fraction * 100)}% positive</span>` +
      `<span>${cell.trap_count} trap(s)</span>`;
    if (onCellSelect) {
      row.addEventListener('click', () => onCellSelect(cell));
    }
    list.appendChild(row);
  }
  container.appendChild(list);

  const legend = document.createElement('div');
  legend.className = 'risk-legend';
  legend.textContent = `0 … ${maxEpt.toFixed(1)} eggs/trap over trailing 7 days`;
  container.appendChild(legend);
}

export function renderTrapList(container: HTMLElement, cell: RiskCell): void {
  container.replaceChildren();
  const heading = document.createElement('h4');
  heading.textContent = `Cell ${cell.cell_id}`;
  container.appendChild(heading);
  const ul = document.createElement('ul');
  ul.className = 'trap-list';
  for (const trap of cell.traps) {
    const li = document.createElement('li');
    li.textContent = `${trap.device_id}: ${trap.window_total} egg(s) in window`;
    ul.appendChild(li);
  }
  container.appendChild(ul);
}
