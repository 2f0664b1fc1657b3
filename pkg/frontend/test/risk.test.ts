import { describe, expect, it } from 'vitest';

import { cellStyle, renderRisk, renderTrapList } from '../src/risk.js';
import { riskCell } from './fixtures.js';

function container(): HTMLElement {
  const el = document.createElement('div');
  document.body.appendChild(el);
  return el;
}

describe('risk layer', () => {
  it('intensity rises with the PA-period egg counts', () => {
    // trailing-window eggs/trap as the first PoC week builds up: 2,5,12,...,42
    const rising = [2, 5, 12, 20, 28, 35, 42];
    const max = Math.max(...rising);
    const intensities = rising.map(
      (ept, i) => cellStyle(riskCell(`c${i}`, ept), max).intensity,
    );
    for (let i = 1; i < intensities.length; i++) {
      expect(intensities[i]).toBeGreaterThan(intensities[i - 1]);
    }
    expect(intensities[intensities.length - 1]).toBe(1);
  });

  it('renders one shaded cell per aggregate with legend', () => {
    const el = container();
    renderRisk(el, [riskCell('g500:a', 42), riskCell('g500:b', 7)]);
    const cells = el.querySelectorAll('.risk-cell');
    expect(cells).toHaveLength(2);
    const hot = cells[0] as HTMLElement;
    const mild = cells[1] as HTMLElement;
    expect(Number(hot.dataset.intensity)).toBeGreaterThan(
      Number(mild.dataset.intensity),
    );
    expect(el.querySelector('.risk-legend')?.textContent).toMatch(/eggs\/trap/);
  });

  it('clicking a cell lists its contributing traps', () => {
    const el = container();
    const traps = container();
    const cell = riskCell('g500:a', 21, [
      ['ovi-01', 30],
      ['ovi-02', 12],
    ]);
    renderRisk(el, [cell], (c) => renderTrapList(traps, c));
    (el.querySelector('.risk-cell') as HTMLElement).click();
    const items = traps.querySelectorAll('li');
    expect(items).toHaveLength(2);
    expect(items[0].textContent).toContain('ovi-01: 30');
  });

  it('shows an empty-layer message without reports', () => {
    const el = container();
    renderRisk(el, []);
    expect(el.querySelector('.empty-state')?.textContent).toMatch(/No reports/);
  });

  it('zero-egg window maps to zero intensity', () => {
    expect(cellStyle(riskCell('c', 0), 0).intensity).toBe(0);
  });
});
