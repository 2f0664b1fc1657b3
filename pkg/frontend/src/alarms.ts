// Alarm feed: newest first, severity-styled.

import type { Alarm } from './types.js';

export function renderAlarms(container: HTMLElement, alarms: Alarm[]): void {
  container.replaceChildren();
  if (alarms.length === 0) {
    const p = document.createElement('p');
    p.className = 'empty-state';
    p.textContent = 'No alarms.';
    container.appendChild(p);
    return;
  }
  const list = document.createElement('ul');
  list.className = 'alarm-feed';
  for (const alarm of [...alarms].sort((a, b) => b.alarm_id - a.alarm_id)) {
    const li = document.createElement('li');
    li.className = `alarm alarm-${alarm.severity}`;
    li.dataset.ruleId = alarm.rule_id;
    li.textContent =
      `${alarm.ts}  ${alarm.device_id}  ${alarm.rule_id} ` +
      `(${alarm.metric}=${String(alarm.value)})`;
    list.appendChild(li);
  }
  container.appendChild(list);
}
