/** Side panels: per-node detail, placement timeline, and the branch table. */

import type { BranchRow, HeatmapEntry, SessionSummary } from './api'
import type { TimelineItem } from './state'

export function renderDetail(host: HTMLElement, node: string | null, entry: HeatmapEntry | null): void {
  host.textContent = ''
  const title = document.createElement('h3')
  title.textContent = node ? `node ${node}` : 'no node selected'
  host.appendChild(title)
  if (!entry) {
    if (node) {
      const p = document.createElement('p')
      p.textContent = 'not scored on the current heatmap'
      host.appendChild(p)
    }
    return
  }
  const dl = document.createElement('dl')
  const rows: [string, string][] = [
    ['color', entry.color],
    ['stable fraction', entry.fraction.toFixed(3)],
    ['samples', `${entry.n_stable} / ${entry.n_samples}`],
    [
      'witness gains',
      entry.witnesses.length
        ? entry.witnesses.map(([q, p]) => `(${q.toFixed(3)}, ${p.toFixed(3)})`).join('  ')
        : 'none',
    ],
    [
      'spectral radius',
      entry.spectral_radius === null ? 'n/a' : entry.spectral_radius.toFixed(4),
    ],
  ]
  for (const [k, v] of rows) {
    const dt = document.createElement('dt')
    dt.textContent = k
    const dd = document.createElement('dd')
    dd.textContent = v
    dl.append(dt, dd)
  }
  host.appendChild(dl)
}

export function renderTimeline(
  host: HTMLElement,
  items: TimelineItem[],
  session: SessionSummary | null,
): void {
  host.textContent = ''
  const title = document.createElement('h3')
  title.textContent = `timeline (${session ? session.core.length : 0} placed)`
  host.appendChild(title)
  const list = document.createElement('ol')
  list.className = 'timeline'
  for (const item of items) {
    const li = document.createElement('li')
    li.textContent = item.label
    li.dataset.kind = item.kind
    list.appendChild(li)
  }
  host.appendChild(list)
}

type SortKey = 'percent_stable' | 'length' | 'start'

/** Table-style branch report; clicking a header re-sorts. */
export function renderBranchTable(
  host: HTMLElement,
  rows: BranchRow[],
  sortKey: SortKey = 'percent_stable',
  onSort?: (key: SortKey) => void,
): void {
  host.textContent = ''
  const table = document.createElement('table')
  table.className = 'branch-table'
  const head = document.createElement('tr')
  const columns: [SortKey | null, string][] = [
    ['start', 'branch start and end'],
    ['percent_stable', 'percent stable'],
    ['length', 'length (no. nodes)'],
  ]
  for (const [key, label] of columns) {
    const th = document.createElement('th')
    th.textContent = label
    if (key && onSort) {
      th.classList.add('sortable')
      th.addEventListener('click', () => onSort(key))
    }
    head.appendChild(th)
  }
  table.appendChild(head)

  const sorted = [...rows].sort((a, b) => {
    if (sortKey === 'start') return a.start.localeCompare(b.start)
    return b[sortKey] - a[sortKey]
  })
  for (const row of sorted) {
    const tr = document.createElement('tr')
    const cells = [
      `${row.start} - ${row.end}`,
      row.percent_stable.toFixed(1),
      String(row.length),
    ]
    for (const text of cells) {
      const td = document.createElement('td')
      td.textContent = text
      tr.appendChild(td)
    }
    table.appendChild(tr)
  }
  host.appendChild(table)
}
