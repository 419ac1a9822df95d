/** SVG rendering of the feeder graph with heatmap colors.
 *
 * Nodes are circles filled with the server-assigned color; the performance
 * node gets a square outline; hovering shows the fraction and sample
 * counts; only blue and yellow nodes take placement clicks.
 */

import type { FeederInfo, Heatmap, HeatmapEntry } from './api'

export const FILL: Record<string, string> = {
  blue: '#2c7fb8',
  yellow: '#fdd835',
  red: '#e34a33',
  grey: '#9e9e9e',
}
const UNSCORED = '#e8e8e8'
const SVG_NS = 'http://www.w3.org/2000/svg'

const WIDTH = 720
const HEIGHT = 540
const MARGIN = 46
const RADIUS = 11

export interface GraphHandlers {
  onPlace: (node: string) => void
  onSelect: (node: string) => void
}

function scaled(layout: Record<string, [number, number]>): Record<string, [number, number]> {
  const xs = Object.values(layout).map((p) => p[0])
  const ys = Object.values(layout).map((p) => p[1])
  const minX = Math.min(...xs)
  const minY = Math.min(...ys)
  const spanX = Math.max(...xs) - minX || 1
  const spanY = Math.max(...ys) - minY || 1
  const out: Record<string, [number, number]> = {}
  for (const [id, [x, y]] of Object.entries(layout)) {
    out[id] = [
      MARGIN + ((x - minX) / spanX) * (WIDTH - 2 * MARGIN),
      MARGIN + ((y - minY) / spanY) * (HEIGHT - 2 * MARGIN),
    ]
  }
  return out
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag)
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v))
  return node
}

export function renderGraph(
  host: HTMLElement,
  feeder: FeederInfo,
  heatmap: Heatmap | null,
  handlers: GraphHandlers,
): void {
  host.textContent = ''
  const svg = el('svg', {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    width: WIDTH,
    height: HEIGHT,
  })
  svg.classList.add('feeder-graph')
  const pos = scaled(feeder.layout)
  const entries = new Map<string, HeatmapEntry>()
  for (const e of heatmap?.entries ?? []) entries.set(e.node, e)

  for (const line of feeder.doc.lines) {
    const [x1, y1] = pos[line.from]
    const [x2, y2] = pos[line.to]
    svg.appendChild(
      el('line', { x1, y1, x2, y2, stroke: '#666', 'stroke-width': 1.5 }),
    )
  }

  const perf = heatmap && heatmap.context !== 'colocated' ? heatmap.context : null
  for (const node of feeder.doc.nodes) {
    const [x, y] = pos[node.id]
    const entry = entries.get(node.id)
    if (node.id === perf) {
      const side = 2 * RADIUS + 10
      svg.appendChild(
        el('rect', {
          x: x - side / 2,
          y: y - side / 2,
          width: side,
          height: side,
          fill: 'none',
          stroke: 'black',
          'stroke-width': 2,
        }),
      )
    }

    const circle = el('circle', { cx: x, cy: y, r: RADIUS })
    circle.dataset.node = node.id
    if (node.id === feeder.substation) {
      circle.setAttribute('fill', '#ffffff')
      circle.classList.add('substation')
    } else {
      circle.setAttribute('fill', entry ? FILL[entry.color] : UNSCORED)
      circle.dataset.color = entry ? entry.color : 'none'
    }
    circle.setAttribute('stroke', 'black')

    const placeable = entry !== undefined && (entry.color === 'blue' || entry.color === 'yellow')
    circle.classList.add(placeable ? 'placeable' : 'unclickable')
    circle.addEventListener('click', () => {
      handlers.onSelect(node.id)
      if (placeable) handlers.onPlace(node.id)
    })

    if (entry) {
      const tip = document.createElementNS(SVG_NS, 'title')
      tip.textContent =
        `${node.id}: fraction ${entry.fraction.toFixed(2)} ` +
        `(${entry.n_stable}/${entry.n_samples} stable)`
      circle.appendChild(tip)
      circle.addEventListener('mouseenter', () => handlers.onSelect(node.id))
    }
    svg.appendChild(circle)

    const label = el('text', {
      x,
      y: y + RADIUS + 12,
      'font-size': 9,
      'text-anchor': 'middle',
    })
    label.textContent = node.id
    svg.appendChild(label)
  }
  host.appendChild(svg)
}

export function renderLegend(host: HTMLElement, threshold: number): void {
  const pct = (100 * threshold).toFixed(0)
  host.textContent = ''
  const rows: [string, string][] = [
    ['blue', `stable fraction ≥ ${pct}%`],
    ['yellow', `below ${pct}% but nonzero`],
    ['red', 'no stable gains found'],
    ['grey', 'placed pair'],
  ]
  for (const [color, label] of rows) {
    const item = document.createElement('span')
    item.className = 'legend-item'
    const swatch = document.createElement('span')
    swatch.className = 'legend-swatch'
    swatch.style.backgroundColor = FILL[color]
    item.append(swatch, document.createTextNode(label))
    host.appendChild(item)
  }
}
