/** View state for one placement session.
 *
 * The UI never computes stability: every color, fraction, and witness shown
 * comes from the server's heatmap and session documents.  The timeline is a
 * client-side cache of heatmaps keyed by step so undo can restore the prior
 * view without recomputing (the server drops post-placement heatmaps on
 * undo, and the summary it returns names the restored one).
 */

import type { FeederInfo, Heatmap, SessionSummary } from './api'

export interface TimelineItem {
  kind: 'heatmap' | 'place' | 'undo'
  label: string
  heatmapStep?: number
}

export interface ViewState {
  feeder: FeederInfo | null
  session: SessionSummary | null
  heatmap: Heatmap | null
  perfNode: string | null
  selectedNode: string | null
  timeline: TimelineItem[]
  heatmapCache: Map<number, Heatmap>
  busy: boolean
  error: string | null
}

export function initialState(): ViewState {
  return {
    feeder: null,
    session: null,
    heatmap: null,
    perfNode: null,
    selectedNode: null,
    timeline: [],
    heatmapCache: new Map(),
    busy: false,
    error: null,
  }
}

export type Listener = (state: ViewState) => void

export class Store {
  private state = initialState()
  private listeners: Listener[] = []

  get(): ViewState {
    return this.state
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn)
  }

  update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch }
    for (const fn of this.listeners) fn(this.state)
  }

  /** Record a freshly computed heatmap and make it current. */
  showHeatmap(heatmap: Heatmap, label: string): void {
    this.state.heatmapCache.set(heatmap.step, heatmap)
    this.state.timeline.push({ kind: 'heatmap', label, heatmapStep: heatmap.step })
    this.update({ heatmap, error: null })
  }

  /** After an undo, restore the view the server says is latest again. */
  restoreHeatmap(step: number | null): void {
    const cached = step === null ? null : (this.state.heatmapCache.get(step) ?? null)
    this.update({ heatmap: cached })
  }
}
