/** Application wiring: one session, one graph, one mutation at a time.
 *
 * All stability data comes from the server; the client's only cleverness
 * is the heatmap cache that lets undo restore the prior view without a
 * recompute.  Mutations are serialized client-side: while one is in
 * flight, node clicks and buttons are ignored.
 */

import { ApiError, Client } from './api'
import type { Heatmap, HeatmapEntry, SessionSummary } from './api'
import { renderGraph, renderLegend } from './graph'
import { renderBranchTable, renderDetail, renderTimeline } from './panel'
import { Store } from './state'

export class App {
  readonly store = new Store()
  private els: {
    graph: HTMLElement
    legend: HTMLElement
    detail: HTMLElement
    timeline: HTMLElement
    branches: HTMLElement
    status: HTMLElement
    error: HTMLElement
    perfSelect: HTMLSelectElement
  }

  constructor(
    readonly root: HTMLElement,
    readonly client: Client,
  ) {
    this.els = this.buildChrome()
    this.store.subscribe(() => this.render())
  }

  // -- session lifecycle ---------------------------------------------------

  async startSession(feederDoc: unknown, mode = 'npp', seed = 0): Promise<void> {
    const { id: feederId } = await this.client.uploadFeeder(feederDoc)
    const feeder = await this.client.getFeeder(feederId)
    const { id: sessionId } = await this.client.createSession({
      feeder_id: feederId,
      mode,
      seed,
    })
    const session = await this.client.getSession(sessionId)
    this.store.update({ feeder, session, heatmap: null, timeline: [], error: null })
    this.fillPerfChoices()
  }

  /** Reload a session purely from server state (stateless client). */
  async resumeSession(sessionId: string): Promise<void> {
    const session = await this.client.getSession(sessionId)
    const feeder = await this.client.getFeeder(session.feeder_id)
    this.store.update({ feeder, session, error: null })
    this.fillPerfChoices()
    if (session.latest_heatmap) {
      this.store.showHeatmap(session.latest_heatmap, `resumed at step ${session.latest_heatmap.step}`)
    }
  }

  // -- mutations (single in-flight) -----------------------------------------

  async requestHeatmap(perf: string): Promise<void> {
    await this.mutate(async () => {
      const session = this.expectSession()
      const heatmap = await this.client.heatmap(session.id, { perf_node: perf })
      this.store.update({ perfNode: perf, session: await this.client.getSession(session.id) })
      this.store.showHeatmap(heatmap, `heatmap ${heatmap.step}: tracking ${perf}`)
    })
  }

  async requestColocatedHeatmap(): Promise<void> {
    await this.mutate(async () => {
      const session = this.expectSession()
      const heatmap = await this.client.heatmap(session.id, { colocated: true })
      this.store.update({ session: await this.client.getSession(session.id) })
      this.store.showHeatmap(heatmap, `heatmap ${heatmap.step}: co-located`)
    })
  }

  async placeNode(node: string): Promise<void> {
    await this.mutate(async () => {
      const state = this.store.get()
      const session = this.expectSession()
      const heatmap = state.heatmap
      if (!heatmap) throw new ApiError(0, 'no heatmap yet')
      const performance = heatmap.context === 'colocated' ? node : heatmap.context
      const summary = await this.client.place(session.id, node, performance)
      this.store.get().timeline.push({
        kind: 'place',
        label: `placed ${node} tracking ${performance}`,
      })
      this.store.update({ session: summary })
      // fetch the follow-up heatmap so the planner sees the new landscape
      const next = await this.client.heatmap(session.id, this.nextHeatmapRequest(heatmap))
      this.store.update({ session: await this.client.getSession(session.id) })
      this.store.showHeatmap(next, `heatmap ${next.step}: after placing ${node}`)
    })
  }

  async undoPlacement(): Promise<void> {
    await this.mutate(async () => {
      const session = this.expectSession()
      const summary = await this.client.undo(session.id)
      this.store.get().timeline.push({ kind: 'undo', label: 'undo last placement' })
      this.store.update({ session: summary })
      // the server names the restored heatmap; show it from the cache
      this.store.restoreHeatmap(summary.latest_heatmap ? summary.latest_heatmap.step : null)
    })
  }

  async refreshBranches(): Promise<void> {
    const session = this.expectSession()
    const { branches } = await this.client.branches(session.id)
    renderBranchTable(this.els.branches, branches, 'percent_stable', (key) =>
      renderBranchTable(this.els.branches, branches, key),
    )
  }

  // -- internals -------------------------------------------------------------

  private nextHeatmapRequest(previous: Heatmap): { perf_node?: string; colocated?: boolean } {
    return previous.context === 'colocated' ? { colocated: true } : { perf_node: previous.context }
  }

  private expectSession(): SessionSummary {
    const session = this.store.get().session
    if (!session) throw new ApiError(0, 'no active session')
    return session
  }

  private async mutate(fn: () => Promise<void>): Promise<void> {
    if (this.store.get().busy) return
    this.store.update({ busy: true })
    try {
      await fn()
      this.store.update({ error: null })
    } catch (err) {
      // surface rejections (e.g. 409 "candidate unstable") verbatim
      this.store.update({ error: err instanceof Error ? err.message : String(err) })
    } finally {
      this.store.update({ busy: false })
    }
  }

  private fillPerfChoices(): void {
    const feeder = this.store.get().feeder
    if (!feeder) return
    this.els.perfSelect.textContent = ''
    for (const node of feeder.doc.nodes) {
      if (node.id === feeder.substation) continue
      const opt = document.createElement('option')
      opt.value = node.id
      opt.textContent = node.id
      this.els.perfSelect.appendChild(opt)
    }
  }

  private buildChrome() {
    this.root.innerHTML = `
      <header class="toolbar">
        <label>performance node
          <select data-role="perf"></select>
        </label>
        <button data-role="heatmap">heatmap</button>
        <button data-role="colocated">co-located heatmap</button>
        <button data-role="undo">undo</button>
        <button data-role="branches">branch stats</button>
        <span data-role="status" class="status"></span>
      </header>
      <div class="error" data-role="error" hidden></div>
      <main class="layout">
        <section class="graph" data-role="graph"></section>
        <aside class="side">
          <div class="legend" data-role="legend"></div>
          <div class="detail" data-role="detail"></div>
          <div class="timeline" data-role="timeline"></div>
          <div class="branches" data-role="branches"></div>
        </aside>
      </main>
    `
    const pick = <T extends HTMLElement>(role: string): T => {
      const found = this.root.querySelector<T>(`[data-role="${role}"]`)
      if (!found) throw new Error(`missing chrome element ${role}`)
      return found
    }
    const els = {
      graph: pick<HTMLElement>('graph'),
      legend: pick<HTMLElement>('legend'),
      detail: pick<HTMLElement>('detail'),
      timeline: pick<HTMLElement>('timeline'),
      branches: pick<HTMLElement>('branches'),
      status: pick<HTMLElement>('status'),
      error: pick<HTMLElement>('error'),
      perfSelect: pick<HTMLSelectElement>('perf'),
    }
    pick<HTMLButtonElement>('heatmap').addEventListener('click', () => {
      if (els.perfSelect.value) void this.requestHeatmap(els.perfSelect.value)
    })
    pick<HTMLButtonElement>('colocated').addEventListener('click', () => {
      void this.requestColocatedHeatmap()
    })
    pick<HTMLButtonElement>('undo').addEventListener('click', () => {
      void this.undoPlacement()
    })
    pick<HTMLButtonElement>('branches').addEventListener('click', () => {
      void this.refreshBranches()
    })
    return els
  }

  private currentEntry(): HeatmapEntry | null {
    const { heatmap, selectedNode } = this.store.get()
    if (!heatmap || !selectedNode) return null
    return heatmap.entries.find((e) => e.node === selectedNode) ?? null
  }

  render(): void {
    const state = this.store.get()
    this.els.error.hidden = !state.error
    this.els.error.textContent = state.error ?? ''
    this.els.status.textContent = state.busy
      ? 'working…'
      : state.session
        ? `session ${state.session.id} | mode ${state.session.mode}`
        : 'no session'
    if (state.feeder) {
      renderGraph(this.els.graph, state.feeder, state.heatmap, {
        onPlace: (node) => void this.placeNode(node),
        onSelect: (node) => this.store.update({ selectedNode: node }),
      })
      renderLegend(
        this.els.legend,
        state.heatmap ? state.heatmap.threshold : (state.session?.threshold ?? 0.07),
      )
    }
    renderDetail(this.els.detail, state.selectedNode, this.currentEntry())
    renderTimeline(this.els.timeline, state.timeline, state.session)
  }
}

export function createApp(root: HTMLElement, client: Client): App {
  return new App(root, client)
}
