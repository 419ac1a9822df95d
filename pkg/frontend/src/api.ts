/** Typed client for the placement session HTTP API. */

export interface HeatmapEntry {
  node: string
  fraction: number
  n_stable: number
  n_samples: number
  color: 'blue' | 'yellow' | 'red' | 'grey'
  witnesses: [number, number][]
  spectral_radius: number | null
}

export interface Heatmap {
  step: number
  context: string // performance node id, or "colocated"
  threshold: number
  entries: HeatmapEntry[]
}

export interface CorePair {
  actuator: string
  performance: string
  phases: string
  fraction: number
}

export interface SessionSummary {
  id: string
  feeder_id: string
  mode: string
  threshold: number
  sampling: { scheme: string; count: number; seed: number }
  seed: number
  step: number
  core: CorePair[]
  history: Record<string, unknown>[]
  latest_heatmap: Heatmap | null
}

export interface FeederInfo {
  id: string
  substation: string
  doc: {
    nodes: { id: string; phases: string }[]
    lines: { from: string; to: string; phases: string }[]
  }
  layout: Record<string, [number, number]>
}

export interface BranchRow {
  start: string
  end: string
  length: number
  percent_stable: number
  n_used: number
  n_involving: number
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message)
  }
}

async function parse<T>(resp: Response): Promise<T> {
  const body = await resp.json().catch(() => ({}))
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { error?: string }).error ?? resp.statusText)
  }
  return body as T
}

export class Client {
  constructor(readonly base: string) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    })
    return parse<T>(resp)
  }

  private async get<T>(path: string): Promise<T> {
    return parse<T>(await fetch(this.base + path))
  }

  uploadFeeder(doc: unknown): Promise<{ id: string }> {
    return this.post('/feeders', doc)
  }

  getFeeder(id: string): Promise<FeederInfo> {
    return this.get(`/feeders/${id}`)
  }

  createSession(req: {
    feeder_id: string
    mode: string
    seed?: number
    sampling?: { scheme?: string; count?: number; seed?: number }
    threshold?: number
  }): Promise<{ id: string }> {
    return this.post('/sessions', req)
  }

  getSession(id: string): Promise<SessionSummary> {
    return this.get(`/sessions/${id}`)
  }

  heatmap(id: string, req: { perf_node?: string; colocated?: boolean; samples?: number }): Promise<Heatmap> {
    return this.post(`/sessions/${id}/heatmap`, req)
  }

  place(id: string, actuator: string, performance: string): Promise<SessionSummary> {
    return this.post(`/sessions/${id}/place`, { actuator, performance })
  }

  undo(id: string): Promise<SessionSummary> {
    return this.post(`/sessions/${id}/undo`, {})
  }

  branches(id: string): Promise<{ branches: BranchRow[] }> {
    return this.get(`/sessions/${id}/branches`)
  }

  auto(id: string, seed: number): Promise<Record<string, unknown>> {
    return this.post(`/sessions/${id}/auto`, { seed })
  }
}
