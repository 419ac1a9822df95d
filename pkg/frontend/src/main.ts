/** Browser entry point.
 *
 * Served by `derplace serve --ui frontend/dist` (same origin) or run via
 * `npm run dev` with `?api=http://127.0.0.1:8321`.  A feeder file can be
 * loaded from disk, or an existing session resumed by id.
 */

import { Client } from './api'
import { createApp } from './app'
import './style.css'

const params = new URLSearchParams(window.location.search)
const apiBase = params.get('api') ?? ''
const client = new Client(apiBase)

const shell = document.getElementById('app')
if (!shell) throw new Error('missing #app element')

shell.innerHTML = `
  <div class="loader">
    <h1>derplace</h1>
    <p>Load a feeder file to start a placement session, or resume one by id.</p>
    <label class="file-label">feeder JSON
      <input type="file" id="feeder-file" accept=".json,application/json" />
    </label>
    <label>mode
      <select id="mode">
        <option value="npp">npp (non-colocated)</option>
        <option value="ocpp">ocpp (co-located)</option>
        <option value="auto_ocpp">auto ocpp</option>
      </select>
    </label>
    <label>session id <input type="text" id="session-id" placeholder="abc123" /></label>
    <button id="resume">resume</button>
  </div>
  <div id="workspace"></div>
`

const workspace = document.getElementById('workspace') as HTMLElement
const app = createApp(workspace, client)

const fileInput = document.getElementById('feeder-file') as HTMLInputElement
fileInput.addEventListener('change', async () => {
  const file = fileInput.files?.[0]
  if (!file) return
  const mode = (document.getElementById('mode') as HTMLSelectElement).value
  try {
    await app.startSession(JSON.parse(await file.text()), mode)
  } catch (err) {
    app.store.update({ error: err instanceof Error ? err.message : String(err) })
  }
})

document.getElementById('resume')?.addEventListener('click', async () => {
  const sid = (document.getElementById('session-id') as HTMLInputElement).value.trim()
  if (!sid) return
  try {
    await app.resumeSession(sid)
  } catch (err) {
    app.store.update({ error: err instanceof Error ? err.message : String(err) })
  }
})
