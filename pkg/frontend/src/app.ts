/** Console wiring: the monitor-evaluate-confirm loop.
 *
 * Poll the session once a second while paused, draw the diagram and
 * banner, surface the ranked candidates when the observer is unhappy, let
 * the operator what-if and stage one, and advance on explicit command.
 */

import { ApiError, AssistantClient } from "./api.js";
import { renderDiagram } from "./diagram.js";
import { renderSeries, sparkline } from "./charts.js";
import type { ActionSpec, CandidatesResponse, Snapshot } from "./types.js";
import {
  candidateRows,
  describeAction,
  fmtRho,
  historySeries,
  statusBanner,
  whatIfDeltas,
} from "./viewmodel.js";

const client = new AssistantClient("");

const els = {
  sessionForm: document.getElementById("session-form") as HTMLFormElement,
  gridInput: document.getElementById("grid-name") as HTMLInputElement,
  chronicInput: document.getElementById("chronic-name") as HTMLInputElement,
  banner: document.getElementById("banner") as HTMLDivElement,
  stepInfo: document.getElementById("step-info") as HTMLSpanElement,
  diagram: document.getElementById("diagram") as unknown as SVGSVGElement,
  hover: document.getElementById("hover-info") as HTMLDivElement,
  candidates: document.getElementById("candidates") as HTMLDivElement,
  whatif: document.getElementById("whatif") as HTMLDivElement,
  staged: document.getElementById("staged") as HTMLDivElement,
  advanceBtn: document.getElementById("advance") as HTMLButtonElement,
  audit: document.getElementById("audit") as HTMLUListElement,
  chartRho: document.getElementById("chart-rho") as unknown as SVGSVGElement,
  chartRd: document.getElementById("chart-rd") as unknown as SVGSVGElement,
  chartDist: document.getElementById("chart-dist") as unknown as SVGSVGElement,
};

let sessionId: string | null = null;
let snapshot: Snapshot | null = null;
let lastCandidates: CandidatesResponse | null = null;
let pollTimer: number | null = null;

els.sessionForm.addEventListener("submit", async (ev) => {
  ev.preventDefault();
  try {
    const created = await client.createSession(
      els.gridInput.value.trim(),
      els.chronicInput.value.trim(),
    );
    sessionId = created.session_id;
    snapshot = created.state;
    refreshAll();
    if (pollTimer !== null) clearInterval(pollTimer);
    pollTimer = window.setInterval(poll, 1000);
  } catch (err) {
    showError(err);
  }
});

async function poll(): Promise<void> {
  if (!sessionId) return;
  try {
    const fresh = await client.getState(sessionId);
    const stepChanged = !snapshot || fresh.step_index !== snapshot.step_index;
    snapshot = fresh;
    renderState();
    if (stepChanged) await refreshCandidates();
  } catch (err) {
    showError(err);
  }
}

async function refreshAll(): Promise<void> {
  renderState();
  await refreshCandidates();
}

function renderState(): void {
  if (!snapshot) return;
  const banner = statusBanner(snapshot);
  els.banner.className = `banner ${banner.cssClass}`;
  els.banner.textContent = banner.headline;
  els.stepInfo.textContent =
    `step ${snapshot.step_index}/${snapshot.step_count - 1} · ` +
    `realized max ρ ${fmtRho(snapshot.max_rho)} · ` +
    `distance to reference ${snapshot.topology_distance}`;
  renderDiagram(els.diagram, snapshot, (text) => {
    els.hover.textContent = text;
  });
  const series = historySeries(snapshot);
  renderSeries(els.chartRho, series.maxRho, { hline: 1.0 });
  renderSeries(els.chartRd, series.redispatchMw, { color: "#a85f2e" });
  renderSeries(els.chartDist, series.topologyDistance, { color: "#7e57c2" });
  renderStaged();
  renderAudit();
}

async function refreshCandidates(): Promise<void> {
  if (!sessionId || !snapshot) return;
  try {
    lastCandidates = await client.getCandidates(sessionId);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      lastCandidates = null;
    } else {
      showError(err);
      return;
    }
  }
  renderCandidates();
}

function renderCandidates(): void {
  els.candidates.replaceChildren();
  if (!lastCandidates || lastCandidates.recommendations.length === 0) {
    const note = document.createElement("p");
    note.className = "note";
    note.textContent = lastCandidates?.note || "grid is safe — no action needed";
    els.candidates.appendChild(note);
    return;
  }
  const table = document.createElement("table");
  table.innerHTML =
    "<thead><tr><th>#</th><th>action</th><th>projected max ρ</th>" +
    "<th></th><th>N-1</th><th></th></tr></thead>";
  const body = document.createElement("tbody");
  for (const row of candidateRows(lastCandidates)) {
    const tr = document.createElement("tr");
    tr.className = `cand ${row.band}`;
    const spark = sparkline(
      row.projected.map((v) => (v === "inf" ? Infinity : v)),
    );
    tr.innerHTML =
      `<td>${row.rank}</td><td class="label">${row.label}</td>` +
      `<td>${row.projectedText}</td><td class="spark"></td>` +
      `<td><span class="badge ${row.n1Violations ? "bad" : "good"}">` +
      `${row.n1Badge}</span></td>` +
      `<td><button class="stage">confirm</button></td>`;
    tr.querySelector(".spark")!.appendChild(spark);
    tr.addEventListener("click", () => openWhatIf(row.action));
    tr.querySelector(".stage")!.addEventListener("click", async (ev) => {
      ev.stopPropagation();
      try {
        await client.applyCandidate(sessionId!, row.candidateId);
        snapshot = await client.getState(sessionId!);
        renderState();
      } catch (err) {
        showError(err);
      }
    });
    body.appendChild(tr);
  }
  table.appendChild(body);
  els.candidates.appendChild(table);
}

async function openWhatIf(action: ActionSpec): Promise<void> {
  if (!sessionId || !snapshot) return;
  els.whatif.replaceChildren();
  const title = document.createElement("h3");
  title.textContent = `what-if: ${describeAction(action)}`;
  els.whatif.appendChild(title);
  try {
    const rec = await client.simulate(sessionId, action);
    const proj = document.createElement("p");
    proj.textContent =
      `projected max ρ ${rec.projected_max_rho.map(fmtRho).join(" → ")} · ` +
      `N-1 violations ${rec.n1.violations}/${rec.n1.screened}`;
    els.whatif.appendChild(proj);
    const list = document.createElement("ul");
    // per-line movement comes from the service's one-step projection;
    // nothing is recomputed client-side
    for (const d of whatIfDeltas(snapshot, rec.post_lines)) {
      const li = document.createElement("li");
      li.textContent =
        `${d.line}: ${(d.before * 100).toFixed(1)}% → ${(d.after * 100).toFixed(1)}%`;
      li.className = d.band;
      list.appendChild(li);
    }
    els.whatif.appendChild(list);
  } catch (err) {
    const msg = document.createElement("p");
    msg.className = "rejection";
    msg.textContent =
      err instanceof ApiError
        ? `rejected: ${err.body.message}${err.body.detail ? ` — ${err.body.detail}` : ""}`
        : String(err);
    els.whatif.appendChild(msg);
  }
}

function renderStaged(): void {
  if (!snapshot) return;
  els.staged.textContent = snapshot.staged_action
    ? `staged: ${describeAction(snapshot.staged_action)} (executes next advance)`
    : "nothing staged";
  els.staged.className = snapshot.staged_action ? "staged armed" : "staged";
}

els.advanceBtn.addEventListener("click", async () => {
  if (!sessionId || !snapshot) return;
  if (!snapshot.staged_action) {
    const goOn = window.confirm(
      "Nothing is staged: advancing will apply a no-operation step. Continue?",
    );
    if (!goOn) return;
  }
  try {
    snapshot = await client.advance(sessionId, 1);
    renderState();
    await refreshCandidates();
  } catch (err) {
    showError(err);
  }
});

function renderAudit(): void {
  if (!snapshot) return;
  els.audit.replaceChildren();
  for (const entry of [...snapshot.audit_tail].reverse()) {
    const li = document.createElement("li");
    li.textContent =
      `[${entry.index}] step ${entry.step} ${entry.actor} ${entry.kind}: ` +
      `${describeAction(entry.action)} → ${entry.outcome}`;
    li.className = entry.actor;
    els.audit.appendChild(li);
  }
}

function showError(err: unknown): void {
  els.banner.className = "banner critical";
  els.banner.textContent =
    err instanceof ApiError
      ? `${err.body.code}: ${err.body.message}`
      : `error: ${String(err)}`;
}
