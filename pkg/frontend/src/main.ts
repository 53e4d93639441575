// Dashboard wiring: one page, five panels (paper table, prompt editor,
// run panel, consensus panel, charts), all state fetched from the API.

import { ApiClient, ApiError } from "./api.js";
import {
  agreementChartHtml,
  agreementMatrixHtml,
  agreementSeries,
  distributionChartHtml,
  distributionSeries,
} from "./charts.js";
import { ConsensusController, metricCellsHtml } from "./consensus.js";
import { draftFrom, emptyDraft, previewDraft, saveDraft } from "./prompt.js";
import { launchRun, pollRun, progressLabel } from "./runs.js";
import {
  EMPTY_FILTER,
  type SortKey,
  type TableFilter,
  type TableRow,
  buildRows,
  filterRows,
  renderRowsHtml,
  sortRows,
  virtualWindow,
} from "./table.js";
import type { ConsensusRow, Decision, Paper, TemplateDraft, Verdict } from "./types.js";

const api = new ApiClient("");

const $ = <T extends HTMLElement>(selector: string): T => {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element: ${selector}`);
  return el;
};

const ROW_HEIGHT = 32;

const state = {
  corpusId: "main",
  papers: [] as Paper[],
  decisions: [] as Decision[],
  consensus: undefined as ConsensusRow[] | undefined,
  agentIds: [] as string[],
  rows: [] as TableRow[],
  visibleRows: [] as TableRow[],
  filter: { ...EMPTY_FILTER } as TableFilter,
  sortKey: "paperId" as SortKey,
  sortAscending: true,
  runId: null as string | null,
  draft: emptyDraft("template-1") as TemplateDraft,
};

function toast(message: string, isError = false): void {
  const el = $("#toast");
  el.textContent = message;
  el.className = isError ? "toast error show" : "toast show";
  setTimeout(() => el.classList.remove("show"), 4000);
}

function reportError(error: unknown): void {
  if (error instanceof ApiError) {
    toast(`${error.status}: ${error.message}`, true);
  } else {
    toast(String(error), true);
  }
}

// ── paper table ──────────────────────────────────────────────────────

function rebuildRows(): void {
  state.rows = buildRows(state.papers, state.decisions, state.consensus);
  refreshTable();
}

function refreshTable(): void {
  const filtered = filterRows(state.rows, state.filter);
  state.visibleRows = sortRows(filtered, state.sortKey, state.sortAscending);
  $("#table-count").textContent = `${state.visibleRows.length} of ${state.rows.length} papers`;
  renderVisibleWindow();
}

function renderVisibleWindow(): void {
  const viewport = $("#table-viewport");
  const total = state.visibleRows.length;
  const win = virtualWindow(total, ROW_HEIGHT, viewport.scrollTop, viewport.clientHeight || 480);
  const body = $("#table-body");
  body.style.paddingTop = `${win.padTop}px`;
  body.style.paddingBottom = `${win.padBottom}px`;
  body.innerHTML = total
    ? renderRowsHtml(state.visibleRows, state.agentIds, win)
    : '<p class="empty-state">No papers loaded. Upload a BibTeX export to begin.</p>';
}

async function loadPapers(): Promise<void> {
  try {
    const { papers } = await api.listPapers(state.corpusId);
    state.papers = papers;
    rebuildRows();
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      state.papers = [];
      rebuildRows();
    } else {
      reportError(error);
    }
  }
}

// ── prompt editor ────────────────────────────────────────────────────

function draftFromForm(): TemplateDraft {
  const lines = (value: string) =>
    value.split("\n").map((line) => line.trim()).filter(Boolean);
  const aspects = lines(($("#aspects") as HTMLTextAreaElement).value).map((line) => {
    const [name, terms = ""] = line.split(":");
    return {
      name: name.trim(),
      example_terms: terms.split(",").map((t) => t.trim()).filter(Boolean),
    };
  });
  return {
    ...state.draft,
    topic_title: ($("#topic-title") as HTMLInputElement).value,
    role_preamble: ($("#role-preamble") as HTMLInputElement).value,
    aspects,
    exclusion_rules: lines(($("#exclusion-rules") as HTMLTextAreaElement).value),
    inclusion_rules: lines(($("#inclusion-rules") as HTMLTextAreaElement).value),
  };
}

async function refreshPreview(): Promise<void> {
  const paperId = ($("#preview-paper") as HTMLSelectElement).value || state.papers[0]?.id;
  if (!paperId) return;
  try {
    const result = await previewDraft(api, draftFromForm(), state.corpusId, paperId);
    $("#violations").innerHTML = result.violations
      .map((v) => `<li>${v}</li>`)
      .join("");
    $("#preview").textContent = result.text || "(template invalid)";
  } catch (error) {
    reportError(error);
  }
}

// ── run + consensus panels ───────────────────────────────────────────

const consensusController = new ConsensusController(api, (snapshot) => {
  $("#consensus-metrics").innerHTML = metricCellsHtml(snapshot.stats);
  $("#consensus-summary").textContent =
    `${snapshot.stats.consensus?.includes ?? 0} included / ` +
    `${snapshot.stats.consensus?.discards ?? 0} discarded / ` +
    `${snapshot.stats.consensus?.flagged ?? 0} flagged`;
  state.consensus = snapshot.results;
  rebuildRows();
  renderCharts(snapshot.stats);
});

function renderCharts(stats: Parameters<typeof distributionSeries>[0]): void {
  $("#distribution-chart").innerHTML = distributionChartHtml(distributionSeries(stats));
  const agreement = agreementSeries(stats);
  $("#agreement-chart").innerHTML = agreement
    ? agreementChartHtml(agreement) + agreementMatrixHtml(agreement)
    : '<p class="muted">Agreement needs at least two agents.</p>';
}

function renderAgentToggles(): void {
  const container = $("#agent-toggles");
  container.innerHTML = state.agentIds
    .map((agentId) => {
      const active = consensusController.participants.includes(agentId);
      return (
        `<label class="agent-toggle"><input type="checkbox" data-agent="${agentId}" ` +
        `${active ? "checked" : ""}/> ${agentId}</label>`
      );
    })
    .join("");
  container.querySelectorAll("input[data-agent]").forEach((input) => {
    input.addEventListener("change", async () => {
      consensusController.toggleAgent((input as HTMLInputElement).dataset.agent!);
      try {
        await consensusController.apply();
      } catch (error) {
        reportError(error);
      }
    });
  });
}

async function startRun(scopeIds?: string[]): Promise<void> {
  const { agents } = await api.listAgents();
  state.agentIds = agents.map((a) => a.id);
  if (!state.agentIds.length) {
    toast("register at least one agent first", true);
    return;
  }
  const saved = await saveDraft(api, draftFromForm());
  if (!saved.template) {
    $("#violations").innerHTML = saved.violations.map((v) => `<li>${v}</li>`).join("");
    return;
  }
  const view = await launchRun(api, {
    corpusId: state.corpusId,
    templateId: saved.template.id,
    templateVersion: saved.template.version,
    agentIds: state.agentIds,
    scope: scopeIds,
  });
  state.runId = view.id;
  $("#run-status").textContent = progressLabel(view);
  const final = await pollRun(api, view.id, {
    onProgress: (v) => {
      $("#run-status").textContent = progressLabel(v);
    },
  });
  if (final.status === "failed") {
    toast(`run failed: ${final.error}`, true);
    return;
  }
  const { decisions } = await api.runDecisions(view.id);
  state.decisions = decisions;
  rebuildRows();
  consensusController.setRuns([view.id], state.agentIds);
  renderAgentToggles();
  await consensusController.apply();
}

// ── bootstrapping ────────────────────────────────────────────────────

function bindEvents(): void {
  $("#table-viewport").addEventListener("scroll", renderVisibleWindow);
  ($("#filter-text") as HTMLInputElement).addEventListener("input", (event) => {
    state.filter = { ...state.filter, text: (event.target as HTMLInputElement).value };
    refreshTable();
  });
  ($("#filter-verdict") as HTMLSelectElement).addEventListener("change", (event) => {
    state.filter = {
      ...state.filter,
      verdict: (event.target as HTMLSelectElement).value as Verdict | "",
    };
    refreshTable();
  });
  ($("#filter-flagged") as HTMLInputElement).addEventListener("change", (event) => {
    state.filter = {
      ...state.filter,
      flaggedOnly: (event.target as HTMLInputElement).checked,
    };
    refreshTable();
  });
  document.querySelectorAll("[data-sort]").forEach((el) => {
    el.addEventListener("click", () => {
      const key = (el as HTMLElement).dataset.sort as SortKey;
      state.sortAscending = state.sortKey === key ? !state.sortAscending : true;
      state.sortKey = key;
      refreshTable();
    });
  });

  $("#corpus-upload").addEventListener("change", async (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      const body = await file.text();
      const { report } = await api.uploadBibtex(state.corpusId, body, file.name);
      toast(
        `added ${report.added}, duplicates ${report.duplicates_removed}, ` +
          `non-papers ${report.non_papers_excluded}`,
      );
      await loadPapers();
      const select = $("#preview-paper") as HTMLSelectElement;
      select.innerHTML = state.papers
        .map((p) => `<option value="${p.id}">${p.id}</option>`)
        .join("");
    } catch (error) {
      reportError(error);
    }
  });

  ["#topic-title", "#role-preamble", "#aspects", "#exclusion-rules", "#inclusion-rules"]
    .forEach((selector) => {
      $(selector).addEventListener("change", () => void refreshPreview());
    });
  $("#preview-paper").addEventListener("change", () => void refreshPreview());

  $("#run-full").addEventListener("click", () => void startRun().catch(reportError));
  $("#run-sample").addEventListener("click", () => {
    const sample = state.papers.slice(0, 10).map((p) => p.id);
    void startRun(sample).catch(reportError);
  });

  $("#scheme-kind").addEventListener("change", async (event) => {
    const kind = (event.target as HTMLSelectElement).value as "ANY_INCLUDE" | "THRESHOLD";
    const k = Number(($("#scheme-k") as HTMLInputElement).value) || 1;
    consensusController.setScheme(kind, k);
    if (state.runId) {
      await consensusController.apply().catch(reportError);
    }
  });
  $("#export-link").addEventListener("click", () => {
    const appId = consensusController.current?.applicationId;
    if (appId) {
      window.open(api.exportUrl(appId), "_blank");
    } else {
      toast("apply a consensus scheme first", true);
    }
  });
}

async function init(): Promise<void> {
  bindEvents();
  try {
    const health = await api.health();
    $("#version").textContent = `v${health.version}`;
  } catch {
    toast("API unreachable; is the service running?", true);
  }
  await loadPapers();
  try {
    const { templates } = await api.listTemplates();
    if (templates.length) {
      state.draft = draftFrom(await api.getTemplate(templates[0].id));
      ($("#topic-title") as HTMLInputElement).value = state.draft.topic_title;
      ($("#role-preamble") as HTMLInputElement).value = state.draft.role_preamble;
      ($("#aspects") as HTMLTextAreaElement).value = state.draft.aspects
        .map((a) => `${a.name}: ${a.example_terms.join(", ")}`)
        .join("\n");
      ($("#exclusion-rules") as HTMLTextAreaElement).value =
        state.draft.exclusion_rules.join("\n");
      ($("#inclusion-rules") as HTMLTextAreaElement).value =
        state.draft.inclusion_rules.join("\n");
    }
  } catch (error) {
    reportError(error);
  }
}

void init();
