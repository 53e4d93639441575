// Paper table model: join papers with per-agent decisions and consensus
// rows, filter/sort them, and render only the virtualized window.

import type { ConsensusRow, Decision, Paper, Verdict } from "./types.js";

export interface TableRow {
  paperId: string;
  title: string;
  year: number | null;
  doi: string | null;
  finalVerdict: Verdict | "";
  flagged: boolean;
  verdicts: Record<string, Verdict | undefined>;
  justifications: Record<string, string>;
}

export function buildRows(
  papers: Paper[],
  decisions: Decision[],
  consensus?: ConsensusRow[],
): TableRow[] {
  const byPaper = new Map<string, Decision[]>();
  for (const decision of decisions) {
    const bucket = byPaper.get(decision.paper_id);
    if (bucket) {
      bucket.push(decision);
    } else {
      byPaper.set(decision.paper_id, [decision]);
    }
  }
  const consensusByPaper = new Map<string, ConsensusRow>();
  for (const row of consensus ?? []) {
    consensusByPaper.set(row.paper_id, row);
  }

  return papers.map((paper) => {
    const verdicts: Record<string, Verdict | undefined> = {};
    const justifications: Record<string, string> = {};
    let anyUncertain = false;
    for (const decision of byPaper.get(paper.id) ?? []) {
      verdicts[decision.agent_id] = decision.verdict;
      justifications[decision.agent_id] = decision.justification;
      if (decision.verdict === "AMBIGUOUS" || decision.verdict === "ERROR") {
        anyUncertain = true;
      }
    }
    const consensusRow = consensusByPaper.get(paper.id);
    return {
      paperId: paper.id,
      title: paper.title,
      year: paper.year,
      doi: paper.doi,
      finalVerdict: consensusRow?.final_verdict ?? "",
      flagged: consensusRow?.flagged_for_review ?? anyUncertain,
      verdicts,
      justifications,
    };
  });
}

export interface TableFilter {
  text: string;
  verdict: Verdict | "";
  flaggedOnly: boolean;
}

export const EMPTY_FILTER: TableFilter = { text: "", verdict: "", flaggedOnly: false };

export function filterRows(rows: TableRow[], filter: TableFilter): TableRow[] {
  const needle = filter.text.trim().toLowerCase();
  return rows.filter((row) => {
    if (filter.flaggedOnly && !row.flagged) return false;
    if (filter.verdict) {
      const chips = Object.values(row.verdicts);
      const matches = row.finalVerdict === filter.verdict || chips.includes(filter.verdict);
      if (!matches) return false;
    }
    if (needle) {
      const haystack = `${row.paperId} ${row.title}`.toLowerCase();
      if (!haystack.includes(needle)) return false;
    }
    return true;
  });
}

export type SortKey = "paperId" | "title" | "year" | "finalVerdict";

export function sortRows(rows: TableRow[], key: SortKey, ascending = true): TableRow[] {
  const direction = ascending ? 1 : -1;
  return [...rows].sort((a, b) => {
    const left = a[key] ?? "";
    const right = b[key] ?? "";
    if (left < right) return -direction;
    if (left > right) return direction;
    return a.paperId < b.paperId ? -1 : a.paperId > b.paperId ? 1 : 0;
  });
}

export interface VirtualWindow {
  start: number;
  end: number; // exclusive
  padTop: number;
  padBottom: number;
}

// Only the rows inside the viewport (plus overscan) are materialized, so
// interaction cost depends on viewport height, not corpus size.
export function virtualWindow(
  total: number,
  rowHeight: number,
  scrollTop: number,
  viewportHeight: number,
  overscan = 5,
): VirtualWindow {
  const first = Math.floor(scrollTop / rowHeight);
  const visible = Math.ceil(viewportHeight / rowHeight);
  const start = Math.max(0, first - overscan);
  const end = Math.min(total, first + visible + overscan);
  return {
    start,
    end,
    padTop: start * rowHeight,
    padBottom: Math.max(0, (total - end) * rowHeight),
  };
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function verdictChip(agentId: string, verdict: Verdict | undefined): string {
  if (!verdict) {
    return `<span class="chip chip-missing" data-agent="${escapeHtml(agentId)}">–</span>`;
  }
  const cls = `chip chip-${verdict.toLowerCase()}`;
  const badge = verdict === "AMBIGUOUS" || verdict === "ERROR" ? " ⚠" : "";
  return `<span class="${cls}" data-agent="${escapeHtml(agentId)}">${verdict}${badge}</span>`;
}

export function renderRowsHtml(
  rows: TableRow[],
  agentIds: string[],
  window: VirtualWindow,
): string {
  const parts: string[] = [];
  for (let i = window.start; i < window.end; i++) {
    const row = rows[i];
    const chips = agentIds.map((agent) => verdictChip(agent, row.verdicts[agent])).join("");
    const flag = row.flagged ? '<span class="flag" title="needs review">⚠</span>' : "";
    const final = row.finalVerdict
      ? `<span class="chip chip-${row.finalVerdict.toLowerCase()}">${row.finalVerdict}</span>`
      : "";
    const justifications = agentIds
      .map((agent) => {
        const text = row.justifications[agent];
        if (!text) return "";
        return `<p class="justification"><strong>${escapeHtml(agent)}:</strong> ${escapeHtml(text)}</p>`;
      })
      .join("");
    parts.push(
      `<details class="paper-row" data-paper="${escapeHtml(row.paperId)}">` +
        `<summary>` +
        `<span class="col-id">${escapeHtml(row.paperId)}</span>` +
        `<span class="col-title">${escapeHtml(row.title)}</span>` +
        `<span class="col-year">${row.year ?? ""}</span>` +
        `<span class="col-final">${final}${flag}</span>` +
        `<span class="col-chips">${chips}</span>` +
        `</summary>` +
        justifications +
        `</details>`,
    );
  }
  return parts.join("\n");
}
