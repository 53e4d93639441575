// Chart data extraction and SVG rendering. Extraction passes API numbers
// through untouched; only pixel layout happens here.

import type { StatsPayload, Verdict } from "./types.js";
import { escapeHtml } from "./table.js";

const VERDICTS: Verdict[] = ["INCLUDE", "DISCARD", "AMBIGUOUS", "ERROR"];

const VERDICT_COLOR: Record<Verdict, string> = {
  INCLUDE: "#2e8540",
  DISCARD: "#b23b3b",
  AMBIGUOUS: "#e08e0b",
  ERROR: "#7b1fa2",
};

export interface DistributionSeries {
  agentId: string;
  counts: Record<Verdict, number>;
}

export function distributionSeries(stats: StatsPayload): DistributionSeries[] {
  return Object.keys(stats.distribution)
    .sort()
    .map((agentId) => ({ agentId, counts: stats.distribution[agentId] }));
}

export interface AgreementSeries {
  agents: string[];
  mean: Record<string, number>;
  matrix: Record<string, Record<string, number>>;
  outliers: string[];
}

export function agreementSeries(stats: StatsPayload): AgreementSeries | null {
  if (!stats.agreement) return null;
  return {
    agents: stats.agreement.agents,
    mean: stats.agreement.mean,
    matrix: stats.agreement.matrix,
    outliers: stats.agreement.outliers,
  };
}

const CHART_WIDTH = 420;
const BAR_HEIGHT = 18;
const GROUP_GAP = 10;
const LABEL_WIDTH = 90;

export function distributionChartHtml(series: DistributionSeries[]): string {
  const rows = series.length * VERDICTS.length;
  const height = rows * BAR_HEIGHT + series.length * GROUP_GAP;
  const max = Math.max(
    1,
    ...series.flatMap((s) => VERDICTS.map((v) => s.counts[v] ?? 0)),
  );
  const scale = (CHART_WIDTH - LABEL_WIDTH - 60) / max;

  let y = 0;
  const parts: string[] = [];
  for (const { agentId, counts } of series) {
    for (const verdict of VERDICTS) {
      const count = counts[verdict] ?? 0;
      const width = Math.max(count > 0 ? 1 : 0, count * scale);
      parts.push(
        `<text x="0" y="${y + 13}" class="bar-label">${escapeHtml(agentId)} ${verdict.toLowerCase()}</text>` +
          `<rect x="${LABEL_WIDTH}" y="${y + 2}" width="${width.toFixed(1)}" height="${BAR_HEIGHT - 5}" ` +
          `fill="${VERDICT_COLOR[verdict]}" data-agent="${escapeHtml(agentId)}" data-verdict="${verdict}" data-count="${count}">` +
          `</rect>` +
          `<text x="${LABEL_WIDTH + width + 4}" y="${y + 13}" class="bar-value">${count}</text>`,
      );
      y += BAR_HEIGHT;
    }
    y += GROUP_GAP;
  }
  return (
    `<svg viewBox="0 0 ${CHART_WIDTH} ${height}" role="img" aria-label="classification distribution">` +
    parts.join("") +
    `</svg>`
  );
}

export function agreementChartHtml(series: AgreementSeries): string {
  const height = series.agents.length * (BAR_HEIGHT + 4);
  const scale = CHART_WIDTH - LABEL_WIDTH - 60; // mean agreement is in [0, 1]
  const parts: string[] = [];
  series.agents.forEach((agentId, index) => {
    const mean = series.mean[agentId] ?? 0;
    const outlier = series.outliers.includes(agentId);
    const y = index * (BAR_HEIGHT + 4);
    parts.push(
      `<text x="0" y="${y + 13}" class="bar-label">${escapeHtml(agentId)}</text>` +
        `<rect x="${LABEL_WIDTH}" y="${y + 2}" width="${(mean * scale).toFixed(1)}" height="${BAR_HEIGHT - 4}" ` +
        `class="${outlier ? "agreement-bar outlier" : "agreement-bar"}" data-agent="${escapeHtml(agentId)}" ` +
        `data-mean="${mean}"></rect>` +
        `<text x="${LABEL_WIDTH + mean * scale + 4}" y="${y + 13}" class="bar-value">` +
        `${mean.toFixed(2)}${outlier ? " (outlier)" : ""}</text>`,
    );
  });
  return (
    `<svg viewBox="0 0 ${CHART_WIDTH} ${height}" role="img" aria-label="agreement levels">` +
    parts.join("") +
    `</svg>`
  );
}

export function agreementMatrixHtml(series: AgreementSeries): string {
  const header = series.agents.map((a) => `<th>${escapeHtml(a)}</th>`).join("");
  const body = series.agents
    .map((a) => {
      const cells = series.agents
        .map((b) => `<td data-pair="${escapeHtml(a)}|${escapeHtml(b)}">${series.matrix[a][b].toFixed(2)}</td>`)
        .join("");
      return `<tr><th>${escapeHtml(a)}</th>${cells}</tr>`;
    })
    .join("");
  return `<table class="agreement-matrix"><thead><tr><th></th>${header}</tr></thead><tbody>${body}</tbody></table>`;
}
