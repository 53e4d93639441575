// Consensus panel controller: agent toggles and scheme changes re-apply the
// scheme server-side and swap in the freshly fetched stats snapshot. A
// sequence guard drops late responses so no stale metric is ever shown.

import type { ApiClient } from "./api.js";
import type { AmbiguousPolicy, ApplyResponse, SchemeKind, StatsPayload } from "./types.js";

export interface ConsensusSnapshot {
  applicationId: string;
  results: ApplyResponse["results"];
  stats: StatsPayload;
}

type ApplyApi = Pick<ApiClient, "createScheme" | "applyScheme" | "stats">;

export class ConsensusController {
  participants: string[] = [];
  kind: SchemeKind = "ANY_INCLUDE";
  k = 1;
  policy: AmbiguousPolicy = "COUNT_AS_INCLUDE";
  current: ConsensusSnapshot | null = null;

  private runIds: string[] = [];
  private sequence = 0;

  constructor(
    private readonly api: ApplyApi,
    private readonly onChange: (snapshot: ConsensusSnapshot) => void = () => {},
  ) {}

  setRuns(runIds: string[], agentIds: string[]): void {
    this.runIds = [...runIds];
    this.participants = [...agentIds];
  }

  toggleAgent(agentId: string): string[] {
    if (this.participants.includes(agentId)) {
      this.participants = this.participants.filter((a) => a !== agentId);
    } else {
      this.participants = [...this.participants, agentId];
    }
    if (this.k > Math.max(1, this.participants.length)) {
      this.k = this.participants.length || 1;
    }
    return this.participants;
  }

  setScheme(kind: SchemeKind, k = 1): void {
    this.kind = kind;
    this.k = kind === "ANY_INCLUDE" ? 1 : k;
  }

  schemeId(): string {
    const quorum = this.kind === "THRESHOLD" ? `-k${this.k}` : "";
    const policy = this.policy === "COUNT_AS_ABSTAIN" ? "-abstain" : "";
    return `${this.kind.toLowerCase()}${quorum}${policy}-${[...this.participants].sort().join("+")}`;
  }

  /** Apply the current scheme and fetch its stats; only the latest call wins. */
  async apply(): Promise<ConsensusSnapshot | null> {
    if (!this.participants.length || !this.runIds.length) {
      return null;
    }
    const ticket = ++this.sequence;
    const scheme = {
      id: this.schemeId(),
      kind: this.kind,
      k: this.k,
      agent_ids: [...this.participants],
      ambiguous_policy: this.policy,
    };
    await this.api.createScheme(scheme);
    const applied = await this.api.applyScheme(scheme.id, this.runIds);
    const stats = await this.api.stats(applied.application_id);
    if (ticket !== this.sequence) {
      return null; // superseded by a newer toggle
    }
    this.current = {
      applicationId: applied.application_id,
      results: applied.results,
      stats,
    };
    this.onChange(this.current);
    return this.current;
  }
}

export function metricCellsHtml(stats: StatsPayload): string {
  const scored = stats.consensus?.scored;
  if (!scored) {
    return `<p class="muted">No ground-truth labels; counts only.</p>`;
  }
  const m = scored.metrics;
  const fmt = (v: number | null) => (v === null ? "n/a" : v.toFixed(2));
  return (
    `<dl class="metric-cells">` +
    `<dt>TP</dt><dd data-metric="tp">${scored.counts.tp}</dd>` +
    `<dt>FP</dt><dd data-metric="fp">${scored.counts.fp}</dd>` +
    `<dt>TN</dt><dd data-metric="tn">${scored.counts.tn}</dd>` +
    `<dt>FN</dt><dd data-metric="fn">${scored.counts.fn}</dd>` +
    `<dt>Acc.</dt><dd data-metric="accuracy">${fmt(m.accuracy)}</dd>` +
    `<dt>Prec.</dt><dd data-metric="precision">${fmt(m.precision)}</dd>` +
    `<dt>Rec.</dt><dd data-metric="recall">${fmt(m.recall)}</dd>` +
    `<dt>F1</dt><dd data-metric="f1">${fmt(m.f1)}</dd>` +
    `</dl>`
  );
}
