import { describe, expect, it } from "vitest";

import {
  EMPTY_FILTER,
  buildRows,
  filterRows,
  renderRowsHtml,
  sortRows,
  virtualWindow,
} from "../src/table.js";
import type { Decision, Paper } from "../src/types.js";
import { recorded } from "./recorded.js";

const AGENTS = ["alpha", "beta", "gamma"];

function fixtureRows() {
  return buildRows(recorded.papers(), recorded.decisions(), recorded.applyAll().results);
}

describe("buildRows against the recorded run", () => {
  it("renders one row per paper with the API's verdicts", () => {
    const rows = fixtureRows();
    expect(rows).toHaveLength(50);
    const byId = new Map(rows.map((r) => [r.paperId, r]));

    // Chips must mirror the decisions payload exactly.
    const decisions = recorded.decisions();
    for (const decision of decisions) {
      expect(byId.get(decision.paper_id)!.verdicts[decision.agent_id]).toBe(decision.verdict);
    }

    // Flags and final verdicts come from the consensus payload.
    for (const result of recorded.applyAll().results) {
      const row = byId.get(result.paper_id)!;
      expect(row.finalVerdict).toBe(result.final_verdict);
      expect(row.flagged).toBe(result.flagged_for_review);
    }
  });

  it("knows the scripted ambiguous and error papers", () => {
    const byId = new Map(fixtureRows().map((r) => [r.paperId, r]));
    expect(byId.get("p020")!.verdicts.beta).toBe("AMBIGUOUS");
    expect(byId.get("p020")!.flagged).toBe(true);
    expect(byId.get("p025")!.verdicts.gamma).toBe("ERROR");
    expect(byId.get("p025")!.flagged).toBe(true);
  });

  it("falls back to uncertainty flags when no consensus is selected", () => {
    const rows = buildRows(recorded.papers(), recorded.decisions());
    const flagged = rows.filter((r) => r.flagged).map((r) => r.paperId);
    expect(flagged).toEqual(["p020", "p025"]);
    expect(rows.every((r) => r.finalVerdict === "")).toBe(true);
  });
});

describe("filterRows", () => {
  it("flagged-only returns exactly the API's flagged subset", () => {
    const rows = fixtureRows();
    const flagged = filterRows(rows, { ...EMPTY_FILTER, flaggedOnly: true });
    const expected = recorded.applyAll().results
      .filter((r) => r.flagged_for_review)
      .map((r) => r.paper_id)
      .sort();
    expect(flagged.map((r) => r.paperId).sort()).toEqual(expected);
  });

  it("verdict filter matches chips and final verdicts", () => {
    const rows = fixtureRows();
    const errors = filterRows(rows, { ...EMPTY_FILTER, verdict: "ERROR" });
    expect(errors.map((r) => r.paperId)).toEqual(["p025"]);
  });

  it("text filter is case-insensitive over title and id", () => {
    const rows = fixtureRows();
    expect(filterRows(rows, { ...EMPTY_FILTER, text: "virtual reality" }).length).toBeGreaterThan(0);
    expect(filterRows(rows, { ...EMPTY_FILTER, text: "P025" })).toHaveLength(1);
    expect(filterRows(rows, { ...EMPTY_FILTER, text: "zzz-no-match" })).toHaveLength(0);
  });
});

describe("sortRows", () => {
  it("sorts by title both directions", () => {
    const rows = fixtureRows();
    const ascending = sortRows(rows, "title", true).map((r) => r.title);
    const descending = sortRows(rows, "title", false).map((r) => r.title);
    expect(ascending).toEqual([...ascending].sort());
    expect(descending).toEqual([...ascending].reverse());
  });

  it("is stable on ties via paper id", () => {
    const rows = fixtureRows();
    const sorted = sortRows(rows, "finalVerdict", true);
    const discards = sorted.filter((r) => r.finalVerdict === "DISCARD").map((r) => r.paperId);
    expect(discards).toEqual([...discards].sort());
  });
});

describe("virtualWindow", () => {
  const ROW = 32;

  it("materializes only the viewport slice regardless of total", () => {
    for (const total of [50, 10_000, 1_000_000]) {
      const win = virtualWindow(total, ROW, 0, 480);
      expect(win.start).toBe(0);
      expect(win.end - win.start).toBeLessThanOrEqual(Math.ceil(480 / ROW) + 5);
      expect(win.padTop).toBe(0);
      expect(win.padBottom).toBe((total - win.end) * ROW);
    }
  });

  it("keeps total height constant while scrolling", () => {
    const total = 10_000;
    for (const scrollTop of [0, 999, 55_555, total * ROW - 480]) {
      const win = virtualWindow(total, ROW, scrollTop, 480);
      const height = win.padTop + (win.end - win.start) * ROW + win.padBottom;
      expect(height).toBe(total * ROW);
      expect(win.start).toBeGreaterThanOrEqual(0);
      expect(win.end).toBeLessThanOrEqual(total);
    }
  });

  it("renders a 10k-row corpus window quickly", () => {
    const papers: Paper[] = Array.from({ length: 10_000 }, (_, i) => ({
      id: `x${i.toString().padStart(5, "0")}`,
      title: `Synthetic paper ${i}`,
      abstract: "",
      authors: [],
      year: 2000 + (i % 25),
      venue: null,
      doi: null,
      source: "synthetic",
      entry_kind: "article",
    }));
    const decisions: Decision[] = [];
    const started = performance.now();
    const rows = buildRows(papers, decisions);
    const filtered = filterRows(rows, { ...EMPTY_FILTER, text: "paper 99" });
    const win = virtualWindow(rows.length, ROW, 160_000, 480);
    const html = renderRowsHtml(rows, AGENTS, win);
    const elapsed = performance.now() - started;
    expect(filtered.length).toBeGreaterThan(0);
    expect(html.split("<details").length - 1).toBe(win.end - win.start);
    expect(elapsed).toBeLessThan(500);
  });
});

describe("renderRowsHtml", () => {
  it("escapes HTML in titles and justifications", () => {
    const papers: Paper[] = [{
      id: "p1",
      title: 'Graphs <script>alert("x")</script>',
      abstract: "",
      authors: [],
      year: null,
      venue: null,
      doi: null,
      source: "s",
      entry_kind: "article",
    }];
    const decisions: Decision[] = [{
      paper_id: "p1",
      agent_id: "alpha",
      verdict: "INCLUDE",
      justification: 'contains <b> & "quotes"',
      input_tokens: 0,
      output_tokens: 0,
      latency_ms: 0,
      attempt_count: 1,
    }];
    const rows = buildRows(papers, decisions);
    const html = renderRowsHtml(rows, ["alpha"], virtualWindow(1, 32, 0, 480));
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
    expect(html).toContain("&lt;b&gt; &amp; &quot;quotes&quot;");
  });

  it("matches the snapshot of the first window of the fixture corpus", () => {
    const rows = fixtureRows();
    const win = virtualWindow(rows.length, 32, 0, 160);
    expect(renderRowsHtml(rows, AGENTS, win)).toMatchSnapshot();
  });
});
