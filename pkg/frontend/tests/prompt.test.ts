import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { draftFrom, emptyDraft, previewDraft, saveDraft } from "../src/prompt.js";
import type { TemplateDoc, TemplateDraft } from "../src/types.js";
import { recorded } from "./recorded.js";

describe("drafts", () => {
  it("strips the version when editing an existing template", () => {
    const draft = draftFrom(recorded.template());
    expect("version" in draft).toBe(false);
    expect(draft.topic_title).toBe(recorded.template().topic_title);
  });

  it("empty draft carries the default verdict instruction", () => {
    const draft = emptyDraft("t");
    expect(draft.output_instruction).toContain("INCLUDE");
    expect(draft.output_instruction).toContain("DISCARD");
  });
});

describe("previewDraft", () => {
  const draft = draftFrom(recorded.template());

  it("returns the server-rendered text verbatim", async () => {
    const api = {
      previewTemplate: async (_d: TemplateDraft, _c: string, _p: string) => recorded.preview(),
      saveTemplate: async () => recorded.template(),
    };
    const result = await previewDraft(api, draft, "c1", "p001");
    expect(result.text).toBe(recorded.preview().text);
    expect(result.violations).toEqual([]);
  });

  it("surfaces template violations inline instead of throwing", async () => {
    const api = {
      previewTemplate: async () => {
        throw new ApiError("invalid template", 422, ["topic_title: must be non-empty"]);
      },
      saveTemplate: async () => recorded.template(),
    };
    const result = await previewDraft(api, { ...draft, topic_title: "" }, "c1", "p001");
    expect(result.text).toBe("");
    expect(result.violations).toEqual(["topic_title: must be non-empty"]);
  });

  it("re-throws non-validation failures", async () => {
    const api = {
      previewTemplate: async () => {
        throw new ApiError("corpus missing", 404);
      },
      saveTemplate: async () => recorded.template(),
    };
    await expect(previewDraft(api, draft, "nope", "p001")).rejects.toThrow("corpus missing");
  });
});

describe("saveDraft", () => {
  it("returns the saved template with its new version", async () => {
    const saved: TemplateDoc = { ...recorded.template(), version: 2 };
    const api = {
      previewTemplate: async () => recorded.preview(),
      saveTemplate: async () => saved,
    };
    const result = await saveDraft(api, draftFrom(recorded.template()));
    expect(result.template!.version).toBe(2);
    expect(result.violations).toEqual([]);
  });
});
