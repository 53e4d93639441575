// Prompt editor model: slot-structured drafts, server-side preview, and
// inline violation reporting. Rendering itself always happens server-side.

import { ApiError, type ApiClient } from "./api.js";
import type { TemplateDoc, TemplateDraft } from "./types.js";

export function emptyDraft(id: string): TemplateDraft {
  return {
    id,
    topic_title: "",
    role_preamble: "You are a professor in computer science conducting a literature review.",
    aspects: [],
    exclusion_rules: [],
    inclusion_rules: [],
    output_instruction:
      "Below is the title and abstract. You must only answer with INCLUDE or DISCARD " +
      "and a 2-sentence reason of why.",
  };
}

export function draftFrom(doc: TemplateDoc): TemplateDraft {
  const { version: _version, ...draft } = doc;
  return structuredClone(draft);
}

export interface PreviewResult {
  text: string;
  violations: string[];
}

type PromptApi = Pick<ApiClient, "previewTemplate" | "saveTemplate">;

/** Server-rendered preview; invalid drafts come back as violations, not text. */
export async function previewDraft(
  api: PromptApi,
  draft: TemplateDraft,
  corpusId: string,
  paperId: string,
): Promise<PreviewResult> {
  try {
    const { text } = await api.previewTemplate(draft, corpusId, paperId);
    return { text, violations: [] };
  } catch (error) {
    if (error instanceof ApiError && error.violations.length) {
      return { text: "", violations: error.violations };
    }
    throw error;
  }
}

export interface SaveResult {
  template: TemplateDoc | null;
  violations: string[];
}

export async function saveDraft(api: PromptApi, draft: TemplateDraft): Promise<SaveResult> {
  try {
    const template = await api.saveTemplate(draft);
    return { template, violations: [] };
  } catch (error) {
    if (error instanceof ApiError && error.violations.length) {
      return { template: null, violations: error.violations };
    }
    throw error;
  }
}
