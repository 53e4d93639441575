// Run panel: launch subset or full runs and poll progress until terminal.

import type { ApiClient } from "./api.js";
import type { RunView } from "./types.js";

export const POLL_INTERVAL_MS = 2000;

export interface RunRequest {
  corpusId: string;
  templateId: string;
  templateVersion?: number;
  agentIds: string[];
  scope?: string[]; // omitted = whole corpus
}

type RunApi = Pick<ApiClient, "createRun" | "getRun">;

export async function launchRun(api: RunApi, request: RunRequest): Promise<RunView> {
  return api.createRun({
    corpus_id: request.corpusId,
    template_id: request.templateId,
    template_version: request.templateVersion,
    agent_ids: request.agentIds,
    scope: request.scope,
  });
}

const wait = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export interface PollOptions {
  intervalMs?: number;
  sleep?: (ms: number) => Promise<void>;
  onProgress?: (view: RunView) => void;
}

export async function pollRun(
  api: RunApi,
  runId: string,
  options: PollOptions = {},
): Promise<RunView> {
  const intervalMs = options.intervalMs ?? POLL_INTERVAL_MS;
  const sleep = options.sleep ?? wait;
  for (;;) {
    const view = await api.getRun(runId);
    options.onProgress?.(view);
    if (view.status === "complete" || view.status === "failed" || view.status === "paused") {
      return view;
    }
    await sleep(intervalMs);
  }
}

export function progressLabel(view: RunView): string {
  const { done, total } = view.progress;
  const percent = total === 0 ? 100 : Math.floor((done / total) * 100);
  return `${view.status} ${done}/${total} (${percent}%)`;
}
