/** Server payload shapes; the UI displays these verbatim and never
 *  recomputes any statistic client-side. */

export type CitationStatus = "valid_in_corpus" | "valid_retrieved" | "unknown_pmid";
export type SectionName = "definition" | "main" | "future";

export interface Citation {
  pmid: number;
  section: SectionName;
  start: number;
  end: number;
  status: CitationStatus;
}

export interface TopicPageJson {
  schema_version: number;
  entity_name: string;
  sections: {
    definition: string;
    main_content: string;
    future_directions: string;
  };
  citations: Citation[];
  structure_failure: boolean;
  metadata: {
    query: string;
    atm_translation: string;
    total_count: number;
    cluster_count: number;
    threshold_used: number;
    skipped_clustering: boolean;
    sampler_seed: number;
    model_id: string;
    generated_at: string;
  };
}

export interface ProgressEvent {
  timestamp: number;
  stage: string;
  message: string;
  stats: Record<string, unknown>;
}

export type JobState =
  | "queued"
  | "searching"
  | "embedding"
  | "clustering"
  | "sampling"
  | "generating"
  | "postprocessing"
  | "done"
  | "failed";

export const JOB_STATE_ORDER: JobState[] = [
  "queued",
  "searching",
  "embedding",
  "clustering",
  "sampling",
  "generating",
  "postprocessing",
  "done",
  "failed",
];

export interface JobSnapshot {
  id: string;
  state: JobState;
  request: {
    query: string;
    canonical_names: string[];
    overrides: Record<string, unknown>;
  };
  progress: ProgressEvent[];
  error: string | null;
  error_type: string | null;
}

/** Client-only render state; never written back to the server. */
export interface JobView {
  job: JobSnapshot;
  pageJson: string | null; // verbatim server export, used for download
  page: TopicPageJson | null;
  detailsExpanded: boolean;
  stale: boolean; // last poll failed, data may be out of date
}

export function isSchemaValidPage(data: unknown): data is TopicPageJson {
  if (typeof data !== "object" || data === null) return false;
  const page = data as Record<string, unknown>;
  if (page.schema_version !== 1) return false;
  const sections = page.sections as Record<string, unknown> | undefined;
  return (
    typeof page.entity_name === "string" &&
    typeof sections === "object" &&
    sections !== null &&
    typeof sections.definition === "string" &&
    typeof sections.main_content === "string" &&
    typeof sections.future_directions === "string" &&
    Array.isArray(page.citations) &&
    typeof page.metadata === "object" &&
    page.metadata !== null
  );
}
