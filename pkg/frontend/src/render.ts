/** Pure HTML renderers for topic pages and job detail panels.
 *
 *  Every number shown comes straight from a server payload; citations are
 *  turned into PubMed hyperlinks using the character spans the server
 *  computed, and unverified PMIDs are visually flagged.
 */

import type { Citation, JobSnapshot, SectionName, TopicPageJson } from "./types.js";
import { JOB_STATE_ORDER, isSchemaValidPage } from "./types.js";

export const PUBMED_URL = "https://pubmed.ncbi.nlm.nih.gov";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function citationLink(citation: Citation, label: string): string {
  const href = `${PUBMED_URL}/${citation.pmid}/`;
  const flagged = citation.status === "unknown_pmid";
  const cls = flagged ? "citation unknown-pmid" : "citation";
  const marker = flagged ? '<span class="flag" title="PMID not found in the sampled literature">&#9888;</span>' : "";
  return `<a class="${cls}" href="${href}">${escapeHtml(label)}</a>${marker}`;
}

/** Section text with its citation spans replaced by hyperlinks. */
export function renderSection(text: string, citations: Citation[]): string {
  const ordered = [...citations].sort((a, b) => a.start - b.start);
  let html = "";
  let cursor = 0;
  for (const citation of ordered) {
    html += escapeHtml(text.slice(cursor, citation.start));
    html += citationLink(citation, text.slice(citation.start, citation.end));
    cursor = citation.end;
  }
  html += escapeHtml(text.slice(cursor));
  return html;
}

const SECTION_LABELS: [SectionName, keyof TopicPageJson["sections"], string][] = [
  ["definition", "definition", "Definition"],
  ["main", "main_content", "Main Content"],
  ["future", "future_directions", "Future Directions"],
];

/** Whole topic page as a document view; never a blank page: schema
 *  mismatches render an error banner instead. */
export function renderTopicPage(data: unknown): string {
  if (!isSchemaValidPage(data)) {
    return '<div class="error-banner">The server returned a topic page in an unexpected format.</div>';
  }
  const parts: string[] = [`<article class="topic-page">`];
  parts.push(`<h1>${escapeHtml(data.entity_name)}</h1>`);
  if (data.structure_failure) {
    parts.push('<div class="warning-banner">Section structure was recovered heuristically.</div>');
  }
  for (const [section, key, label] of SECTION_LABELS) {
    const citations = data.citations.filter((c) => c.section === section);
    parts.push(`<section class="${section}">`);
    parts.push(`<h2>${label}</h2>`);
    parts.push(`<p>${renderSection(data.sections[key], citations)}</p>`);
    parts.push(`</section>`);
  }
  parts.push(`</article>`);
  return parts.join("\n");
}

/** Bar chart of publications per year; heights are the server counts. */
export function renderHistogram(perYear: Record<string, number>): string {
  const years = Object.keys(perYear).sort();
  if (years.length === 0) return "";
  const max = Math.max(...years.map((y) => perYear[y]));
  const bars = years
    .map((year) => {
      const count = perYear[year];
      const pct = max > 0 ? Math.round((count / max) * 100) : 0;
      return (
        `<div class="bar" data-year="${year}" data-count="${count}" ` +
        `style="height: ${pct}%" title="${year}: ${count}"></div>`
      );
    })
    .join("\n");
  return `<div class="histogram">\n${bars}\n</div>`;
}

function stageIndicator(state: string): string {
  const steps = JOB_STATE_ORDER.filter((s) => s !== "failed")
    .map((s) => {
      const reached =
        JOB_STATE_ORDER.indexOf(s) <= JOB_STATE_ORDER.indexOf(state as never);
      const current = s === state ? " current" : "";
      return `<li class="stage${reached ? " reached" : ""}${current}">${s}</li>`;
    })
    .join("");
  return `<ol class="stages">${steps}</ol>`;
}

/** Expandable details: ATM expansion, totals, per-year chart, clustering
 *  outcome, and a live stage indicator for in-flight jobs. */
export function renderDetails(job: JobSnapshot, page: TopicPageJson | null): string {
  const parts: string[] = ['<div class="job-details">'];
  parts.push(stageIndicator(job.state));

  const search = job.progress.find((ev) => ev.stage === "searching");
  const atm =
    (search?.stats["atm_translation"] as string | undefined) ??
    page?.metadata.atm_translation ??
    "";
  if (atm) {
    parts.push(`<p class="atm">Query expansion: <code>${escapeHtml(atm)}</code></p>`);
  }
  const totalCount =
    (search?.stats["total_count"] as number | undefined) ?? page?.metadata.total_count;
  if (totalCount !== undefined) {
    parts.push(`<p class="total">Total publications: ${totalCount}</p>`);
  }

  const perYear = histogramFromStats(job, page);
  const chart = renderHistogram(perYear);
  if (chart) parts.push(chart);

  const clustering = job.progress.find((ev) => ev.stage === "clustering");
  const skipped =
    (clustering?.stats["skipped"] as boolean | undefined) ??
    page?.metadata.skipped_clustering;
  if (skipped === true) {
    parts.push('<p class="clusters">Clustering skipped for this corpus.</p>');
  } else if (skipped === false) {
    const count =
      (clustering?.stats["clusters"] as number | undefined) ?? page?.metadata.cluster_count;
    const threshold =
      (clustering?.stats["threshold_used"] as number | undefined) ??
      page?.metadata.threshold_used;
    parts.push(
      `<p class="clusters">Clusters identified: ${count} (similarity threshold ${threshold})</p>`,
    );
  }

  if (job.error) {
    parts.push(`<p class="error">${escapeHtml(job.error_type ?? "Error")}: ${escapeHtml(job.error)}</p>`);
  }
  parts.push("</div>");
  return parts.join("\n");
}

/** The server does not ship the histogram in job progress; it arrives on
 *  demand. Callers can stash it in stats under "pubs_per_year". */
function histogramFromStats(job: JobSnapshot, _page: TopicPageJson | null): Record<string, number> {
  const search = job.progress.find((ev) => ev.stage === "searching");
  const hist = search?.stats["pubs_per_year"];
  if (hist && typeof hist === "object") return hist as Record<string, number>;
  return {};
}
