/** Browser entry point: wires the form, poller, and renderers together.
 *  Kept free of logic so everything interesting stays unit-testable in
 *  api.ts / render.ts. */

import { ApiClient, submitAndPoll } from "./api.js";
import { renderDetails, renderTopicPage } from "./render.js";
import type { JobSnapshot, TopicPageJson } from "./types.js";

export function mountApp(root: Document, baseUrl = ""): void {
  const form = root.getElementById("query-form") as HTMLFormElement;
  const queryInput = root.getElementById("query") as HTMLInputElement;
  const namesInput = root.getElementById("canonical-names") as HTMLInputElement;
  const pageEl = root.getElementById("page")!;
  const detailsEl = root.getElementById("details")!;
  const staleEl = root.getElementById("stale")!;
  const downloadEl = root.getElementById("download") as HTMLAnchorElement;

  const api = new ApiClient(baseUrl);

  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    pageEl.innerHTML = "";
    downloadEl.hidden = true;
    let latest: JobSnapshot | null = null;
    try {
      const job = await submitAndPoll(
        api,
        {
          query: queryInput.value,
          canonicalNames: namesInput.value
            .split(",")
            .map((s) => s.trim())
            .filter(Boolean),
        },
        {
          onUpdate: (j) => {
            latest = j;
            detailsEl.innerHTML = renderDetails(j, null);
          },
          onStale: (stale) => {
            staleEl.hidden = !stale;
          },
        },
      );
      if (job.state === "done") {
        const text = await api.getPageText(job.id);
        const page = JSON.parse(text) as TopicPageJson;
        pageEl.innerHTML = renderTopicPage(page);
        detailsEl.innerHTML = renderDetails(job, page);
        downloadEl.href = URL.createObjectURL(new Blob([text], { type: "application/json" }));
        downloadEl.download = "topic-page.json";
        downloadEl.hidden = false;
      } else {
        detailsEl.innerHTML = renderDetails(job, null);
      }
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      pageEl.innerHTML = "";
      detailsEl.innerHTML = latest ? renderDetails(latest, null) : "";
      const banner = root.createElement("div");
      banner.className = "error-banner";
      banner.textContent = message;
      pageEl.appendChild(banner);
    }
  });
}
