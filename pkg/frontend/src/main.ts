// Application wiring: upload datasets, configure and launch experiments
// (optionally with the autopilot), watch progress, analyse results with
// server-side sort/filter, chart sweep trends, and export a basket of
// attribute sets for the verifier.

import { ApiClient, ExperimentStatus, ResultRow } from "./api";
import { Basket, downloadText } from "./basket";
import { LaunchForm } from "./launch";
import { StatusPoller, renderStatus } from "./progress";
import { QueryState, decodeState, defaultQueryState, encodeState, toApiQuery } from "./state";
import { renderResultsTable } from "./table";
import { TrendPoint, renderTrendChart } from "./trend";

const api = new ApiClient("");
const basket = new Basket();
const poller = new StatusPoller(api);

let currentDataset: string | null = null;
let currentExperiment: string | null = null;
let queryState: QueryState = defaultQueryState();
let refreshTimer: ReturnType<typeof setInterval> | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function readUrl(): void {
  const params = new URLSearchParams(location.search);
  currentExperiment = params.get("exp");
  queryState = decodeState(params);
}

function writeUrl(): void {
  const params = encodeState(queryState);
  if (currentExperiment) params.set("exp", currentExperiment);
  history.replaceState(null, "", "?" + params.toString());
}

async function refreshDatasets(select: HTMLSelectElement): Promise<void> {
  const datasets = await api.listDatasets();
  select.innerHTML = "";
  for (const ds of datasets) {
    const option = el("option");
    option.value = ds.dataset_id;
    option.textContent = `${ds.name} (${ds.n_attributes} attrs, ${ds.n_rows} rows)`;
    select.appendChild(option);
  }
  if (datasets.length && !currentDataset) {
    currentDataset = datasets[0].dataset_id;
  }
  if (currentDataset) select.value = currentDataset;
}

async function refreshResults(tableHost: HTMLElement): Promise<void> {
  if (!currentExperiment) return;
  try {
    const page = await api.results(currentExperiment, toApiQuery(queryState));
    renderResultsTable(tableHost, page, queryState, {
      onStateChange(next) {
        queryState = next;
        writeUrl();
        void refreshResults(tableHost);
      },
      onToggleBasket(row: ResultRow) {
        basket.toggle(row.attribute_set);
        updateBasketPanel();
        void refreshResults(tableHost);
      },
      inBasket(row: ResultRow) {
        return basket.has(row.attribute_set);
      },
    });
  } catch {
    // experiment may not exist yet; leave the table as-is
  }
}

let basketPanel: HTMLElement;

function updateBasketPanel(): void {
  basketPanel.innerHTML = "";
  basketPanel.appendChild(
    el("h3", "", `Selection basket (${basket.size} sets)`),
  );
  const list = el("ul", "basket-list");
  for (const attrs of basket.list()) {
    list.appendChild(el("li", "", `{${attrs.join(", ")}}`));
  }
  basketPanel.appendChild(list);
  const exportBtn = el("button", "basket-export", "export for verifier");
  exportBtn.disabled = basket.size === 0;
  exportBtn.addEventListener("click", () => {
    downloadText("attribute-sets.txt", basket.exportText());
  });
  const clearBtn = el("button", "basket-clear", "clear");
  clearBtn.disabled = basket.size === 0;
  clearBtn.addEventListener("click", () => {
    basket.clear();
    updateBasketPanel();
  });
  basketPanel.append(exportBtn, clearBtn);
}

async function refreshTrend(host: HTMLElement): Promise<void> {
  const experiments = await api.listExperiments();
  const completed = experiments.filter((e) => e.state === "completed");
  const points: TrendPoint[] = [];
  for (const exp of completed) {
    const page = await api.results(exp.experiment_id, "sort=accuracy:desc&limit=1");
    if (!page.rows.length) continue;
    const best = page.rows[0];
    const k = best.attribute_set.length;
    const value = best.values["accuracy"];
    if (value == null) continue;
    points.push({ x: k, label: String(k), y: value });
  }
  // best accuracy per partition size across completed experiments
  const byK = new Map<number, TrendPoint>();
  for (const p of points) {
    const existing = byK.get(p.x);
    if (!existing || p.y > existing.y) byK.set(p.x, p);
  }
  renderTrendChart(host, [...byK.values()], "best accuracy");
}

function setupApp(root: HTMLElement): void {
  readUrl();

  root.innerHTML = "";
  const title = el("h1", "", "Privacy-utility workbench");
  root.appendChild(title);

  // -- datasets ------------------------------------------------------------
  const datasetSection = el("section", "datasets");
  datasetSection.appendChild(el("h2", "", "1. Dataset"));
  const fileInput = el("input") as HTMLInputElement;
  fileInput.type = "file";
  const datasetSelect = el("select") as HTMLSelectElement;
  datasetSelect.className = "dataset-select";
  datasetSelect.addEventListener("change", () => {
    currentDataset = datasetSelect.value || null;
  });
  const uploadNote = el("span", "upload-note");
  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      const summary = await api.uploadDataset(file, { name: file.name });
      currentDataset = summary.dataset_id;
      uploadNote.textContent = `loaded ${summary.name}: ${summary.n_attributes} attributes, ${summary.n_rows} rows`;
      await refreshDatasets(datasetSelect);
    } catch (err) {
      uploadNote.textContent = `upload failed: ${err instanceof Error ? err.message : err}`;
    }
  });
  datasetSection.append(fileInput, datasetSelect, uploadNote);
  root.appendChild(datasetSection);

  // -- launch --------------------------------------------------------------
  const launchSection = el("section", "launch");
  launchSection.appendChild(el("h2", "", "2. Configure & launch"));
  const statusHost = el("div", "status-host");
  const tableHost = el("div", "table-host");
  const form = new LaunchForm(api, () => currentDataset, {
    onLaunched(experimentId) {
      currentExperiment = experimentId;
      queryState = defaultQueryState();
      writeUrl();
      watchExperiment(statusHost, tableHost);
    },
  });
  launchSection.appendChild(form.element);
  root.appendChild(launchSection);

  // -- experiment ----------------------------------------------------------
  const experimentSection = el("section", "experiment");
  experimentSection.appendChild(el("h2", "", "3. Progress & analysis"));
  const controls = el("div", "run-controls");
  const pauseBtn = el("button", "", "pause");
  pauseBtn.addEventListener("click", () => {
    if (currentExperiment) void api.pause(currentExperiment);
  });
  const resumeBtn = el("button", "", "resume");
  resumeBtn.addEventListener("click", () => {
    if (currentExperiment) {
      void api.resume(currentExperiment).then(() => watchExperiment(statusHost, tableHost));
    }
  });
  const cancelBtn = el("button", "", "cancel");
  cancelBtn.addEventListener("click", () => {
    if (currentExperiment) void api.cancel(currentExperiment);
  });
  controls.append(pauseBtn, resumeBtn, cancelBtn);
  experimentSection.append(controls, statusHost, tableHost);
  root.appendChild(experimentSection);

  // -- trend + basket --------------------------------------------------------
  const trendSection = el("section", "trend");
  trendSection.appendChild(el("h2", "", "4. Trend across experiments"));
  const trendHost = el("div", "trend-host");
  const trendBtn = el("button", "", "refresh chart");
  trendBtn.addEventListener("click", () => void refreshTrend(trendHost));
  trendSection.append(trendBtn, trendHost);
  root.appendChild(trendSection);

  basketPanel = el("section", "basket");
  root.appendChild(basketPanel);
  updateBasketPanel();

  void refreshDatasets(datasetSelect);
  if (currentExperiment) {
    watchExperiment(statusHost, tableHost);
  }
}

function watchExperiment(statusHost: HTMLElement, tableHost: HTMLElement): void {
  if (!currentExperiment) return;
  if (refreshTimer !== null) clearInterval(refreshTimer);
  poller.start(currentExperiment, (status: ExperimentStatus) => {
    renderStatus(statusHost, status);
  });
  // progressive table refresh while the run streams results in
  void refreshResults(tableHost);
  refreshTimer = setInterval(() => {
    void api.status(currentExperiment as string).then((status) => {
      void refreshResults(tableHost);
      if (["completed", "failed", "cancelled"].includes(status.state)) {
        if (refreshTimer !== null) clearInterval(refreshTimer);
        refreshTimer = null;
      }
    });
  }, 1500);
}

const root = document.getElementById("app");
if (root) setupApp(root);

export { setupApp };
