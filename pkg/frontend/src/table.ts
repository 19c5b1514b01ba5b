// Results table: sortable headers, a filter row, and a per-row detail
// pane. Every data cell shows the server-provided string verbatim.

import type { ResultRow, ResultsPage } from "./api";
import { QueryState, cycleSort, sortDirection } from "./state";

export interface TableCallbacks {
  onStateChange(next: QueryState): void;
  onToggleBasket(row: ResultRow): void;
  inBasket(row: ResultRow): boolean;
}

const PER_CLASS_FIELDS = [
  "tp",
  "fp",
  "fn",
  "precision",
  "recall",
  "aroc",
  "apr",
];

export function renderResultsTable(
  container: HTMLElement,
  page: ResultsPage,
  state: QueryState,
  callbacks: TableCallbacks,
): void {
  container.innerHTML = "";

  const info = document.createElement("div");
  info.className = "table-info";
  info.textContent = `${page.total} rows (snapshot ${page.snapshot}), showing ${page.rows.length} from offset ${page.offset}`;
  container.appendChild(info);

  const table = document.createElement("table");
  table.className = "results";

  const thead = document.createElement("thead");
  const headerRow = document.createElement("tr");
  const basketTh = document.createElement("th");
  basketTh.textContent = "pick";
  headerRow.appendChild(basketTh);
  for (const column of page.columns) {
    const th = document.createElement("th");
    th.dataset.field = column;
    const dir = sortDirection(state, column);
    th.textContent = column + (dir === "desc" ? " ▼" : dir === "asc" ? " ▲" : "");
    if (column !== "attribute_set") {
      th.classList.add("sortable");
      th.addEventListener("click", () => {
        callbacks.onStateChange(cycleSort(state, column));
      });
    }
    headerRow.appendChild(th);
  }
  thead.appendChild(headerRow);
  thead.appendChild(buildFilterRow(page, state, callbacks));
  table.appendChild(thead);

  const tbody = document.createElement("tbody");
  for (const row of page.rows) {
    tbody.appendChild(buildDataRow(row, page, container, callbacks));
  }
  table.appendChild(tbody);
  container.appendChild(table);

  const pager = document.createElement("div");
  pager.className = "pager";
  const prev = document.createElement("button");
  prev.textContent = "prev";
  prev.disabled = state.offset <= 0;
  prev.addEventListener("click", () =>
    callbacks.onStateChange({
      ...state,
      offset: Math.max(0, state.offset - state.limit),
    }),
  );
  const next = document.createElement("button");
  next.textContent = "next";
  next.disabled = state.offset + state.limit >= page.total;
  next.addEventListener("click", () =>
    callbacks.onStateChange({ ...state, offset: state.offset + state.limit }),
  );
  pager.append(prev, next);
  container.appendChild(pager);
}

function buildFilterRow(
  page: ResultsPage,
  state: QueryState,
  callbacks: TableCallbacks,
): HTMLTableRowElement {
  const row = document.createElement("tr");
  row.className = "filters";

  const basketCell = document.createElement("td");
  row.appendChild(basketCell);

  for (const column of page.columns) {
    const cell = document.createElement("td");
    if (column === "attribute_set") {
      // membership filters: "must contain" / "must not contain"
      const must = document.createElement("input");
      must.placeholder = "has 1,14";
      must.className = "filter-contains";
      must.value = state.contains.join(",");
      const mustNot = document.createElement("input");
      mustNot.placeholder = "lacks 3";
      mustNot.className = "filter-not-contains";
      mustNot.value = state.notContains.join(",");
      const apply = () => {
        callbacks.onStateChange({
          ...state,
          contains: parseIndices(must.value),
          notContains: parseIndices(mustNot.value),
          offset: 0,
        });
      };
      must.addEventListener("change", apply);
      mustNot.addEventListener("change", apply);
      cell.append(must, mustNot);
    } else if (column !== "time_taken") {
      const existing = state.ranges.find((r) => r.field === column);
      const lo = document.createElement("input");
      lo.placeholder = "min";
      lo.className = "filter-min";
      lo.value = existing?.min != null ? String(existing.min) : "";
      const hi = document.createElement("input");
      hi.placeholder = "max";
      hi.className = "filter-max";
      hi.value = existing?.max != null ? String(existing.max) : "";
      const apply = () => {
        const ranges = state.ranges.filter((r) => r.field !== column);
        const min = lo.value === "" ? null : Number(lo.value);
        const max = hi.value === "" ? null : Number(hi.value);
        if (min !== null || max !== null) {
          ranges.push({ field: column, min, max });
        }
        callbacks.onStateChange({ ...state, ranges, offset: 0 });
      };
      lo.addEventListener("change", apply);
      hi.addEventListener("change", apply);
      cell.append(lo, hi);
    }
    row.appendChild(cell);
  }
  return row;
}

function parseIndices(text: string): number[] {
  return text
    .split(",")
    .map((t) => parseInt(t.trim(), 10))
    .filter((n) => Number.isFinite(n));
}

function buildDataRow(
  row: ResultRow,
  page: ResultsPage,
  container: HTMLElement,
  callbacks: TableCallbacks,
): HTMLTableRowElement {
  const tr = document.createElement("tr");
  tr.className = "result-row";
  tr.dataset.taskIndex = String(row.task_index);

  const basketCell = document.createElement("td");
  const pick = document.createElement("input");
  pick.type = "checkbox";
  pick.checked = callbacks.inBasket(row);
  pick.addEventListener("click", (ev) => {
    ev.stopPropagation();
    callbacks.onToggleBasket(row);
  });
  basketCell.appendChild(pick);
  tr.appendChild(basketCell);

  for (const column of page.columns) {
    const td = document.createElement("td");
    td.dataset.field = column;
    td.textContent = row.cells[column] ?? "";
    tr.appendChild(td);
  }
  tr.addEventListener("click", () => {
    const existing = container.querySelector(".detail-pane");
    existing?.remove();
    container.appendChild(buildDetailPane(row));
  });
  return tr;
}

export function buildDetailPane(row: ResultRow): HTMLElement {
  const pane = document.createElement("div");
  pane.className = "detail-pane";
  const title = document.createElement("h3");
  title.textContent = `Attribute set ${row.cells["attribute_set"] ?? ""}`;
  pane.appendChild(title);

  const summary = document.createElement("p");
  summary.textContent = `accuracy ${row.cells["accuracy"] ?? ""} | time ${row.cells["time_taken"] ?? ""}s`;
  pane.appendChild(summary);

  const classes = new Set<number>();
  for (const key of Object.keys(row.cells)) {
    const m = key.match(/_(\d+)$/);
    if (m) classes.add(parseInt(m[1], 10));
  }
  const table = document.createElement("table");
  table.className = "detail-metrics";
  const head = document.createElement("tr");
  head.innerHTML =
    "<th>class</th>" + PER_CLASS_FIELDS.map((f) => `<th>${f}</th>`).join("");
  table.appendChild(head);
  for (const c of [...classes].sort((a, b) => a - b)) {
    const tr = document.createElement("tr");
    const label = document.createElement("td");
    label.textContent = String(c);
    tr.appendChild(label);
    for (const f of PER_CLASS_FIELDS) {
      const td = document.createElement("td");
      td.dataset.field = `${f}_${c}`;
      td.textContent = row.cells[`${f}_${c}`] ?? "";
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  pane.appendChild(table);
  return pane;
}
