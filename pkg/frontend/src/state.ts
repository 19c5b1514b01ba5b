// Result-query view state, fully round-trippable through the URL query
// string so any sorted/filtered view is shareable and reloadable.

export type SortDir = "asc" | "desc";

export interface RangeFilter {
  field: string;
  min: number | null;
  max: number | null;
}

export interface QueryState {
  sort: Array<[string, SortDir]>;
  contains: number[];
  notContains: number[];
  ranges: RangeFilter[];
  offset: number;
  limit: number;
}

export function defaultQueryState(): QueryState {
  return {
    sort: [
      ["apr_1", "desc"],
      ["aroc_1", "desc"],
      ["accuracy", "desc"],
    ],
    contains: [],
    notContains: [],
    ranges: [],
    offset: 0,
    limit: 50,
  };
}

function parseIndexList(text: string | null): number[] {
  if (!text) return [];
  return text
    .split(",")
    .map((t) => parseInt(t.trim(), 10))
    .filter((n) => Number.isFinite(n));
}

export function encodeState(state: QueryState): URLSearchParams {
  const params = new URLSearchParams();
  if (state.sort.length) {
    params.set("sort", state.sort.map(([f, d]) => `${f}:${d}`).join(","));
  }
  if (state.contains.length) params.set("contains", state.contains.join(","));
  if (state.notContains.length) {
    params.set("not_contains", state.notContains.join(","));
  }
  for (const r of state.ranges) {
    params.append("range", `${r.field}:${r.min ?? ""}:${r.max ?? ""}`);
  }
  if (state.offset) params.set("offset", String(state.offset));
  params.set("limit", String(state.limit));
  return params;
}

export function decodeState(params: URLSearchParams): QueryState {
  const state = defaultQueryState();
  const sort = params.get("sort");
  if (sort !== null) {
    state.sort = [];
    for (const part of sort.split(",")) {
      if (!part) continue;
      const [field, dir] = part.split(":");
      state.sort.push([field, dir === "asc" ? "asc" : "desc"]);
    }
  }
  state.contains = parseIndexList(params.get("contains"));
  state.notContains = parseIndexList(params.get("not_contains"));
  state.ranges = [];
  for (const spec of params.getAll("range")) {
    const [field, min, max] = spec.split(":");
    if (!field) continue;
    state.ranges.push({
      field,
      min: min === "" || min === undefined ? null : Number(min),
      max: max === "" || max === undefined ? null : Number(max),
    });
  }
  state.offset = parseInt(params.get("offset") ?? "0", 10) || 0;
  state.limit = parseInt(params.get("limit") ?? "50", 10) || 50;
  return state;
}

// The API happens to accept the same parameter names the URL uses.
export function toApiQuery(state: QueryState): string {
  return encodeState(state).toString();
}

/** Header click behavior: a column that is not the primary sort key
 * becomes the primary key descending (older keys stay as tie breakers);
 * clicking the primary key cycles desc -> asc -> removed. */
export function cycleSort(state: QueryState, field: string): QueryState {
  const rest = state.sort.filter(([f]) => f !== field);
  const primary = state.sort[0];
  let sort: Array<[string, SortDir]>;
  if (!primary || primary[0] !== field) {
    sort = [[field, "desc"], ...rest];
  } else if (primary[1] === "desc") {
    sort = [[field, "asc"], ...rest];
  } else {
    sort = rest;
  }
  return { ...state, sort, offset: 0 };
}

export function sortDirection(state: QueryState, field: string): SortDir | null {
  const entry = state.sort.find(([f]) => f === field);
  return entry ? entry[1] : null;
}
