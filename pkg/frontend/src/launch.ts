// Experiment configuration form with the autopilot toggle. Engaging the
// autopilot fetches a suggestion and pre-fills expense/generation fields
// it controls; each stays individually editable, and disengaging only
// unlocks them - values already entered are never changed.

import { ApiClient, ApiError, AutopilotSuggestion, LaunchSpec } from "./api";

export interface LaunchCallbacks {
  onLaunched(experimentId: string): void;
}

interface FieldSpec {
  name: string;
  label: string;
  kind: "number" | "text" | "select";
  options?: string[];
  placeholder?: string;
  value?: string;
}

const FIELDS: FieldSpec[] = [
  { name: "partition_size", label: "partition size", kind: "number", placeholder: "e.g. 3" },
  { name: "put_number", label: "trade-off number", kind: "number", placeholder: "-1 .. 1" },
  { name: "learner", label: "learner", kind: "select", options: ["tree", "naive_bayes"] },
  { name: "vertical_expense", label: "vertical expense (v)", kind: "number", value: "1.0" },
  { name: "horizontal_expense", label: "horizontal expense (h)", kind: "number", value: "1.0" },
  { name: "generation", label: "generation", kind: "select", options: ["dictionary", "random"] },
  { name: "privacy_exceptions", label: "privacy exceptions", kind: "text", placeholder: "1,3;2,5" },
  { name: "utility_exceptions", label: "utility exceptions", kind: "text", placeholder: "4" },
  { name: "seed", label: "seed", kind: "number", value: "0" },
  { name: "folds", label: "CV folds", kind: "number", value: "5" },
  { name: "missing", label: "missing values", kind: "select", options: ["impute", "remove_rows"] },
  { name: "dedupe", label: "duplicates", kind: "select", options: ["keep", "remove"] },
  { name: "workers", label: "workers", kind: "number", value: "1" },
];

const AUTOPILOT_FIELDS = ["vertical_expense", "horizontal_expense", "generation"];

export function parseExceptionLiteral(text: string): number[][] {
  const out: number[][] = [];
  for (const chunk of text.split(";")) {
    const trimmed = chunk.trim().replace(/^\{|\}$/g, "");
    if (!trimmed) continue;
    const indices = trimmed
      .split(",")
      .map((t) => parseInt(t.trim(), 10))
      .filter((n) => Number.isFinite(n));
    if (indices.length) out.push(indices);
  }
  return out;
}

export class LaunchForm {
  readonly element: HTMLFormElement;
  private inputs = new Map<string, HTMLInputElement | HTMLSelectElement>();
  private errors = new Map<string, HTMLElement>();
  private suggestion: AutopilotSuggestion | null = null;
  private autopilotToggle: HTMLInputElement;
  private notesBox: HTMLElement;
  private edited = new Set<string>();

  constructor(
    private api: ApiClient,
    private datasetId: () => string | null,
    private callbacks: LaunchCallbacks,
  ) {
    this.element = document.createElement("form");
    this.element.className = "launch-form";

    const toggleRow = document.createElement("label");
    toggleRow.className = "autopilot-toggle";
    this.autopilotToggle = document.createElement("input");
    this.autopilotToggle.type = "checkbox";
    this.autopilotToggle.addEventListener("change", () => {
      void this.onAutopilotToggled();
    });
    toggleRow.append(this.autopilotToggle, document.createTextNode(" autopilot"));
    this.element.appendChild(toggleRow);

    this.notesBox = document.createElement("ul");
    this.notesBox.className = "autopilot-notes";
    this.element.appendChild(this.notesBox);

    for (const spec of FIELDS) {
      this.element.appendChild(this.buildField(spec));
    }

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "launch experiment";
    this.element.appendChild(submit);

    const formError = document.createElement("p");
    formError.className = "form-error";
    formError.dataset.field = "_form";
    this.errors.set("_form", formError);
    this.element.appendChild(formError);

    this.element.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submit();
    });
  }

  private buildField(spec: FieldSpec): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = "field";
    wrap.append(document.createTextNode(spec.label + " "));
    let input: HTMLInputElement | HTMLSelectElement;
    if (spec.kind === "select") {
      input = document.createElement("select");
      for (const option of spec.options ?? []) {
        const el = document.createElement("option");
        el.value = option;
        el.textContent = option;
        input.appendChild(el);
      }
    } else {
      input = document.createElement("input");
      input.type = "text";
      if (spec.placeholder) input.placeholder = spec.placeholder;
      if (spec.value !== undefined) input.value = spec.value;
    }
    input.name = spec.name;
    input.addEventListener("input", () => this.edited.add(spec.name));
    this.inputs.set(spec.name, input);
    wrap.appendChild(input);
    const badge = document.createElement("span");
    badge.className = "suggested-badge";
    badge.hidden = true;
    badge.textContent = "suggested";
    wrap.appendChild(badge);
    const err = document.createElement("span");
    err.className = "field-error";
    err.dataset.field = spec.name;
    this.errors.set(spec.name, err);
    wrap.appendChild(err);
    return wrap;
  }

  value(name: string): string {
    return this.inputs.get(name)?.value?.trim() ?? "";
  }

  setValue(name: string, value: string): void {
    const input = this.inputs.get(name);
    if (input) input.value = value;
  }

  get autopilotEngaged(): boolean {
    return this.autopilotToggle.checked;
  }

  async setAutopilot(on: boolean): Promise<void> {
    this.autopilotToggle.checked = on;
    await this.onAutopilotToggled();
  }

  private badge(name: string, show: boolean): void {
    const input = this.inputs.get(name);
    const badge = input?.parentElement?.querySelector<HTMLElement>(".suggested-badge");
    if (badge) badge.hidden = !show;
  }

  async onAutopilotToggled(): Promise<void> {
    if (!this.autopilotToggle.checked) {
      // disengage: unlock, drop badges, keep whatever is in the fields
      for (const name of AUTOPILOT_FIELDS) this.badge(name, false);
      this.notesBox.innerHTML = "";
      this.suggestion = null;
      return;
    }
    const datasetId = this.datasetId();
    if (!datasetId) {
      this.showError("_form", "upload and select a dataset first");
      this.autopilotToggle.checked = false;
      return;
    }
    const sizeError = this.sizeFieldError();
    if (sizeError) {
      this.showError("_form", sizeError);
      this.autopilotToggle.checked = false;
      return;
    }
    this.showError("_form", "");
    try {
      const req: Record<string, unknown> = { dataset_id: datasetId, probe: false };
      if (this.value("partition_size")) {
        req.partition_size = Number(this.value("partition_size"));
      } else {
        req.put_number = Number(this.value("put_number"));
      }
      req.learner = this.value("learner") || "tree";
      this.suggestion = await this.api.autopilot(req as never);
    } catch (err) {
      this.showError("_form", err instanceof Error ? err.message : String(err));
      this.autopilotToggle.checked = false;
      return;
    }
    // pre-fill only fields the user has not touched themselves
    const s = this.suggestion;
    const fills: Array<[string, string]> = [
      ["vertical_expense", String(s.vertical_expense)],
      ["horizontal_expense", String(s.horizontal_expense)],
      ["generation", s.generation],
      ["workers", String(s.workers)],
    ];
    for (const [name, value] of fills) {
      if (!this.edited.has(name)) {
        this.setValue(name, value);
        if (AUTOPILOT_FIELDS.includes(name)) this.badge(name, true);
      }
    }
    this.notesBox.innerHTML = "";
    for (const note of s.notes) {
      const li = document.createElement("li");
      li.textContent = note;
      this.notesBox.appendChild(li);
    }
  }

  private sizeFieldError(): string | null {
    const hasSize = this.value("partition_size") !== "";
    const hasPut = this.value("put_number") !== "";
    if (hasSize && hasPut) {
      return "partition size and trade-off number are mutually exclusive";
    }
    if (!hasSize && !hasPut) {
      return "set a partition size or a trade-off number";
    }
    return null;
  }

  showError(field: string, message: string): void {
    const el = this.errors.get(field);
    if (el) el.textContent = message;
  }

  clearErrors(): void {
    for (const el of this.errors.values()) el.textContent = "";
  }

  buildSpec(): LaunchSpec | null {
    this.clearErrors();
    const datasetId = this.datasetId();
    if (!datasetId) {
      this.showError("_form", "upload and select a dataset first");
      return null;
    }
    const sizeError = this.sizeFieldError();
    if (sizeError) {
      this.showError("partition_size", sizeError);
      this.showError("put_number", sizeError);
      return null;
    }
    const spec: LaunchSpec = { dataset_id: datasetId };
    if (this.value("partition_size")) {
      spec.partition_size = Number(this.value("partition_size"));
    } else {
      spec.put_number = Number(this.value("put_number"));
    }
    spec.learner = this.value("learner") || "tree";
    for (const name of [
      "vertical_expense",
      "horizontal_expense",
      "seed",
      "folds",
      "workers",
    ] as const) {
      const raw = this.value(name);
      if (raw !== "") {
        const parsed = Number(raw);
        if (!Number.isFinite(parsed)) {
          this.showError(name, "not a number");
          return null;
        }
        (spec as unknown as Record<string, unknown>)[name] = parsed;
      }
    }
    spec.generation = this.value("generation") || "dictionary";
    spec.missing = this.value("missing") || "impute";
    spec.dedupe = this.value("dedupe") || "keep";
    const privacy = parseExceptionLiteral(this.value("privacy_exceptions"));
    if (privacy.length) spec.privacy_exceptions = privacy;
    const utility = parseExceptionLiteral(this.value("utility_exceptions"));
    if (utility.length) spec.utility_exceptions = utility;
    return spec;
  }

  async submit(): Promise<void> {
    const spec = this.buildSpec();
    if (!spec) return;
    try {
      const id = await this.api.startExperiment(spec);
      this.callbacks.onLaunched(id);
    } catch (err) {
      if (err instanceof ApiError) {
        this.showError("_form", `server rejected the spec: ${err.message}`);
      } else {
        this.showError("_form", String(err));
      }
    }
  }
}
