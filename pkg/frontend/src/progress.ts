// Status polling: task-granular progress at a 1s cadence, stopping on
// terminal states.

import { ApiClient, ExperimentStatus } from "./api";

const TERMINAL = new Set(["completed", "failed", "cancelled"]);

export class StatusPoller {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: ApiClient,
    private intervalMs = 1000,
  ) {}

  start(experimentId: string, onStatus: (s: ExperimentStatus) => void): void {
    this.stop();
    const tick = async () => {
      let status: ExperimentStatus;
      try {
        status = await this.api.status(experimentId);
      } catch {
        return; // transient fetch failure; next tick retries
      }
      onStatus(status);
      if (TERMINAL.has(status.state)) this.stop();
    };
    void tick();
    this.timer = setInterval(() => void tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

export function renderStatus(container: HTMLElement, status: ExperimentStatus): void {
  container.innerHTML = "";
  const bar = document.createElement("div");
  bar.className = "progress";
  const done = document.createElement("span");
  done.className = "progress-done";
  const frac = status.total ? status.done / status.total : 0;
  done.style.width = `${Math.round(frac * 100)}%`;
  bar.appendChild(done);
  const text = document.createElement("span");
  text.className = "progress-text";
  const eta = status.eta_s != null ? `, ~${Math.ceil(status.eta_s)}s left` : "";
  text.textContent = `${status.state}: ${status.done}/${status.total} tasks (${status.failures} failed)${eta}`;
  container.append(bar, text);
  if (status.last_error) {
    const err = document.createElement("p");
    err.className = "status-error";
    err.textContent = `last error: ${status.last_error}`;
    container.appendChild(err);
  }
}
