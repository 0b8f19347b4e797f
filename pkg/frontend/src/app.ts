import { Api, Grid, RunSummary } from "./api.js";
import { renderEnvelope, renderEnvelopeMissing } from "./envelope.js";
import { gridViewModel, renderGrid, trainingKey } from "./grid.js";
import { GeneratePanel } from "./panel.js";
import { pollUntil } from "./poll.js";

// Wires the grid, generate panel, and envelope views to the service.
// There is no client-only state: the grid is always the last grid JSON
// the service returned, and updates are applied in the order responses
// arrive (a late toggle response simply becomes the newest truth).

export class App {
  private grid: Grid | null = null;
  private readonly training = new Set<string>();
  private panel: GeneratePanel;

  constructor(
    private readonly doc: Document,
    private readonly api: Api,
    private readonly els: {
      banner: HTMLElement;
      grid: HTMLElement;
      panel: HTMLElement;
      runs: HTMLElement;
    },
  ) {
    this.panel = new GeneratePanel(doc, api, {
      onRun: (run) => void this.showRun(run),
      onError: (message) => this.showError(message),
    });
    this.els.panel.appendChild(this.panel.root);
  }

  async start(): Promise<void> {
    try {
      this.applyGrid(await this.api.catalog());
    } catch (error) {
      this.showError(error instanceof Error ? error.message : String(error));
    }
  }

  // Errors never block the page; the banner sits above a live grid.
  showError(message: string): void {
    this.els.banner.textContent = message;
    this.els.banner.classList.add("visible");
  }

  clearError(): void {
    this.els.banner.textContent = "";
    this.els.banner.classList.remove("visible");
  }

  applyGrid(grid: Grid): void {
    this.grid = grid;
    renderGrid(
      this.els.grid,
      gridViewModel(grid),
      {
        onToggle: (metric, batch) => void this.toggle(metric, batch),
        onTrain: (metric, batch) => void this.train(metric, batch),
      },
      this.training,
    );
    this.panel.updateFromGrid(grid);
  }

  private async toggle(metric: string, batch: string): Promise<void> {
    try {
      this.applyGrid(await this.api.toggleSelection([{ metric, batch }]));
      this.clearError();
    } catch (error) {
      this.showError(error instanceof Error ? error.message : String(error));
    }
  }

  private async train(metric: string, batch: string): Promise<void> {
    const key = trainingKey(metric, batch);
    try {
      const { job_id } = await this.api.train(metric, batch);
      this.training.add(key);
      if (this.grid) this.applyGrid(this.grid); // repaint with spinner
      const job = await pollUntil(
        () => this.api.job(job_id),
        (j) => j.status === "done" || j.status === "failed",
      );
      if (job.status === "failed") {
        this.showError(`training ${metric}/${batch} failed: ${job.error ?? "unknown"}`);
      }
    } catch (error) {
      this.showError(error instanceof Error ? error.message : String(error));
    } finally {
      this.training.delete(key);
      try {
        this.applyGrid(await this.api.catalog());
      } catch (error) {
        this.showError(error instanceof Error ? error.message : String(error));
      }
    }
  }

  // One section per completed run: envelope chart per metric that has
  // one, plus download links for every remapped log.
  private async showRun(run: RunSummary): Promise<void> {
    const section = this.doc.createElement("section");
    section.className = "run";
    const heading = this.doc.createElement("h2");
    heading.textContent = `run ${run.id} (count ${run.count}, seed ${run.seed})`;
    section.appendChild(heading);

    const charts = this.doc.createElement("div");
    charts.className = "charts";
    section.appendChild(charts);
    for (const metric of this.grid ? this.grid.metrics : []) {
      const holder = this.doc.createElement("div");
      holder.className = "chart";
      charts.appendChild(holder);
      try {
        renderEnvelope(holder, await this.api.envelope(run.id, metric));
      } catch {
        renderEnvelopeMissing(holder, `no ${metric} series in this run`);
      }
    }

    const list = this.doc.createElement("ul");
    list.className = "log-links";
    try {
      const { logs } = await this.api.runLogs(run.id);
      for (const logId of logs) {
        const item = this.doc.createElement("li");
        const link = this.doc.createElement("a");
        link.href = this.api.logUrl(run.id, logId);
        link.textContent = logId;
        link.setAttribute("download", `${logId}.yaml`);
        item.appendChild(link);
        list.appendChild(item);
      }
    } catch (error) {
      this.showError(error instanceof Error ? error.message : String(error));
    }
    section.appendChild(list);

    this.els.runs.prepend(section);
  }
}

export function boot(doc: Document, api: Api = new Api()): App {
  const el = (id: string): HTMLElement => {
    const found = doc.getElementById(id);
    if (!found) throw new Error(`missing #${id}`);
    return found;
  };
  const app = new App(doc, api, {
    banner: el("banner"),
    grid: el("grid"),
    panel: el("panel"),
    runs: el("runs"),
  });
  void app.start();
  return app;
}
