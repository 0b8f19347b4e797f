import { Api, Grid, RunSummary } from "./api.js";
import { activeCells } from "./grid.js";
import { pollUntil } from "./poll.js";

// Generate panel: count and seed inputs plus the run trigger. Disabled
// (with an explanatory tooltip) whenever the grid has no active cell, so
// its state is always derivable from the last grid response.

export interface PanelCallbacks {
  onRun(run: RunSummary): void;
  onError(message: string): void;
}

export class GeneratePanel {
  readonly root: HTMLElement;
  private readonly button: HTMLButtonElement;
  private readonly count: HTMLInputElement;
  private readonly seed: HTMLInputElement;
  private readonly status: HTMLElement;

  constructor(
    doc: Document,
    private readonly api: Api,
    private readonly callbacks: PanelCallbacks,
  ) {
    this.root = doc.createElement("section");
    this.root.className = "generate-panel";

    const mkField = (label: string, id: string, value: string): HTMLInputElement => {
      const wrap = doc.createElement("label");
      wrap.textContent = label + " ";
      const input = doc.createElement("input");
      input.type = "number";
      input.id = id;
      input.value = value;
      wrap.appendChild(input);
      this.root.appendChild(wrap);
      return input;
    };

    this.count = mkField("count", "gen-count", "10");
    this.count.min = "1";
    this.seed = mkField("seed", "gen-seed", "0");

    this.button = doc.createElement("button");
    this.button.id = "gen-run";
    this.button.textContent = "generate";
    this.button.addEventListener("click", () => void this.trigger());
    this.root.appendChild(this.button);

    this.status = doc.createElement("span");
    this.status.className = "gen-status";
    this.root.appendChild(this.status);

    this.setSelectionCount(0);
  }

  // Called with every fresh grid so the trigger tracks the selection.
  updateFromGrid(grid: Grid): void {
    this.setSelectionCount(activeCells(grid).length);
  }

  private setSelectionCount(count: number): void {
    this.button.disabled = count === 0;
    this.button.title = count === 0
      ? "activate at least one cell to generate"
      : `generate from ${count} active cell(s)`;
  }

  private async trigger(): Promise<void> {
    const count = Number(this.count.value) || 1;
    const seed = Number(this.seed.value) || 0;
    this.status.textContent = "generating…";
    try {
      const { run_id } = await this.api.generate(count, seed);
      const run = await pollUntil(
        () => this.api.run(run_id),
        (r) => r.status !== "pending" && r.status !== "running",
      );
      this.status.textContent = `run ${run.id}: ${run.logs.length} logs`;
      this.callbacks.onRun(run);
    } catch (error) {
      this.status.textContent = "";
      this.callbacks.onError(error instanceof Error ? error.message : String(error));
    }
  }
}
