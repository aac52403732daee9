// Page assembly and event wiring. The whole view derives from the service's
// /taxonomy, /hierarchy, and /predict payloads; no emotion names live here.

import { ApiClient, ApiError } from "./api.js";
import type { HierarchyDoc, PredictionResponse, TaxonomyDoc, TreeNode } from "./api.js";
import { renderBars } from "./bars.js";
import { collectLeaves, renderDendrogram } from "./dendrogram.js";

export type UiState = {
  baseUrl: string;
  text: string;
  lastResponse: PredictionResponse | null;
  thresholdOverride: number | null;
  selectedNode: TreeNode | null;
};

const SHELL = `
  <section class="probe-panel">
    <textarea id="probe-text" rows="3"
      placeholder="Type a sentence, then probe the model"></textarea>
    <div class="probe-controls">
      <button id="probe-button">Probe</button>
      <label class="threshold-control">
        <input type="checkbox" id="threshold-override">
        override decision threshold
      </label>
      <input type="range" id="threshold-slider" min="0" max="1" step="0.01" value="0.5" disabled>
      <span id="threshold-value">server defaults</span>
    </div>
    <div id="error-box" hidden></div>
    <div id="bars"></div>
  </section>
  <section class="hierarchy-panel">
    <h2>Emotion hierarchy</h2>
    <div id="hierarchy-note" hidden></div>
    <div id="tree"></div>
    <div id="selection-panel" hidden></div>
  </section>
`;

export class App {
  readonly state: UiState;
  private readonly client: ApiClient;
  private taxonomy: TaxonomyDoc | null = null;
  private nodeTable: Map<string, TreeNode> = new Map();
  private inFlight: AbortController | null = null;

  private readonly input: HTMLTextAreaElement;
  private readonly probeButton: HTMLButtonElement;
  private readonly overrideBox: HTMLInputElement;
  private readonly slider: HTMLInputElement;
  private readonly sliderValue: HTMLElement;
  private readonly errorBox: HTMLElement;
  private readonly barsRoot: HTMLElement;
  private readonly hierarchyNote: HTMLElement;
  private readonly treeRoot: HTMLElement;
  private readonly selectionPanel: HTMLElement;

  constructor(root: HTMLElement, client: ApiClient) {
    this.client = client;
    this.state = {
      baseUrl: client.baseUrl,
      text: "",
      lastResponse: null,
      thresholdOverride: null,
      selectedNode: null,
    };
    root.innerHTML = SHELL;
    const pick = <T extends HTMLElement>(id: string): T => {
      const el = root.querySelector(`#${id}`);
      if (!el) throw new Error(`missing shell element #${id}`);
      return el as T;
    };
    this.input = pick<HTMLTextAreaElement>("probe-text");
    this.probeButton = pick<HTMLButtonElement>("probe-button");
    this.overrideBox = pick<HTMLInputElement>("threshold-override");
    this.slider = pick<HTMLInputElement>("threshold-slider");
    this.sliderValue = pick<HTMLElement>("threshold-value");
    this.errorBox = pick<HTMLElement>("error-box");
    this.barsRoot = pick<HTMLElement>("bars");
    this.hierarchyNote = pick<HTMLElement>("hierarchy-note");
    this.treeRoot = pick<HTMLElement>("tree");
    this.selectionPanel = pick<HTMLElement>("selection-panel");

    this.input.addEventListener("input", () => {
      this.state.text = this.input.value;
    });
    this.probeButton.addEventListener("click", () => void this.probe());
    this.overrideBox.addEventListener("change", () => this.syncThreshold());
    this.slider.addEventListener("input", () => this.syncThreshold());
    this.treeRoot.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (!target.classList.contains("node-label")) return;
      const id = target.dataset.nodeId;
      if (id !== undefined) this.selectNode(id);
    });
  }

  private categoryOrder(): string[] {
    return this.taxonomy ? Object.keys(this.taxonomy.categories) : [];
  }

  async boot(): Promise<void> {
    this.taxonomy = await this.client.taxonomy();
    let hierarchy: HierarchyDoc | null = null;
    try {
      hierarchy = await this.client.hierarchy();
    } catch (error) {
      this.showError(error);
    }
    if (hierarchy === null) {
      this.hierarchyNote.hidden = false;
      this.hierarchyNote.textContent =
        "This model artifact has no bundled hierarchy; " +
        "bundle one with the hierarchy command to browse it here.";
      this.treeRoot.hidden = true;
      return;
    }
    const categoryOf = new Map<string, string>();
    for (const [category, members] of Object.entries(this.taxonomy.categories)) {
      for (const emotion of members) categoryOf.set(emotion, category);
    }
    this.nodeTable = renderDendrogram(
      this.treeRoot, hierarchy.tree, categoryOf, this.categoryOrder());
  }

  async probe(): Promise<void> {
    this.state.text = this.input.value;
    if (this.state.text.trim() === "") {
      this.showMessage("Type some text before probing.");
      return;
    }
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    try {
      const response = await this.client.predict(this.state.text, controller.signal);
      if (this.inFlight !== controller) return;
      this.inFlight = null;
      this.state.lastResponse = response;
      this.clearError();
      this.redrawBars();
    } catch (error) {
      if (controller.signal.aborted) return;
      this.inFlight = null;
      this.showError(error);
    }
  }

  private redrawBars(): void {
    if (!this.state.lastResponse) return;
    renderBars(
      this.barsRoot,
      this.state.lastResponse,
      this.categoryOrder(),
      this.state.thresholdOverride,
    );
  }

  private syncThreshold(): void {
    if (this.overrideBox.checked) {
      this.slider.disabled = false;
      this.state.thresholdOverride = Number(this.slider.value);
      this.sliderValue.textContent = this.slider.value;
    } else {
      this.slider.disabled = true;
      this.state.thresholdOverride = null;
      this.sliderValue.textContent = "server defaults";
    }
    this.redrawBars();
  }

  /** Exposed for tests and the slider; mirrors moving the slider by hand. */
  setThresholdOverride(value: number | null): void {
    this.overrideBox.checked = value !== null;
    if (value !== null) this.slider.value = String(value);
    this.syncThreshold();
  }

  selectNode(id: string): void {
    const node = this.nodeTable.get(id);
    if (!node) return;
    this.state.selectedNode = node;
    const members = collectLeaves(node);
    this.selectionPanel.hidden = false;
    this.selectionPanel.innerHTML =
      `<strong>${members.length} emotions</strong> under the selected node ` +
      `(merge height ${node.height.toFixed(3)}):<br>` +
      members.map((m) => `<span class="member">${m}</span>`).join(", ");
  }

  private showMessage(message: string): void {
    this.errorBox.hidden = false;
    this.errorBox.innerHTML = "";
    this.errorBox.textContent = message;
  }

  private showError(error: unknown): void {
    if (error instanceof ApiError) {
      this.showMessage(`The service answered ${error.status}: ${error.message}`);
      return;
    }
    // network-level failure: keep the typed text, offer a retry
    this.errorBox.hidden = false;
    this.errorBox.innerHTML = "";
    const note = document.createElement("span");
    note.textContent = "Could not reach the service. ";
    const retry = document.createElement("button");
    retry.className = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void this.probe());
    this.errorBox.append(note, retry);
  }

  private clearError(): void {
    this.errorBox.hidden = true;
    this.errorBox.innerHTML = "";
  }
}

export function mountApp(root: HTMLElement, client: ApiClient): App {
  return new App(root, client);
}
