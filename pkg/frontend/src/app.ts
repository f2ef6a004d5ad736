import { ApiError, ConflictError, ReviewApi } from "./api.js";
import { drawOverlay } from "./overlay.js";
import { parsePpm } from "./ppm.js";
import type { AlertView, ResultView } from "./types.js";
import { valueLabel } from "./types.js";

const IMAGE_SCALE = 3;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Two-screen review app: alert queue and per-alert resolution. */
export class App {
  constructor(
    readonly root: HTMLElement,
    readonly api: ReviewApi,
  ) {}

  async showQueue(): Promise<void> {
    this.root.replaceChildren(el("p", "loading", "loading alerts…"));
    let alerts: AlertView[];
    try {
      alerts = await this.api.listAlerts("open");
    } catch (err) {
      this.renderConnectionBanner(err, () => this.showQueue());
      return;
    }
    const screen = el("div", "queue-screen");
    screen.append(el("h1", undefined, "Open alerts"));
    if (alerts.length === 0) {
      screen.append(el("p", "empty-state", "no open alerts"));
    } else {
      const list = el("ul", "alert-list");
      for (const alert of alerts) list.append(this.queueRow(alert));
      screen.append(list);
    }
    this.root.replaceChildren(screen);
  }

  private queueRow(alert: AlertView): HTMLLIElement {
    const row = el("li", "alert-row");
    row.dataset.alertId = alert.alert_id;
    row.append(
      el("span", `kind-badge kind-${alert.kind}`, alert.kind),
      el("span", "sample-id", alert.sample_id),
      el("span", "human-value", `human: ${valueLabel(alert.kind, alert.human_value)}`),
      el("span", "ai-value", `ai: ${valueLabel(alert.kind, alert.ai_value)}`),
    );
    const open = el("button", "open-alert", "review");
    open.addEventListener("click", () => void this.showResolve(alert.alert_id));
    row.append(open);
    return row;
  }

  async showResolve(alertId: string): Promise<void> {
    this.root.replaceChildren(el("p", "loading", "loading alert…"));
    let alert: AlertView;
    try {
      alert = await this.api.getAlert(alertId);
    } catch (err) {
      this.renderConnectionBanner(err, () => this.showResolve(alertId));
      return;
    }

    const screen = el("div", "resolve-screen");
    screen.append(el("h1", undefined, `Alert ${alert.alert_id}`));

    const labels = el("div", "label-compare");
    labels.append(
      el("span", "human-value", `human: ${valueLabel(alert.kind, alert.human_value)}`),
      el("span", "ai-value", `ai: ${valueLabel(alert.kind, alert.ai_value)}`),
    );
    screen.append(labels);

    const banner = el("div", "banner");
    banner.hidden = true;
    screen.append(banner);

    const canvas = el("canvas", "sample-image");
    screen.append(canvas);

    const resultPanel = el("div", "result-panel");
    screen.append(resultPanel);

    const actions = el("div", "actions");
    for (const value of [true, false]) {
      const button = el("button", "submit-resolution", valueLabel(alert.kind, value));
      button.dataset.value = String(value);
      button.addEventListener("click", () => {
        void this.submit(alert, value, banner, resultPanel);
      });
      actions.append(button);
    }
    const back = el("button", "back-to-queue", "back to queue");
    back.addEventListener("click", () => void this.showQueue());
    actions.append(back);
    screen.append(actions);

    this.root.replaceChildren(screen);
    await this.renderSample(alert.sample_id, canvas, resultPanel);
  }

  private async submit(
    alert: AlertView,
    value: boolean,
    banner: HTMLElement,
    resultPanel: HTMLElement,
  ): Promise<void> {
    banner.hidden = true;
    try {
      await this.api.resolveAlert(alert.alert_id, value);
    } catch (err) {
      banner.hidden = false;
      if (err instanceof ConflictError) {
        banner.className = "banner conflict";
        banner.textContent = `conflict: ${err.detail}`;
      } else {
        banner.className = "banner error";
        banner.textContent = err instanceof ApiError ? err.message : "request failed";
      }
      return;
    }
    // one refresh: the service reprocessed the sample on resolve
    const canvas = this.root.querySelector("canvas");
    await this.renderSample(
      alert.sample_id,
      canvas instanceof HTMLCanvasElement ? canvas : null,
      resultPanel,
    );
  }

  private async renderSample(
    sampleId: string,
    canvas: HTMLCanvasElement | null,
    resultPanel: HTMLElement,
  ): Promise<void> {
    let result: ResultView | null = null;
    try {
      result = await this.api.getResult(sampleId);
    } catch {
      result = null; // no result yet is a valid state
    }
    this.renderResult(result, resultPanel);
    if (canvas) await this.renderImage(sampleId, canvas, result);
  }

  private renderResult(result: ResultView | null, panel: HTMLElement): void {
    panel.replaceChildren();
    if (result === null) {
      panel.append(el("p", "no-result", "no result yet"));
      return;
    }
    panel.append(el("p", `status status-${result.status}`, result.status));
    if (result.failure_reason) {
      panel.append(el("p", "failure-reason", result.failure_reason));
    }
    if (result.skeleton) {
      panel.append(
        el("p", "variant", `${result.skeleton.view} / ${result.skeleton.rostrum}`),
      );
    }
    if (result.measurements_cm) {
      const table = el("table", "measurements");
      for (const [name, value] of Object.entries(result.measurements_cm.values)) {
        const tr = el("tr");
        tr.append(el("td", "var-name", name), el("td", "var-value", value.toFixed(2)));
        table.append(tr);
      }
      panel.append(table);
    }
  }

  private async renderImage(
    sampleId: string,
    canvas: HTMLCanvasElement,
    result: ResultView | null,
  ): Promise<void> {
    let image;
    try {
      image = parsePpm(await this.api.getImage(sampleId));
    } catch {
      return; // image is decorative; the labels and result still render
    }
    canvas.width = image.width * IMAGE_SCALE;
    canvas.height = image.height * IMAGE_SCALE;
    const ctx = canvas.getContext("2d");
    if (!ctx) return; // non-browser test environment
    const off = new ImageData(image.rgba, image.width, image.height);
    ctx.putImageData(off, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(canvas, 0, 0, image.width, image.height, 0, 0, canvas.width, canvas.height);
    if (result?.skeleton) drawOverlay(ctx, result.skeleton, IMAGE_SCALE);
  }

  private renderConnectionBanner(err: unknown, retry: () => void): void {
    const banner = el("div", "banner connection-error");
    banner.append(
      el("span", undefined, err instanceof Error ? err.message : "connection failed"),
    );
    const button = el("button", "retry", "retry");
    button.addEventListener("click", retry);
    banner.append(button);
    this.root.replaceChildren(banner);
  }
}
