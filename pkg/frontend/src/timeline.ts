// Timeline bar with one pin per served scene. The client computes pin
// positions (start_s / duration) and nothing else: ranks, tiers, scores, and
// percentages render exactly as the API sent them.

import { fmt6, formatRange } from "./format";
import type { ScenePayload, SceneReportPayload } from "./types";

export interface PinViewModel {
  scene: ScenePayload;
  position: number; // fraction of the bar width in [0, 1)
  clamped: boolean;
}

const MAX_POSITION = 0.999;

export function buildPins(report: SceneReportPayload, durationS: number): PinViewModel[] {
  return report.scenes.map((scene) => {
    const raw = durationS > 0 ? scene.start_s / durationS : 0;
    const clamped = raw >= 1 || raw < 0;
    return {
      scene,
      position: Math.min(Math.max(raw, 0), MAX_POSITION),
      clamped,
    };
  });
}

export function popupContent(scene: ScenePayload): HTMLElement {
  const root = document.createElement("div");
  root.className = "popup__content";

  const range = document.createElement("div");
  range.className = "popup__range";
  range.textContent = formatRange(scene.start_s, scene.end_s);
  root.appendChild(range);

  const score = document.createElement("div");
  score.className = "popup__outlierness";
  score.textContent = `outlierness ${fmt6(scene.outlierness)}`;
  root.appendChild(score);

  if (scene.degenerate_attribution) {
    const note = document.createElement("div");
    note.className = "popup__degenerate";
    note.textContent = "uniform/indeterminate attribution";
    root.appendChild(note);
    return root;
  }

  const list = document.createElement("ul");
  list.className = "popup__importances";
  const rows = Object.entries(scene.importances)
    .sort((a, b) => b[1] - a[1]);
  for (const [name, share] of rows) {
    const item = document.createElement("li");
    item.textContent = `${name} ${fmt6(share)}%`;
    list.appendChild(item);
  }
  root.appendChild(list);
  return root;
}

export class Timeline {
  private bar: HTMLElement;
  private banner: HTMLElement;
  private notice: HTMLElement;
  private popup: HTMLElement;

  constructor(
    container: HTMLElement,
    private onSeek: (scene: ScenePayload) => void,
  ) {
    this.banner = el("div", "timeline__banner");
    this.banner.hidden = true;
    this.notice = el("div", "timeline__notice");
    this.notice.hidden = true;
    this.bar = el("div", "timeline__bar");
    this.popup = el("div", "popup");
    this.popup.hidden = true;
    this.popup.setAttribute("role", "tooltip");
    container.append(this.banner, this.notice, this.bar, this.popup);
  }

  render(report: SceneReportPayload, durationS: number): void {
    this.bar.replaceChildren();
    this.hidePopup();

    if (report.scenes.length === 0) {
      this.notice.textContent = "No anomalous scenes were detected for this session.";
      this.notice.hidden = false;
      this.banner.hidden = true;
      return;
    }
    this.notice.hidden = true;

    const pins = buildPins(report, durationS);
    const anyClamped = pins.some((p) => p.clamped);
    if (anyClamped) {
      this.banner.textContent =
        "Data error: some scenes lie beyond the video duration; their pins were clamped.";
    }
    this.banner.hidden = !anyClamped;

    for (const pin of pins) {
      this.bar.appendChild(this.renderPin(pin));
    }
  }

  private renderPin(pin: PinViewModel): HTMLElement {
    const { scene } = pin;
    const button = document.createElement("button");
    button.type = "button";
    button.className = `pin pin--${scene.tier}${pin.clamped ? " pin--clamped" : ""}`;
    button.style.left = `${(pin.position * 100).toFixed(4)}%`;
    button.dataset.rank = String(scene.rank);
    button.setAttribute(
      "aria-label",
      `Scene ${scene.rank}, ${formatRange(scene.start_s, scene.end_s)}`,
    );

    const badge = document.createElement("span");
    badge.className = "pin__rank";
    badge.textContent = String(scene.rank);
    button.appendChild(badge);

    button.addEventListener("mouseenter", () => this.showPopup(button, scene));
    button.addEventListener("focus", () => this.showPopup(button, scene));
    button.addEventListener("mouseleave", () => this.hidePopup());
    button.addEventListener("blur", () => this.hidePopup());
    button.addEventListener("click", () => this.onSeek(scene));
    return button;
  }

  private showPopup(anchor: HTMLElement, scene: ScenePayload): void {
    this.popup.replaceChildren(popupContent(scene));
    this.popup.style.left = anchor.style.left;
    this.popup.hidden = false;
  }

  private hidePopup(): void {
    this.popup.hidden = true;
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}
