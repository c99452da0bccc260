import { ApiClient } from "./api";
import { SeekController } from "./player";
import { renderSparkline } from "./sparkline";
import { Timeline } from "./timeline";
import type { SceneReportPayload, ScoreSeriesPayload } from "./types";

export const K_MIN = 1;
export const K_MAX = 15;
export const K_DEFAULT = 6;

export interface AppElements {
  video: HTMLVideoElement;
  timeline: HTMLElement;
  kSelect: HTMLSelectElement;
  sparklineToggle: HTMLInputElement;
  sparklineHost: HTMLElement;
  status: HTMLElement;
  title: HTMLElement;
}

export class ReviewApp {
  private seek: SeekController;
  private timeline: Timeline;
  private report: SceneReportPayload | null = null;
  private series: ScoreSeriesPayload | null = null;

  constructor(
    private els: AppElements,
    private api: ApiClient,
    private session: string,
  ) {
    this.seek = new SeekController(els.video);
    this.timeline = new Timeline(els.timeline, (scene) => this.seek.seekTo(scene.start_s));

    for (let k = K_MIN; k <= K_MAX; k++) {
      const option = document.createElement("option");
      option.value = String(k);
      option.textContent = String(k);
      if (k === K_DEFAULT) option.selected = true;
      els.kSelect.appendChild(option);
    }
    els.kSelect.addEventListener("change", () => {
      void this.loadScenes(Number(els.kSelect.value));
    });
    els.sparklineToggle.addEventListener("change", () => this.renderSparklineIfOn());
    els.video.addEventListener("loadedmetadata", () => this.renderTimeline());
    els.video.addEventListener("error", () => {
      this.toast("video unavailable; pins still work once media loads");
    });
  }

  async start(): Promise<void> {
    this.els.title.textContent = this.session;
    this.els.video.src = this.api.videoUrl(this.session);
    try {
      this.series = await this.api.fetchScores(this.session);
    } catch (err) {
      this.toast(`scores unavailable: ${(err as Error).message}`);
    }
    await this.loadScenes(K_DEFAULT);
    this.renderSparklineIfOn();
  }

  async loadScenes(k: number): Promise<void> {
    try {
      this.report = await this.api.fetchScenes(this.session, k);
      this.renderTimeline();
    } catch (err) {
      this.toast(`scenes unavailable: ${(err as Error).message}`);
    }
  }

  duration(): number {
    const media = this.els.video.duration;
    if (Number.isFinite(media) && media > 0) return media;
    if (this.series && this.series.windows.length > 0) {
      return this.series.windows[this.series.windows.length - 1].end_s;
    }
    return 0;
  }

  renderTimeline(): void {
    if (this.report) {
      this.timeline.render(this.report, this.duration());
    }
  }

  private renderSparklineIfOn(): void {
    this.els.sparklineHost.replaceChildren();
    if (this.els.sparklineToggle.checked && this.series) {
      this.els.sparklineHost.appendChild(renderSparkline(this.series));
    }
  }

  private toast(message: string): void {
    this.els.status.textContent = message;
    this.els.status.hidden = false;
  }
}

export async function boot(): Promise<void> {
  const api = new ApiClient("");
  const params = new URLSearchParams(window.location.search);
  let session = params.get("session");
  const status = document.getElementById("status") as HTMLElement;
  if (!session) {
    try {
      const listing = await api.listSessions();
      const scored = listing.sessions.filter((s) => s.status === "scored");
      if (scored.length === 0) {
        status.textContent = "No scored sessions yet. Upload one via POST /sessions.";
        status.hidden = false;
        return;
      }
      session = scored[scored.length - 1].id;
    } catch (err) {
      status.textContent = `cannot list sessions: ${(err as Error).message}`;
      status.hidden = false;
      return;
    }
  }

  const app = new ReviewApp(
    {
      video: document.getElementById("player") as HTMLVideoElement,
      timeline: document.getElementById("timeline") as HTMLElement,
      kSelect: document.getElementById("k-select") as HTMLSelectElement,
      sparklineToggle: document.getElementById("sparkline-toggle") as HTMLInputElement,
      sparklineHost: document.getElementById("sparkline") as HTMLElement,
      status,
      title: document.getElementById("session-title") as HTMLElement,
    },
    api,
    session,
  );
  await app.start();
}
