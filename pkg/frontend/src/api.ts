import type { SceneReportPayload, ScoreSeriesPayload, SessionPayload } from "./types";

export class ApiClient {
  constructor(private base: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path);
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        const body = await resp.json();
        if (body && typeof body.error === "string") detail = body.error;
      } catch {
        // keep the status code
      }
      throw new Error(detail);
    }
    return (await resp.json()) as T;
  }

  listSessions(): Promise<{ sessions: SessionPayload[] }> {
    return this.getJson("/sessions");
  }

  fetchScenes(session: string, k: number): Promise<SceneReportPayload> {
    return this.getJson(`/sessions/${encodeURIComponent(session)}/scenes?k=${k}`);
  }

  fetchScores(session: string): Promise<ScoreSeriesPayload> {
    return this.getJson(`/sessions/${encodeURIComponent(session)}/scores`);
  }

  videoUrl(session: string): string {
    return `${this.base}/sessions/${encodeURIComponent(session)}/video`;
  }
}
