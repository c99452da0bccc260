// Seek controller: jumps land paused at the requested time; a seek issued
// before metadata is loaded is queued and applied once the player is ready.

const HAVE_METADATA = 1;

export class SeekController {
  private pending: number | null = null;

  constructor(private video: HTMLVideoElement) {
    video.addEventListener("loadedmetadata", () => this.flush());
  }

  seekTo(seconds: number): void {
    if (this.video.readyState >= HAVE_METADATA) {
      this.apply(seconds);
    } else {
      this.pending = seconds;
    }
  }

  private apply(seconds: number): void {
    this.video.currentTime = seconds;
    this.video.pause();
  }

  private flush(): void {
    if (this.pending !== null) {
      this.apply(this.pending);
      this.pending = null;
    }
  }
}
