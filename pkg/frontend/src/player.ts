/**
 * Marker-aware video player widget.
 *
 * Renders a timeline under the video with one clickable marker per red dot,
 * positioned proportionally to its position in the video. Clicking a marker
 * jumps there and starts playback; from that moment every play, pause, and
 * seek the viewer performs is recorded against that marker and shipped to
 * the service by the EventRecorder.
 */

import type { RedDotDto, ServiceClient } from "./api.js";
import type { MediaAdapter } from "./media.js";
import { HtmlVideoAdapter } from "./media.js";
import type { RecorderOptions } from "./recorder.js";
import { EventRecorder } from "./recorder.js";

export interface PlayerOptions {
  /** Override the media implementation (tests use a scripted fake). */
  media?: MediaAdapter;
  /** Video file URL for the default <video> media. */
  videoUrl?: string;
  recorder?: RecorderOptions;
}

function createVideoMedia(videoUrl: string | undefined, doc: Document): MediaAdapter {
  const video = doc.createElement("video");
  if (videoUrl) {
    video.src = videoUrl;
  }
  video.preload = "metadata";
  video.controls = true;
  return new HtmlVideoAdapter(video);
}

export class PlayerUI {
  readonly recorder: EventRecorder;
  private readonly media: MediaAdapter;
  private container: HTMLElement | null = null;
  private rootEl: HTMLElement | null = null;
  private timelineEl: HTMLElement | null = null;
  private dots: RedDotDto[] = [];
  private activeDotId: string | null = null;

  private readonly onMediaPlay = (): void => {
    if (this.activeDotId !== null) {
      this.recorder.recordPlay(this.activeDotId, this.media.currentTime);
    }
  };

  private readonly onMediaPause = (): void => {
    if (this.activeDotId !== null) {
      this.recorder.recordPause(this.activeDotId, this.media.currentTime);
    }
  };

  constructor(
    private readonly client: ServiceClient,
    private readonly videoId: string,
    options: PlayerOptions = {},
  ) {
    this.media = options.media ?? createVideoMedia(options.videoUrl, globalThis.document);
    this.recorder = new EventRecorder(client, videoId, options.recorder);
    this.media.on("play", this.onMediaPlay);
    this.media.on("pause", this.onMediaPause);
  }

  /** Resolve once the media knows its duration. */
  private whenMetadataReady(): Promise<void> {
    if (Number.isFinite(this.media.duration) && this.media.duration > 0) {
      return Promise.resolve();
    }
    return new Promise((resolve) => {
      const handler = (): void => {
        this.media.off("loadedmetadata", handler);
        resolve();
      };
      this.media.on("loadedmetadata", handler);
    });
  }

  /** Fetch red dots and render the player into the container. */
  async mount(container: HTMLElement): Promise<void> {
    this.container = container;
    await this.whenMetadataReady();
    this.dots = await this.client.getRedDots(this.videoId);

    const doc = container.ownerDocument;
    const root = doc.createElement("div");
    root.className = "vm-player";

    if (this.media.element) {
      root.appendChild(this.media.element);
    }

    const timeline = doc.createElement("div");
    timeline.className = "vm-timeline";
    timeline.addEventListener("click", (ev) => this.onTimelineClick(ev));

    const duration = this.media.duration;
    for (const dot of this.dots) {
      const marker = doc.createElement("button");
      marker.type = "button";
      marker.className = "vm-marker";
      marker.dataset.redDotId = dot.red_dot_id;
      marker.dataset.state = dot.state;
      marker.title = `Highlight near ${Math.round(dot.position_s)}s`;
      marker.style.left = `${(dot.position_s / duration) * 100}%`;
      marker.addEventListener("click", (ev) => {
        ev.stopPropagation();
        void this.jumpTo(dot);
      });
      timeline.appendChild(marker);
    }

    root.appendChild(timeline);
    container.appendChild(root);
    this.rootEl = root;
    this.timelineEl = timeline;
    this.recorder.start();
  }

  /** Jump to a marker and start playback, recording against that marker. */
  async jumpTo(dot: RedDotDto): Promise<void> {
    this.activeDotId = dot.red_dot_id;
    this.seekTo(dot.position_s);
    await this.media.play();
  }

  /**
   * Seek the media. Recorded only while a marker is active, with the origin
   * captured before the jump so the event says where the viewer came from.
   */
  seekTo(toS: number): void {
    const from = this.media.currentTime;
    if (this.activeDotId !== null) {
      this.recorder.recordSeek(this.activeDotId, from, toS);
    }
    this.media.seek(toS);
  }

  pause(): void {
    this.media.pause();
  }

  async play(): Promise<void> {
    await this.media.play();
  }

  private onTimelineClick(ev: MouseEvent): void {
    const timeline = this.timelineEl;
    if (!timeline) {
      return;
    }
    const rect = timeline.getBoundingClientRect();
    if (rect.width <= 0) {
      return;
    }
    const frac = Math.min(1, Math.max(0, (ev.clientX - rect.left) / rect.width));
    this.seekTo(frac * this.media.duration);
  }

  /** Flush pending events and remove the widget from the DOM. */
  async unmount(): Promise<void> {
    this.recorder.stop();
    this.media.off("play", this.onMediaPlay);
    this.media.off("pause", this.onMediaPause);
    try {
      await this.recorder.flush();
    } finally {
      if (this.rootEl && this.container) {
        this.container.removeChild(this.rootEl);
      }
      this.rootEl = null;
      this.timelineEl = null;
      this.container = null;
    }
  }

  get markers(): HTMLElement[] {
    if (!this.timelineEl) {
      return [];
    }
    return Array.from(this.timelineEl.querySelectorAll<HTMLElement>(".vm-marker"));
  }

  get activeRedDotId(): string | null {
    return this.activeDotId;
  }

  get redDots(): RedDotDto[] {
    return [...this.dots];
  }
}
