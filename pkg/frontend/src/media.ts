/**
 * Thin media abstraction so the player logic can run against a real
 * <video> element in the browser and against a scripted fake in tests.
 */

export type MediaEvent = "play" | "pause" | "seeking" | "loadedmetadata";

export interface MediaAdapter {
  readonly currentTime: number;
  readonly duration: number;
  readonly paused: boolean;
  /** The DOM node to mount, or null when the media has no visual element. */
  readonly element: HTMLElement | null;
  play(): Promise<void>;
  pause(): void;
  seek(toS: number): void;
  on(event: MediaEvent, handler: () => void): void;
  off(event: MediaEvent, handler: () => void): void;
}

export class HtmlVideoAdapter implements MediaAdapter {
  constructor(readonly video: HTMLVideoElement) {}

  get currentTime(): number {
    return this.video.currentTime;
  }

  get duration(): number {
    return this.video.duration;
  }

  get paused(): boolean {
    return this.video.paused;
  }

  get element(): HTMLElement {
    return this.video;
  }

  async play(): Promise<void> {
    await this.video.play();
  }

  pause(): void {
    this.video.pause();
  }

  seek(toS: number): void {
    this.video.currentTime = toS;
  }

  on(event: MediaEvent, handler: () => void): void {
    this.video.addEventListener(event, handler);
  }

  off(event: MediaEvent, handler: () => void): void {
    this.video.removeEventListener(event, handler);
  }
}
