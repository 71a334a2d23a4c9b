/**
 * Request discipline for interactive controls: debounced input, at most one
 * in-flight request per control, and stale responses discarded by sequence
 * number.  A newer scheduled task supersedes an older one that has not been
 * dispatched yet; a response is applied only if no newer response has been.
 */

export class RequestGuard {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inflight = false;
  private queued: (() => void) | null = null;
  private nextSeq = 0;
  private appliedSeq = -1;

  constructor(private debounceMs = 150) {}

  /** Debounce, serialize, and apply unless a newer response already landed. */
  schedule<T>(run: () => Promise<T>, apply: (value: T) => void,
              onError?: (err: unknown) => void): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.dispatch(run, apply, onError);
    }, this.debounceMs);
  }

  private dispatch<T>(run: () => Promise<T>, apply: (value: T) => void,
                      onError?: (err: unknown) => void): void {
    if (this.inflight) {
      // keep only the latest waiting task
      this.queued = () => this.dispatch(run, apply, onError);
      return;
    }
    const seq = this.nextSeq++;
    this.inflight = true;
    run().then(
      (value) => {
        this.inflight = false;
        if (seq > this.appliedSeq) {
          this.appliedSeq = seq;
          apply(value);
        }
        this.drain();
      },
      (err) => {
        this.inflight = false;
        if (onError) onError(err);
        this.drain();
      },
    );
  }

  private drain(): void {
    const q = this.queued;
    this.queued = null;
    if (q) q();
  }

  get busy(): boolean {
    return this.inflight || this.timer !== null;
  }
}
