// Game actions: stroke submission and the suggestion lifecycle.
// Mutations render optimistically where there is something to show,
// then reconcile against the server response; failures surface as
// toasts and leave the overlay untouched.

import { ApiClient, ApiError } from './api.js';
import { SessionStore } from './store.js';
import type { SessionSnapshot, SketchJson, StrokeJson } from './types.js';

export class GameControls {
  constructor(
    private api: ApiClient,
    private store: SessionStore,
    private sessionId: string,
  ) {}

  private async guarded<T>(action: () => Promise<T>): Promise<T | null> {
    try {
      return await action();
    } catch (error) {
      if (error instanceof ApiError) {
        this.store.pushToast(error.code, error.message);
        return null;
      }
      this.store.pushToast('network_error', String(error));
      return null;
    }
  }

  async refresh(): Promise<SessionSnapshot | null> {
    return this.guarded(async () => {
      const snapshot = await this.api.getSession(this.sessionId);
      this.store.applySnapshot(snapshot);
      return snapshot;
    });
  }

  /** Submit a captured stroke: optimistic, then reconciled on echo. */
  async submitStroke(stroke: StrokeJson): Promise<boolean> {
    const snap = this.store.state.snapshot;
    if (!snap || !this.store.canDraw()) {
      this.store.pushToast('turn_violation', 'not your turn');
      return false;
    }
    this.store.addOptimistic(stroke);
    const sketch: SketchJson = { canvas: snap.canvas, strokes: [stroke] };
    const result = await this.guarded(() =>
      this.api.submitStrokes(this.sessionId, stroke.channel as any, sketch),
    );
    if (result === null) {
      this.store.dropOptimistic(stroke);
      return false;
    }
    this.store.applySnapshot(result);
    return true;
  }

  /** Ask the machine for a suggestion with the current control settings. */
  async requestCompletion(): Promise<boolean> {
    if (!this.store.isMachineTurn()) {
      this.store.pushToast('turn_violation', "it is not the machine's turn");
      return false;
    }
    const result = await this.guarded(() =>
      this.api.complete(this.sessionId, this.store.completionParams()),
    );
    if (result === null) return false;
    this.store.applySnapshot(result.state);
    return true;
  }

  async accept(): Promise<boolean> {
    const pending = this.store.state.snapshot?.pending_suggestion;
    if (!pending) {
      this.store.pushToast('no_pending_suggestion', 'nothing to accept');
      return false;
    }
    // optimistic: suggestion strokes move into the local buffer now
    for (const stroke of pending.sketch.strokes) this.store.addOptimistic(stroke);
    const result = await this.guarded(() => this.api.resolve(this.sessionId, 'accept'));
    if (result === null) {
      for (const stroke of pending.sketch.strokes) this.store.dropOptimistic(stroke);
      return false;
    }
    this.store.applySnapshot(result);
    return true;
  }

  async reject(): Promise<boolean> {
    if (!this.store.hasPending()) {
      this.store.pushToast('no_pending_suggestion', 'nothing to reject');
      return false;
    }
    const result = await this.guarded(() => this.api.resolve(this.sessionId, 'reject'));
    if (result === null) return false;
    this.store.applySnapshot(result);
    return true;
  }

  beginModify(): void {
    if (!this.store.hasPending()) {
      this.store.pushToast('no_pending_suggestion', 'nothing to modify');
      return;
    }
    this.store.beginOverlayEdit();
  }

  /** Send the dragged overlay; the original stays in server provenance. */
  async submitModify(): Promise<boolean> {
    const edited = this.store.state.overlayEdit;
    if (!edited) {
      this.store.pushToast('no_pending_suggestion', 'no edit in progress');
      return false;
    }
    const result = await this.guarded(() =>
      this.api.resolve(this.sessionId, 'modify', edited),
    );
    if (result === null) return false; // keep the edit on screen
    this.store.clearOverlayEdit();
    this.store.applySnapshot(result);
    return true;
  }

  async signalConsensus(): Promise<boolean> {
    const player = this.store.state.localPlayer;
    if (player !== 'red' && player !== 'green') {
      this.store.pushToast('not_a_voter', 'only the human players vote');
      return false;
    }
    const result = await this.guarded(() => this.api.consensus(this.sessionId, player));
    if (result === null) return false;
    this.store.applySnapshot(result);
    return true;
  }
}
