// UI state container. The server snapshot is the single source of
// truth: every rendered stroke exists either in the last snapshot or in
// the optimistic buffer awaiting exactly one echo; on any mismatch the
// snapshot wins wholesale.

import type {
  Channel,
  CompletionParams,
  SessionSnapshot,
  SketchJson,
  StrokeJson,
} from './types.js';

export type ConnectionStatus = 'idle' | 'connecting' | 'live' | 'lost';

export interface Toast {
  code: string;
  message: string;
}

export interface ControlSettings {
  policy: 'emitter' | 'receptor';
  amount: number;
  temperature: number;
  seed: number;
  checkpoint: string | null; // informational; the service owns the model
}

export interface UiState {
  snapshot: SessionSnapshot | null;
  localPlayer: Channel | null;
  optimistic: StrokeJson[];
  overlayEdit: SketchJson | null; // non-null while modifying the suggestion
  connection: ConnectionStatus;
  toasts: Toast[];
  controls: ControlSettings;
}

export function strokesEqual(a: StrokeJson, b: StrokeJson): boolean {
  if (a.channel !== b.channel || a.points.length !== b.points.length) return false;
  for (let i = 0; i < a.points.length; i++) {
    if (a.points[i][0] !== b.points[i][0] || a.points[i][1] !== b.points[i][1]) {
      return false;
    }
  }
  return true;
}

export class SessionStore {
  state: UiState = {
    snapshot: null,
    localPlayer: null,
    optimistic: [],
    overlayEdit: null,
    connection: 'idle',
    toasts: [],
    controls: {
      policy: 'emitter',
      amount: 1,
      temperature: 0.4,
      seed: 0,
      checkpoint: null,
    },
  };

  private listeners: Array<(state: UiState) => void> = [];

  subscribe(listener: (state: UiState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  setLocalPlayer(player: Channel | null): void {
    this.state.localPlayer = player;
    this.emit();
  }

  setConnection(status: ConnectionStatus): void {
    this.state.connection = status;
    this.emit();
  }

  setControls(controls: Partial<ControlSettings>): void {
    this.state.controls = { ...this.state.controls, ...controls };
    this.emit();
  }

  pushToast(code: string, message: string): void {
    this.state.toasts = [...this.state.toasts, { code, message }];
    this.emit();
  }

  /** Server snapshot wins; echoed optimistic strokes leave the buffer. */
  applySnapshot(snapshot: SessionSnapshot): void {
    this.state.snapshot = snapshot;
    this.state.optimistic = this.state.optimistic.filter(
      (pending) => !snapshot.sketch.strokes.some((s) => strokesEqual(s, pending)),
    );
    if (!snapshot.pending_suggestion) this.state.overlayEdit = null;
    this.emit();
  }

  addOptimistic(stroke: StrokeJson): void {
    this.state.optimistic = [...this.state.optimistic, stroke];
    this.emit();
  }

  dropOptimistic(stroke: StrokeJson): void {
    this.state.optimistic = this.state.optimistic.filter((s) => !strokesEqual(s, stroke));
    this.emit();
  }

  beginOverlayEdit(): void {
    const pending = this.state.snapshot?.pending_suggestion;
    if (!pending) return;
    this.state.overlayEdit = JSON.parse(JSON.stringify(pending.sketch)) as SketchJson;
    this.emit();
  }

  dragOverlayVertex(strokeIndex: number, pointIndex: number, mm: [number, number]): void {
    const edit = this.state.overlayEdit;
    if (!edit || !edit.strokes[strokeIndex]?.points[pointIndex]) return;
    edit.strokes[strokeIndex].points[pointIndex] = mm;
    this.emit();
  }

  clearOverlayEdit(): void {
    this.state.overlayEdit = null;
    this.emit();
  }

  /** Drawing is allowed only on the local player's turn, with no
   * suggestion pending and the session open. */
  canDraw(): boolean {
    const snap = this.state.snapshot;
    return (
      !!snap &&
      snap.status === 'open' &&
      !snap.pending_suggestion &&
      !!this.state.localPlayer &&
      snap.expected_player === this.state.localPlayer
    );
  }

  isMachineTurn(): boolean {
    const snap = this.state.snapshot;
    return !!snap && snap.status === 'open' && snap.expected_player === 'blue';
  }

  hasPending(): boolean {
    return !!this.state.snapshot?.pending_suggestion;
  }

  completionParams(): CompletionParams {
    const c = this.state.controls;
    return {
      policy: c.policy,
      amount: c.amount,
      temperature: c.temperature,
      seed: c.seed,
    };
  }
}
