// Wire types shared with the service. Sketch JSON is the lingua franca:
// canvas millimeters, origin top-left, y downward.

export type Channel = 'black' | 'red' | 'green' | 'blue';

export type PointMm = [number, number];

export interface StrokeJson {
  channel: Channel;
  points: PointMm[];
}

export interface SketchJson {
  canvas: [number, number];
  strokes: StrokeJson[];
}

export type PolicyJson = 'emitter' | 'receptor' | { kind: 'custom'; channels: Channel[] };

export interface PendingSuggestionJson {
  policy: PolicyJson;
  amount: number;
  temperature: number;
  seed: number;
  cap_hit: boolean;
  checkpoint_id: string;
  sketch: SketchJson;
  context_channels: Channel[];
  context_stroke_count: number;
}

export interface RoundJson {
  index: number;
  player: Channel;
  stroke_count: number;
  decision: 'accept' | 'modify' | 'reject' | null;
}

export interface SessionSnapshot {
  id: string;
  status: 'open' | 'closed';
  canvas: [number, number];
  turn_order: Channel[];
  expected_player: Channel | null;
  round_count: number;
  event_count: number;
  consensus: Channel[];
  sketch: SketchJson;
  pending_suggestion: PendingSuggestionJson | null;
  rounds: RoundJson[];
}

export interface ChannelStatsJson {
  stroke_count: number;
  ink_length_mm: number;
  rounds: number;
}

export type StatsJson = Record<Channel, ChannelStatsJson>;

export interface ServerEvent {
  event: string;
  round: number;
  seq: number;
  payload: Record<string, unknown>;
}

export interface CompletionParams {
  policy: PolicyJson;
  amount: number;
  temperature: number;
  seed: number;
}

export const CHANNEL_COLORS: Record<Channel, string> = {
  black: '#0f0f0f',
  red: '#d22828',
  green: '#28aa3c',
  blue: '#2d46c8',
};
