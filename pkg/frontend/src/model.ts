/** Chat view-model: session lifecycle, message ordering, and per-turn debug
 * payloads. Pure state; the DOM layer subscribes and re-renders.
 *
 * Invariants the model enforces:
 * - messages render in turn_index order no matter when responses arrive
 * - at most one turn is in flight per window
 * - a failed send never loses the typed text
 * - conversation state changes only through the service endpoints
 */

import { ApiClient, ApiError, TurnDebug, TurnEnvelope } from "./api.js";

export type Speaker = "user" | "bot";

export interface Message {
  speaker: Speaker;
  text: string;
  timestamp: number;
  turnIndex: number;
  pending?: boolean;
  error?: boolean;
}

export interface TurnRecord {
  turnIndex: number;
  debug: TurnDebug;
  roundTripMs: number;
}

interface PendingEntry {
  speaker: Speaker;
  text: string;
  timestamp: number;
  error?: boolean;
}

const OPENING_TEXT = "hello";

export class ChatModel {
  sessionId: string | null = null;
  closed = false;
  inFlight = false;
  /** Set when the session could not start; the view offers a retry. */
  banner: string | null = null;
  /** Text of the last send that failed, preserved for the input box. */
  failedDraft: string | null = null;
  debugVisible = false;
  selectedTurn: number | null = null;

  private turns = new Map<number, { user?: PendingEntry; bot?: PendingEntry }>();
  private records = new Map<number, TurnRecord>();
  private nextLocalIndex = 0;
  private listeners: Array<() => void> = [];

  constructor(
    private readonly client: ApiClient,
    private readonly deviceId?: string,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  /** Messages in turn order; user bubble before bot bubble within a turn. */
  get messages(): Message[] {
    const out: Message[] = [];
    for (const index of [...this.turns.keys()].sort((a, b) => a - b)) {
      const turn = this.turns.get(index)!;
      if (turn.user) out.push({ ...turn.user, turnIndex: index });
      if (turn.bot) out.push({ ...turn.bot, turnIndex: index });
    }
    return out;
  }

  debugFor(turnIndex: number): TurnRecord | undefined {
    return this.records.get(turnIndex);
  }

  get latestRecord(): TurnRecord | undefined {
    const indexes = [...this.records.keys()];
    if (!indexes.length) return undefined;
    return this.records.get(Math.max(...indexes));
  }

  get selectedRecord(): TurnRecord | undefined {
    if (this.selectedTurn !== null) {
      return this.records.get(this.selectedTurn) ?? this.latestRecord;
    }
    return this.latestRecord;
  }

  canSend(text: string): boolean {
    return this.sessionId !== null && !this.closed && !this.inFlight && text.trim().length > 0;
  }

  selectTurn(turnIndex: number): void {
    if (this.records.has(turnIndex)) {
      this.selectedTurn = turnIndex;
      this.emit();
    }
  }

  toggleDebug(): void {
    this.debugVisible = !this.debugVisible;
    this.emit();
  }

  /** Create the session and fetch the engine's welcome line. */
  async start(): Promise<void> {
    this.banner = null;
    this.emit();
    try {
      this.sessionId = await this.client.createSession(this.deviceId);
      const envelope = await this.client.sendTurn(this.sessionId, OPENING_TEXT);
      // The opener is plumbing, not something the user typed: only the
      // engine's welcome message lands in the transcript.
      this.ingest(envelope, undefined, 0);
    } catch (err) {
      this.sessionId = null;
      this.banner = err instanceof Error ? err.message : "could not reach the service";
    }
    this.emit();
  }

  async send(text: string): Promise<TurnEnvelope | null> {
    const trimmed = text.trim();
    if (!this.canSend(trimmed)) return null;
    this.inFlight = true;
    this.failedDraft = null;
    const localIndex = this.nextLocalIndex;
    this.turns.set(localIndex, {
      user: { speaker: "user", text: trimmed, timestamp: Date.now() },
    });
    this.emit();

    const started = performance.now();
    try {
      const envelope = await this.client.sendTurn(this.sessionId!, trimmed);
      this.ingest(envelope, localIndex, performance.now() - started);
      return envelope;
    } catch (err) {
      const detail =
        err instanceof ApiError ? err.detail : err instanceof Error ? err.message : "request failed";
      // The utterance never reached the conversation: drop the optimistic
      // bubble, show an inline error in its place, keep the typed text.
      this.turns.set(localIndex, {
        bot: {
          speaker: "bot",
          text: `The service could not take that turn (${detail}). Your message was not sent.`,
          timestamp: Date.now(),
          error: true,
        },
      });
      this.failedDraft = text;
      return null;
    } finally {
      this.inFlight = false;
      this.emit();
    }
  }

  /** File a completed turn under the index the service assigned. */
  private ingest(envelope: TurnEnvelope, localIndex: number | undefined, roundTripMs: number): void {
    const index = envelope.turn_index;
    if (localIndex !== undefined && localIndex !== index) {
      const moved = this.turns.get(localIndex);
      this.turns.delete(localIndex);
      if (moved?.user) {
        const existing = this.turns.get(index) ?? {};
        existing.user = moved.user;
        this.turns.set(index, existing);
      }
    }
    const turn = this.turns.get(index) ?? {};
    turn.bot = { speaker: "bot", text: envelope.text, timestamp: Date.now() };
    this.turns.set(index, turn);
    this.records.set(index, {
      turnIndex: index,
      debug: envelope.debug,
      roundTripMs: Math.round(roundTripMs * 10) / 10,
    });
    this.nextLocalIndex = Math.max(this.nextLocalIndex, index + 1);
    this.closed = envelope.closed;
  }
}
