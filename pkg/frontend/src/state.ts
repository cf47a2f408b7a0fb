/**
 * Client-side session state.
 *
 * A session is the result of one assess round plus whatever the user has
 * edited since. Each card keeps the last server response alongside the
 * local buffer, and the dirty flag records whether the two disagree. The
 * transition methods deliberately never drop server data on failure, so a
 * bad round trip leaves the card exactly where it was.
 */

import type {
  AssessResponse,
  CommentPayload,
  DropReport,
  ParseFailure,
  ScoreMode,
} from './api.js';

export interface Card {
  commentId: string;
  /** Last server verdict for this card, including the text it scored. */
  scored: CommentPayload;
  /** What the editor currently holds. */
  buffer: string;
  dirty: boolean;
  busy: boolean;
  error: string | null;
  /** Set when the server answered 404; only a fresh assess recovers. */
  sessionLost: boolean;
}

function cardFromPayload(payload: CommentPayload): Card {
  return {
    commentId: payload.comment_id,
    scored: payload,
    buffer: payload.text,
    dirty: false,
    busy: false,
    error: null,
    sessionLost: false,
  };
}

export class ReviewSession {
  readonly sessionId: string;
  readonly mode: ScoreMode;
  readonly dropReport: DropReport;
  readonly parseFailures: ParseFailure[];
  readonly cards: Card[];

  constructor(response: AssessResponse, mode: ScoreMode) {
    this.sessionId = response.session_id;
    this.mode = mode;
    this.dropReport = response.drop_report;
    this.parseFailures = response.parse_failures;
    this.cards = response.comments.map(cardFromPayload);
  }

  card(commentId: string): Card | undefined {
    return this.cards.find((c) => c.commentId === commentId);
  }

  /** Record an edit. Dirty means the buffer differs from the scored text. */
  edit(commentId: string, text: string): Card {
    const card = this.require(commentId);
    card.buffer = text;
    card.dirty = text !== card.scored.text;
    return card;
  }

  /**
   * Claim the card for one in-flight rescore. Returns false when there is
   * nothing to do: the card is clean, already waiting on the server, or
   * belongs to a session the server has forgotten.
   */
  beginRescore(commentId: string): boolean {
    const card = this.require(commentId);
    if (!card.dirty || card.busy || card.sessionLost) {
      return false;
    }
    card.busy = true;
    card.error = null;
    return true;
  }

  /** Install a fresh verdict. Dirty is recomputed against the current buffer. */
  applyRescore(commentId: string, payload: CommentPayload): Card {
    const card = this.require(commentId);
    card.scored = payload;
    card.dirty = card.buffer !== payload.text;
    card.busy = false;
    card.error = null;
    return card;
  }

  /** Record a failed rescore. Buffer and last verdict stay untouched. */
  failRescore(
    commentId: string,
    message: string,
    opts: { sessionLost?: boolean } = {},
  ): Card {
    const card = this.require(commentId);
    card.busy = false;
    card.error = message;
    card.sessionLost = opts.sessionLost ?? false;
    return card;
  }

  private require(commentId: string): Card {
    const card = this.card(commentId);
    if (!card) {
      throw new Error(`no card for comment ${commentId}`);
    }
    return card;
  }
}
