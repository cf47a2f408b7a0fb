/**
 * Page wiring. One ReviewSession drives the card list; the form owns the
 * paste-and-assess round. Rendering is kept coarse on purpose: a full
 * rebuild after assess, a single-card rebuild after rescore, and status
 * touch-ups for everything in between, so typing never fights a render.
 *
 * Failure handling never discards state. The pasted review stays in the
 * textarea whatever the service answers, and a card keeps its last scores
 * until a replacement actually arrives.
 */

import { ApiError, assessReview, rescoreComment, type ScoreMode } from './api.js';
import {
  buildCard,
  buildDropReport,
  buildParseFailures,
  refreshCardStatus,
  type CardHandlers,
} from './render.js';
import { ReviewSession } from './state.js';

interface PageElements {
  form: HTMLFormElement;
  input: HTMLTextAreaElement;
  modeSelect: HTMLSelectElement;
  venueInput: HTMLInputElement;
  assessButton: HTMLButtonElement;
  formError: HTMLElement;
  banner: HTMLElement;
  dropReport: HTMLElement;
  cards: HTMLElement;
  parseFailures: HTMLElement;
}

function grab(doc: Document): PageElements {
  const get = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (!node) {
      throw new Error(`page is missing #${id}`);
    }
    return node as T;
  };
  return {
    form: get<HTMLFormElement>('assess-form'),
    input: get<HTMLTextAreaElement>('review-input'),
    modeSelect: get<HTMLSelectElement>('mode-select'),
    venueInput: get<HTMLInputElement>('venue-input'),
    assessButton: get<HTMLButtonElement>('assess-button'),
    formError: get('form-error'),
    banner: get('global-banner'),
    dropReport: get('drop-report'),
    cards: get('cards'),
    parseFailures: get('parse-failures'),
  };
}

function describeAssessError(err: unknown): string {
  if (err instanceof ApiError) {
    return `The service rejected the request (${err.status}): ${err.message}`;
  }
  return 'Could not reach the service. Check that it is running, then press Assess to retry.';
}

export function initApp(doc: Document): void {
  const els = grab(doc);
  let session: ReviewSession | null = null;
  let assessBusy = false;
  const cardElements = new Map<string, HTMLElement>();

  const handlers: CardHandlers = {
    onEdit(commentId, text) {
      if (!session) {
        return;
      }
      const card = session.edit(commentId, text);
      const cardEl = cardElements.get(commentId);
      if (cardEl) {
        refreshCardStatus(cardEl, card);
      }
    },
    onRescore(commentId) {
      void runRescore(commentId);
    },
  };

  function showBanner(message: string): void {
    els.banner.textContent = message;
    els.banner.hidden = false;
  }

  function renderSession(live: ReviewSession): void {
    els.cards.replaceChildren();
    cardElements.clear();
    if (live.cards.length === 0) {
      els.cards.appendChild(
        Object.assign(doc.createElement('p'), {
          className: 'empty-note',
          textContent: 'No comment survived segmentation. The report below shows where each fragment went.',
        }),
      );
    }
    for (const card of live.cards) {
      const cardEl = buildCard(doc, card, handlers);
      cardElements.set(card.commentId, cardEl);
      els.cards.appendChild(cardEl);
    }
    els.dropReport.replaceChildren(buildDropReport(doc, live.dropReport));
    els.dropReport.hidden = false;
    if (live.parseFailures.length > 0) {
      els.parseFailures.replaceChildren(buildParseFailures(doc, live.parseFailures));
      els.parseFailures.hidden = false;
    } else {
      els.parseFailures.replaceChildren();
      els.parseFailures.hidden = true;
    }
  }

  async function runAssess(): Promise<void> {
    if (assessBusy) {
      return;
    }
    const text = els.input.value;
    if (!text.trim()) {
      els.formError.textContent = 'Paste a review before assessing.';
      els.formError.hidden = false;
      return;
    }
    els.formError.hidden = true;
    els.banner.hidden = true;
    assessBusy = true;
    els.assessButton.disabled = true;
    try {
      const mode = els.modeSelect.value as ScoreMode;
      const response = await assessReview(text, mode, els.venueInput.value.trim() || undefined);
      session = new ReviewSession(response, mode);
      renderSession(session);
    } catch (err) {
      showBanner(describeAssessError(err));
    } finally {
      assessBusy = false;
      els.assessButton.disabled = false;
    }
  }

  async function runRescore(commentId: string): Promise<void> {
    const live = session;
    if (!live || !live.beginRescore(commentId)) {
      return;
    }
    const card = live.card(commentId);
    const cardEl = cardElements.get(commentId);
    if (!card) {
      return;
    }
    if (cardEl) {
      refreshCardStatus(cardEl, card);
    }
    const sent = card.buffer;
    try {
      const payload = await rescoreComment(live.sessionId, commentId, sent);
      const updated = live.applyRescore(commentId, payload);
      const replacement = buildCard(doc, updated, handlers);
      cardElements.get(commentId)?.replaceWith(replacement);
      cardElements.set(commentId, replacement);
    } catch (err) {
      let message: string;
      let sessionLost = false;
      if (err instanceof ApiError && err.status === 404) {
        sessionLost = true;
        message = 'The server no longer knows this session. Run a full assess to continue.';
      } else if (err instanceof ApiError) {
        message = `Re-score failed (${err.status}): ${err.message}.`;
      } else {
        message = 'Network error during re-score. Press Re-score to retry.';
      }
      const updated = live.failRescore(commentId, message, { sessionLost });
      const staleEl = cardElements.get(commentId);
      if (staleEl) {
        refreshCardStatus(staleEl, updated);
      }
    }
  }

  els.form.addEventListener('submit', (event) => {
    event.preventDefault();
    void runAssess();
  });
}
