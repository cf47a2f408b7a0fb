/**
 * DOM builders. Every piece of server or user text goes through
 * textContent, never innerHTML, so review content cannot inject markup.
 */

import type { DropReport, ParseFailure } from './api.js';
import { ASPECT_ORDER, ASPECT_TITLES, badgeClass } from './badges.js';
import type { Card } from './state.js';

export interface CardHandlers {
  onEdit(commentId: string, text: string): void;
  onRescore(commentId: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function buildBadgeRow(doc: Document, card: Card): HTMLElement {
  const row = el(doc, 'div', 'badge-row');
  for (const aspect of ASPECT_ORDER) {
    const score = card.scored.aspects[aspect];
    if (!score) {
      continue;
    }
    const badge = el(doc, 'span', badgeClass(score.label));
    badge.dataset.aspect = aspect;
    badge.appendChild(el(doc, 'span', 'badge-name', ASPECT_TITLES[aspect] ?? aspect));
    badge.appendChild(el(doc, 'span', 'badge-value', score.label));
    badge.title = `${ASPECT_TITLES[aspect] ?? aspect}: ${score.label}`;
    row.appendChild(badge);
  }
  return row;
}

function buildRationales(doc: Document, card: Card): HTMLElement | null {
  const entries = ASPECT_ORDER.flatMap((aspect) => {
    const rationale = card.scored.aspects[aspect]?.rationale;
    return rationale ? [[aspect, rationale] as const] : [];
  });
  if (entries.length === 0) {
    return null;
  }
  const details = el(doc, 'details', 'rationales');
  details.appendChild(el(doc, 'summary', undefined, 'Rationales'));
  const list = el(doc, 'dl');
  for (const [aspect, rationale] of entries) {
    list.appendChild(el(doc, 'dt', undefined, ASPECT_TITLES[aspect] ?? aspect));
    list.appendChild(el(doc, 'dd', undefined, rationale));
  }
  details.appendChild(list);
  return details;
}

/** Sync the status line and the re-score button with the card state. */
export function refreshCardStatus(cardEl: HTMLElement, card: Card): void {
  const status = cardEl.querySelector<HTMLElement>('.card-status');
  const button = cardEl.querySelector<HTMLButtonElement>('.rescore-button');
  if (!status || !button) {
    return;
  }
  status.classList.toggle('is-error', card.error !== null);
  if (card.busy) {
    status.textContent = 'Scoring…';
    button.disabled = true;
  } else if (card.sessionLost) {
    status.textContent = card.error ?? 'Session expired. Run a full assess to continue.';
    button.disabled = true;
  } else if (card.error !== null) {
    status.textContent = `${card.error} The last scores still apply to the previous text.`;
    button.disabled = false;
  } else if (card.dirty) {
    status.textContent = 'Re-score needed.';
    button.disabled = false;
  } else {
    status.textContent = '';
    button.disabled = true;
  }
}

export function buildCard(doc: Document, card: Card, handlers: CardHandlers): HTMLElement {
  const root = el(doc, 'article', 'card');
  root.dataset.commentId = card.commentId;
  root.appendChild(buildBadgeRow(doc, card));
  root.appendChild(el(doc, 'p', 'card-status'));

  const editor = el(doc, 'textarea', 'card-editor');
  editor.value = card.buffer;
  editor.rows = 3;
  editor.addEventListener('input', () => handlers.onEdit(card.commentId, editor.value));
  root.appendChild(editor);

  const actions = el(doc, 'div', 'card-actions');
  const button = el(doc, 'button', 'rescore-button', 'Re-score');
  button.type = 'button';
  button.addEventListener('click', () => handlers.onRescore(card.commentId));
  actions.appendChild(button);
  root.appendChild(actions);

  const rationales = buildRationales(doc, card);
  if (rationales) {
    root.appendChild(rationales);
  }
  refreshCardStatus(root, card);
  return root;
}

export function buildDropReport(doc: Document, report: DropReport): DocumentFragment {
  const fragment = doc.createDocumentFragment();
  fragment.appendChild(el(doc, 'h2', undefined, 'Segmentation'));
  fragment.appendChild(
    el(
      doc,
      'p',
      undefined,
      `${report.input_fragments} fragment(s) in, ${report.output_comments} comment(s) kept.`,
    ),
  );
  const dropped = Object.entries(report.stages).filter(([, count]) => count > 0);
  if (dropped.length > 0) {
    const list = el(doc, 'ul');
    for (const [stage, count] of dropped) {
      list.appendChild(el(doc, 'li', undefined, `${stage.replace(/_/g, ' ')}: ${count}`));
    }
    fragment.appendChild(list);
  }
  return fragment;
}

export function buildParseFailures(doc: Document, failures: ParseFailure[]): DocumentFragment {
  const fragment = doc.createDocumentFragment();
  fragment.appendChild(el(doc, 'h2', undefined, `${failures.length} comment(s) not scored`));
  for (const failure of failures) {
    fragment.appendChild(
      el(
        doc,
        'p',
        undefined,
        failure.error ?? `The backend answer did not parse (${failure.parse_status}).`,
      ),
    );
    const quote = el(doc, 'blockquote');
    quote.textContent = failure.text;
    fragment.appendChild(quote);
  }
  return fragment;
}
