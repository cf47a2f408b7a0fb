import { describe, expect, it } from 'vitest';
import { ReviewSession } from '../src/state.js';
import { assessFixture, rescoreFixture } from './helpers.js';

function session(): ReviewSession {
  return new ReviewSession(assessFixture(), 's+r');
}

describe('ReviewSession', () => {
  it('builds one clean card per returned comment', () => {
    const live = session();

    expect(live.cards).toHaveLength(2);
    for (const card of live.cards) {
      expect(card.buffer).toBe(card.scored.text);
      expect(card.dirty).toBe(false);
      expect(card.busy).toBe(false);
      expect(card.error).toBeNull();
    }
    expect(live.sessionId).toBe(assessFixture().session_id);
  });

  it('tracks dirtiness against the scored text, not edit history', () => {
    const live = session();
    const id = live.cards[0]!.commentId;
    const original = live.cards[0]!.scored.text;

    expect(live.edit(id, original + ' more').dirty).toBe(true);
    expect(live.edit(id, original).dirty).toBe(false);
  });

  it('gates rescoring on the dirty flag', () => {
    const live = session();
    const id = live.cards[0]!.commentId;

    expect(live.beginRescore(id)).toBe(false);

    live.edit(id, 'changed');
    expect(live.beginRescore(id)).toBe(true);
    expect(live.cards[0]!.busy).toBe(true);

    // Already in flight; a second claim must lose.
    expect(live.beginRescore(id)).toBe(false);
  });

  it('refuses to rescore once the server session is gone', () => {
    const live = session();
    const id = live.cards[0]!.commentId;
    live.edit(id, 'changed');
    live.beginRescore(id);
    live.failRescore(id, 'gone', { sessionLost: true });

    expect(live.beginRescore(id)).toBe(false);
  });

  it('installs a new verdict and recomputes dirtiness', () => {
    const live = session();
    const payload = rescoreFixture();
    const id = payload.comment_id;
    live.edit(id, payload.text);
    live.beginRescore(id);

    const card = live.applyRescore(id, payload);

    expect(card.scored).toBe(payload);
    expect(card.dirty).toBe(false);
    expect(card.busy).toBe(false);
    expect(card.error).toBeNull();
  });

  it('stays dirty when the buffer moved on during the round trip', () => {
    const live = session();
    const payload = rescoreFixture();
    const id = payload.comment_id;
    live.edit(id, payload.text);
    live.beginRescore(id);
    live.edit(id, payload.text + ' and more typing');

    const card = live.applyRescore(id, payload);

    expect(card.dirty).toBe(true);
    expect(card.buffer).toBe(payload.text + ' and more typing');
  });

  it('keeps the buffer and the old verdict through a failure', () => {
    const live = session();
    const id = live.cards[0]!.commentId;
    const before = live.cards[0]!.scored;
    live.edit(id, 'edited but unlucky');
    live.beginRescore(id);

    const card = live.failRescore(id, 'network down');

    expect(card.scored).toBe(before);
    expect(card.buffer).toBe('edited but unlucky');
    expect(card.dirty).toBe(true);
    expect(card.busy).toBe(false);
    expect(card.error).toBe('network down');
    expect(card.sessionLost).toBe(false);
  });

  it('rejects operations on unknown comments', () => {
    const live = session();

    expect(live.card('nope')).toBeUndefined();
    expect(() => live.edit('nope', 'x')).toThrow('no card for comment nope');
  });
});
