/**
 * Shared plumbing for the UI tests: the page mount, a scriptable fetch
 * stub, and accessors for the pieces of the DOM the assertions care about.
 *
 * The response fixtures are frozen bodies from the real service running on
 * the deterministic stub backend (see fixtures/generate_fixtures.py), so
 * what the tests replay is exactly what the wire carries.
 */

import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { vi } from 'vitest';
import type { AssessResponse, CommentPayload } from '../src/api.js';
import { initApp } from '../src/app.js';

export function loadFixture<T>(name: string): T {
  const path = join(process.cwd(), 'tests', 'fixtures', name);
  return JSON.parse(readFileSync(path, 'utf8')) as T;
}

export function assessFixture(): AssessResponse {
  return loadFixture<AssessResponse>('assess_response.json');
}

export function rescoreFixture(): CommentPayload {
  return loadFixture<CommentPayload>('rescore_response.json');
}

/** The two-bullet review the fixtures were generated from. */
export const REVIEW = [
  'Weaknesses:',
  '- The ablation removes both components at once, so the contribution of the gating module stays unknown.',
  '- No comparison against the strongest published baseline on the shared benchmark is included.',
  '',
].join('\n');

/** Load the real index.html into the test document and wire the app up. */
export function mountPage(): void {
  const html = readFileSync(join(process.cwd(), 'index.html'), 'utf8');
  const start = html.indexOf('<body>') + '<body>'.length;
  const end = html.indexOf('</body>');
  document.body.innerHTML = html
    .slice(start, end)
    .replace(/<script[\s\S]*?<\/script>/, '');
  initApp(document);
}

export interface FetchCall {
  url: string;
  body: Record<string, unknown>;
}

export type FetchRoute = (
  url: string,
  body: Record<string, unknown>,
) => Response | Promise<Response>;

/** Replace global fetch with a router; returns the recorded calls. */
export function stubFetch(route: FetchRoute): FetchCall[] {
  const calls: FetchCall[] = [];
  vi.stubGlobal(
    'fetch',
    vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
      const url = String(input);
      const body = init?.body
        ? (JSON.parse(String(init.body)) as Record<string, unknown>)
        : {};
      calls.push({ url, body });
      return route(url, body);
    }),
  );
  return calls;
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve(value: T): void;
  reject(reason: unknown): void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (reason: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** Let pending promise chains settle. */
export async function flush(): Promise<void> {
  await new Promise((r) => setTimeout(r, 0));
  await new Promise((r) => setTimeout(r, 0));
}

export function submitAssess(text: string): void {
  const input = document.getElementById('review-input') as HTMLTextAreaElement;
  input.value = text;
  const form = document.getElementById('assess-form') as HTMLFormElement;
  form.dispatchEvent(new Event('submit', { bubbles: true, cancelable: true }));
}

export function cardEls(): HTMLElement[] {
  return [...document.querySelectorAll<HTMLElement>('#cards .card')];
}

export function editCard(cardEl: HTMLElement, text: string): void {
  const editor = cardEl.querySelector<HTMLTextAreaElement>('.card-editor');
  if (!editor) {
    throw new Error('card has no editor');
  }
  editor.value = text;
  editor.dispatchEvent(new Event('input', { bubbles: true }));
}

export function clickRescore(cardEl: HTMLElement): void {
  const button = cardEl.querySelector<HTMLButtonElement>('.rescore-button');
  if (!button) {
    throw new Error('card has no re-score button');
  }
  button.click();
}

export function statusText(cardEl: HTMLElement): string {
  return cardEl.querySelector('.card-status')?.textContent ?? '';
}

export function rescoreButton(cardEl: HTMLElement): HTMLButtonElement {
  const button = cardEl.querySelector<HTMLButtonElement>('.rescore-button');
  if (!button) {
    throw new Error('card has no re-score button');
  }
  return button;
}

/** Badge labels by aspect, exactly as rendered. */
export function badgeValues(cardEl: HTMLElement): Record<string, string> {
  const out: Record<string, string> = {};
  for (const badge of cardEl.querySelectorAll<HTMLElement>('.badge')) {
    const aspect = badge.dataset.aspect ?? '';
    out[aspect] = badge.querySelector('.badge-value')?.textContent ?? '';
  }
  return out;
}
