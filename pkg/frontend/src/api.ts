/**
 * Typed client for the scoring service.
 *
 * Paths are relative, so the built bundle works when the service itself
 * serves it and equally behind any static host that proxies /api.
 */

export type ScoreMode = 's' | 's+r';

export interface AspectScore {
  label: string;
  rationale: string | null;
}

export interface CommentPayload {
  comment_id: string;
  text: string;
  aspects: Record<string, AspectScore>;
}

export interface DropReport {
  input_fragments: number;
  output_comments: number;
  stages: Record<string, number>;
}

export interface ParseFailure {
  comment_id: string;
  text: string;
  parse_status: string;
  missing_keys: string[];
  error: string | null;
}

export interface AssessResponse {
  session_id: string;
  comments: CommentPayload[];
  drop_report: DropReport;
  parse_failures: ParseFailure[];
}

/** An HTTP response the service answered with an error status. */
export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = 'ApiError';
    this.status = status;
  }
}

async function post<T>(path: string, body: unknown): Promise<T> {
  const res = await fetch(path, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(body),
  });
  if (!res.ok) {
    let detail = `request failed with status ${res.status}`;
    try {
      const data: unknown = await res.json();
      if (
        typeof data === 'object' &&
        data !== null &&
        typeof (data as { detail?: unknown }).detail === 'string'
      ) {
        detail = (data as { detail: string }).detail;
      }
    } catch {
      // body was not JSON; keep the generic detail
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export function assessReview(
  reviewText: string,
  mode: ScoreMode,
  venue?: string,
): Promise<AssessResponse> {
  return post<AssessResponse>('/api/assess', {
    review_text: reviewText,
    mode,
    venue: venue || null,
  });
}

export function rescoreComment(
  sessionId: string,
  commentId: string,
  editedText: string,
): Promise<CommentPayload> {
  return post<CommentPayload>('/api/rescore', {
    session_id: sessionId,
    comment_id: commentId,
    edited_text: editedText,
  });
}
