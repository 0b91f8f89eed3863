/** Wire types for the annotation service API. */

/** Session summary returned by the session endpoints. */
export interface SessionDescriptor {
  session_id: string;
  /** Number of samples in the session. */
  n: number;
  /** Feature dimensionality. */
  d: number;
  /** Number of classes. */
  c: number;
  /** Neighbors per sample in the similarity graph. */
  k: number;
  /** Similarity temperature. */
  T: number;
  mode: string;
  /** Count of samples with a given label. */
  labeled: number;
  /** Count of samples whose label is clamped during propagation. */
  trusted: number;
  /** Monotone counter of applied label events. */
  version: number;
  /** Label version the current soft labels were computed from. */
  soft_version: number;
}

/** One suggested sample from the annotation queue. */
export interface Suggestion {
  id: string;
  /** Current pseudo-label class. */
  pseudo: number;
  /** Confidence in the pseudo-label, 0 when undetermined. */
  confidence: number;
}

export interface NextResponse {
  items: Suggestion[];
  version: number;
  soft_version: number;
  /** True when the pool could not fill the requested count. */
  poolExhausted: boolean;
}

/** A single label event. Field names follow the service event log. */
export interface LabelEvent {
  id: string;
  action: "label" | "relabel" | "verify" | "reject";
  class?: number;
  trusted?: boolean;
  annotator?: string;
}

export interface PostLabelsResponse {
  version: number;
  soft_version: number;
  propagation: string;
}

/** Per-sample soft label row. */
export interface PseudoRow {
  id: string;
  scores: number[];
  pseudo: number;
  confidence: number;
}

export interface PseudoResponse {
  version: number;
  soft_version: number;
  results: PseudoRow[];
  /** Requested ids the session does not contain. */
  missing: string[];
}

/** One entry of the verification queue, most suspect first. */
export interface VerifyItem {
  id: string;
  /** The class the annotator gave this sample. */
  given: number;
  /** The class propagation currently assigns. */
  pseudo: number;
  /** Disagreement between given label and propagated scores. */
  score: number;
}

export interface VerifyResponse {
  items: VerifyItem[];
  version: number;
  soft_version: number;
}

/** Error envelope returned by the service on any failure. */
export interface ApiErrorBody {
  code: string;
  message: string;
  detail: unknown;
}
