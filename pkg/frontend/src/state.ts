/** View state and its pure transitions.
 *
 * The rendered trees always reflect the last server payload the client
 * acknowledged; nothing here mutates ontology data speculatively.  The
 * only client-local additions are pane expansion, highlights from the
 * last operation, and the busy/error flags.
 */

import type {
  ConflictView,
  CreateResponse,
  OntologyView,
  OperationDict,
  SessionState,
  StepResponse,
  SuggestionView,
  UndoResponse,
} from "./api.js";

export interface ViewState {
  sessionId: string | null;
  stateVersion: number;
  mergedName: string;
  preferred: string | null;
  sources: OntologyView[];
  merged: OntologyView | null;
  suggestions: SuggestionView[];
  conflicts: ConflictView[];
  opLog: OperationDict[];
  busy: boolean;
  error: string | null;
  notice: string | null;
  expanded: ReadonlySet<string>;
  highlights: ReadonlySet<string>;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    stateVersion: -1,
    mergedName: "GlobalOntology",
    preferred: null,
    sources: [],
    merged: null,
    suggestions: [],
    conflicts: [],
    opLog: [],
    busy: false,
    error: null,
    notice: null,
    expanded: new Set(),
    highlights: new Set(),
  };
}

export function withSession(state: ViewState, payload: CreateResponse): ViewState {
  return {
    ...state,
    sessionId: payload.sessionId,
    stateVersion: payload.stateVersion,
    mergedName: payload.mergedName,
    preferred: payload.preferred,
    sources: payload.sources,
    merged: payload.merged,
    suggestions: payload.suggestions,
    conflicts: payload.conflicts,
    opLog: payload.opLog,
    error: null,
    notice: null,
    highlights: new Set(),
  };
}

export function withServerState(state: ViewState, payload: SessionState): ViewState {
  return {
    ...state,
    stateVersion: payload.stateVersion,
    preferred: payload.preferred,
    sources: payload.sources,
    merged: payload.merged,
    opLog: payload.opLog,
  };
}

export function withStepResult(
  state: ViewState,
  operation: OperationDict,
  payload: StepResponse,
): ViewState {
  const highlights = new Set<string>([...payload.created, ...payload.deleted]);
  if (payload.result) {
    highlights.add(payload.result);
  }
  return {
    ...state,
    stateVersion: payload.stateVersion,
    merged: payload.merged,
    suggestions: payload.suggestions,
    conflicts: payload.conflicts,
    opLog: payload.applied ? [...state.opLog, operation] : state.opLog,
    highlights,
    error: null,
    notice: payload.applied ? null : "the operation raised a conflict instead of applying",
  };
}

export function withUndoResult(state: ViewState, payload: UndoResponse): ViewState {
  return {
    ...state,
    stateVersion: payload.stateVersion,
    merged: payload.merged,
    suggestions: payload.suggestions,
    conflicts: payload.conflicts,
    opLog: state.opLog.slice(0, -1),
    highlights: new Set(),
    error: null,
    notice: null,
  };
}

export function withSuggestions(state: ViewState, suggestions: SuggestionView[]): ViewState {
  return { ...state, suggestions };
}

export function withBusy(state: ViewState, busy: boolean): ViewState {
  return { ...state, busy };
}

export function withError(state: ViewState, error: string | null): ViewState {
  return { ...state, error };
}

export function withNotice(state: ViewState, notice: string | null): ViewState {
  return { ...state, notice };
}

export function toggleExpanded(state: ViewState, key: string): ViewState {
  const expanded = new Set(state.expanded);
  if (expanded.has(key)) {
    expanded.delete(key);
  } else {
    expanded.add(key);
  }
  return { ...state, expanded };
}

/** A frame name shown in the merged pane, qualified for highlight lookup. */
export function frameRef(ontologyName: string, localName: string): string {
  return `${ontologyName}:${localName}`;
}

export function isHighlighted(state: ViewState, localName: string): boolean {
  if (!state.merged) {
    return false;
  }
  return state.highlights.has(frameRef(state.merged.name, localName));
}

/** Suggestions annotated by the server as moved toward the user's focus. */
export function hasFocusMarker(suggestion: SuggestionView): boolean {
  return suggestion.explanations.some((e) => e.kind === "focus-move");
}
