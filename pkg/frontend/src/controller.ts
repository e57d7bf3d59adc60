/** Session controller: one mutation in flight, version-conflict recovery.
 *
 * All semantics live behind the service; the controller just sequences
 * endpoint calls and folds acknowledged payloads into the view state.
 */

import {
  MergeServiceClient,
  VersionConflictError,
  type OperationDict,
} from "./api.js";
import {
  initialState,
  toggleExpanded,
  withBusy,
  withError,
  withNotice,
  withServerState,
  withSession,
  withStepResult,
  withSuggestions,
  withUndoResult,
  type ViewState,
} from "./state.js";

export class SessionController {
  state: ViewState = initialState();

  constructor(
    private client: MergeServiceClient,
    private onChange: (state: ViewState) => void = () => {},
  ) {}

  private set(state: ViewState): void {
    this.state = state;
    this.onChange(state);
  }

  async loadSources(files: Array<{ name: string; content: string }>): Promise<void> {
    this.set(withBusy(this.state, true));
    try {
      const payload = await this.client.createSession(files);
      this.set(withBusy(withSession(this.state, payload), false));
    } catch (error) {
      this.set(withBusy(withError(this.state, String(error)), false));
    }
  }

  toggle(key: string): void {
    this.set(toggleExpanded(this.state, key));
  }

  /** Apply an operation; on a stale version, refresh and ask to retry. */
  async apply(operation: OperationDict): Promise<void> {
    const { sessionId, stateVersion } = this.state;
    if (!sessionId || this.state.busy) {
      return;
    }
    this.set(withBusy(this.state, true));
    try {
      const payload = await this.client.applyOperation(sessionId, stateVersion, operation);
      this.set(withBusy(withStepResult(this.state, operation, payload), false));
    } catch (error) {
      if (error instanceof VersionConflictError) {
        await this.refresh();
        this.set(
          withBusy(
            withNotice(
              this.state,
              "another window changed the session; state refreshed, please re-try",
            ),
            false,
          ),
        );
        return;
      }
      this.set(withBusy(withError(this.state, String(error)), false));
    }
  }

  async acceptSuggestion(index: number): Promise<void> {
    const suggestion = this.state.suggestions[index];
    if (suggestion) {
      await this.apply(suggestion.operation);
    }
  }

  async dismissSuggestion(index: number): Promise<void> {
    const suggestion = this.state.suggestions[index];
    const sessionId = this.state.sessionId;
    if (!suggestion || !sessionId || this.state.busy) {
      return;
    }
    this.set(withBusy(this.state, true));
    try {
      const payload = await this.client.dismiss(sessionId, suggestion.operation);
      this.set(withBusy(withSuggestions(this.state, payload.suggestions), false));
    } catch (error) {
      this.set(withBusy(withError(this.state, String(error)), false));
    }
  }

  async resolveConflict(conflictIndex: number, resolutionIndex: number): Promise<void> {
    const resolution = this.state.conflicts[conflictIndex]?.resolutions[resolutionIndex];
    if (resolution) {
      await this.apply(resolution);
    }
  }

  async undo(): Promise<void> {
    const { sessionId, stateVersion } = this.state;
    if (!sessionId || this.state.busy) {
      return;
    }
    this.set(withBusy(this.state, true));
    try {
      const payload = await this.client.undo(sessionId, stateVersion);
      this.set(withBusy(withUndoResult(this.state, payload), false));
    } catch (error) {
      if (error instanceof VersionConflictError) {
        await this.refresh();
        this.set(withBusy(this.state, false));
        return;
      }
      this.set(withBusy(withError(this.state, String(error)), false));
    }
  }

  async setPreferred(preferred: string | null): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId) {
      return;
    }
    this.set(withBusy(this.state, true));
    try {
      await this.client.setPreferred(sessionId, preferred);
      this.set(withBusy({ ...this.state, preferred }, false));
    } catch (error) {
      this.set(withBusy(withError(this.state, String(error)), false));
    }
  }

  async refresh(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId) {
      return;
    }
    const [stateResponse, suggestionsResponse, conflictsResponse] = await Promise.all([
      this.client.getState(sessionId),
      this.client.getSuggestions(sessionId),
      this.client.getConflicts(sessionId),
    ]);
    this.set({
      ...withServerState(this.state, stateResponse),
      suggestions: suggestionsResponse.suggestions,
      conflicts: conflictsResponse.conflicts,
      highlights: new Set(),
    });
  }

  async exportText(format: "canonical" | "owl"): Promise<string | null> {
    const sessionId = this.state.sessionId;
    if (!sessionId) {
      return null;
    }
    try {
      return await this.client.exportText(sessionId, format);
    } catch (error) {
      this.set(withError(this.state, String(error)));
      return null;
    }
  }
}

/** Parse the free-form "k=v k=v" field list of the direct-operation form. */
export function parseDirectFields(type: string, fieldsText: string): OperationDict {
  const op: OperationDict = { type };
  for (const chunk of fieldsText.trim().split(/\s+/)) {
    if (!chunk) {
      continue;
    }
    const eq = chunk.indexOf("=");
    if (eq <= 0) {
      throw new Error(`malformed field ${chunk!}; expected key=value`);
    }
    op[chunk.slice(0, eq)] = chunk.slice(eq + 1);
  }
  return op;
}
