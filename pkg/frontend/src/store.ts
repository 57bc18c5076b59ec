/** Draft state machine for interactive composition.
 *
 * The store owns the draft (ordered, duplicate-free herb list), the selected
 * model, and the latest suggestions. Every suggestion request carries a
 * monotonically increasing sequence number; a response only renders when its
 * number still matches the latest request, so stale responses from rapid
 * edits are discarded. The UI performs no scoring of its own.
 */

import { ApiError, ModelInfo, Suggestion, Transport } from "./api.js";

export interface ComposerState {
    models: ModelInfo[];
    model: string | null;
    draft: string[];
    suggestions: Suggestion[];
    warnings: string[];
    error: string | null;
    loading: boolean;
}

export type Listener = (state: ComposerState) => void;

const initialState = (): ComposerState => ({
    models: [],
    model: null,
    draft: [],
    suggestions: [],
    warnings: [],
    error: null,
    loading: false,
});

export class ComposerStore {
    private state: ComposerState = initialState();
    private seq = 0;
    private listeners = new Set<Listener>();

    constructor(
        private readonly transport: Transport,
        private readonly k: number = 8,
    ) {}

    getState(): ComposerState {
        return this.state;
    }

    subscribe(listener: Listener): () => void {
        this.listeners.add(listener);
        return () => this.listeners.delete(listener);
    }

    private update(patch: Partial<ComposerState>): void {
        this.state = { ...this.state, ...patch };
        for (const listener of this.listeners) {
            listener(this.state);
        }
    }

    /** Suggestions still worth showing: the response order, minus anything
     * that entered the draft after the request was issued. */
    visibleSuggestions(): Suggestion[] {
        const taken = new Set(this.state.draft);
        return this.state.suggestions.filter((s) => !taken.has(s.herb));
    }

    async init(): Promise<void> {
        try {
            const models = await this.transport.models();
            this.update({ models, model: models.length ? models[0].name : null });
        } catch (err) {
            this.update({ error: describe(err) });
            return;
        }
        await this.refresh();
    }

    async addHerb(herb: string): Promise<void> {
        const trimmed = herb.trim();
        if (!trimmed) {
            this.update({ error: "herb name is empty" });
            return;
        }
        if (this.state.draft.includes(trimmed)) {
            this.update({ error: `${trimmed} is already in the draft` });
            return;
        }
        this.update({ draft: [...this.state.draft, trimmed], error: null });
        await this.refresh();
    }

    async acceptSuggestion(herb: string): Promise<void> {
        await this.addHerb(herb);
    }

    async removeHerb(index: number): Promise<void> {
        if (index < 0 || index >= this.state.draft.length) {
            return;
        }
        const draft = this.state.draft.slice();
        draft.splice(index, 1);
        this.update({ draft, error: null });
        await this.refresh();
    }

    async switchModel(name: string): Promise<void> {
        const previous = this.state.model;
        if (name === previous) {
            return;
        }
        this.update({ model: name, error: null });
        const ok = await this.refresh();
        if (!ok && this.lastErrorWas404) {
            // unknown model: keep the draft and fall back to the old model
            this.update({ model: previous, error: this.state.error });
        }
    }

    private lastErrorWas404 = false;

    /** Request suggestions for the current draft; resolve to false when the
     * request failed, true when it rendered or was superseded. */
    private async refresh(): Promise<boolean> {
        if (this.state.model === null) {
            this.update({ suggestions: [], warnings: [] });
            return true;
        }
        const ticket = ++this.seq;
        this.update({ loading: true });
        try {
            const response = await this.transport.suggest(
                this.state.model,
                this.state.draft,
                this.k,
            );
            if (ticket !== this.seq) {
                return true; // superseded by a newer request; drop silently
            }
            this.update({
                suggestions: response.suggestions,
                warnings: response.warnings,
                loading: false,
                error: null,
            });
            return true;
        } catch (err) {
            if (ticket !== this.seq) {
                return true;
            }
            this.lastErrorWas404 = err instanceof ApiError && err.status === 404;
            this.update({ loading: false, error: describe(err) });
            return false;
        }
    }
}

function describe(err: unknown): string {
    if (err instanceof Error) {
        return err.message;
    }
    return String(err);
}
