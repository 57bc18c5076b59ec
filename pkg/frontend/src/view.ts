/** Pure projection of store state into what the page shows. */

import { Suggestion } from "./api.js";
import { ComposerState, ComposerStore } from "./store.js";

export interface ViewModel {
    modelNames: string[];
    selectedModel: string | null;
    draft: string[];
    suggestions: Suggestion[];
    warnings: string[];
    error: string | null;
    loading: boolean;
}

export function viewModel(store: ComposerStore): ViewModel {
    const state: ComposerState = store.getState();
    return {
        modelNames: state.models.map((m) => m.name),
        selectedModel: state.model,
        draft: state.draft,
        suggestions: store.visibleSuggestions(),
        warnings: state.warnings,
        error: state.error,
        loading: state.loading,
    };
}

export function formatScore(score: number): string {
    const magnitude = Math.abs(score);
    if (magnitude !== 0 && (magnitude < 1e-3 || magnitude >= 1e4)) {
        return score.toExponential(2);
    }
    return score.toFixed(4);
}
