/** Types and transport for the suggestion service HTTP API. */

export interface Suggestion {
    herb: string;
    score: number;
}

export interface SuggestResponse {
    suggestions: Suggestion[];
    warnings: string[];
    model: string;
}

export interface ModelInfo {
    name: string;
    type: string;
    dims: Record<string, number>;
    metadata: Record<string, unknown>;
}

/** Everything the UI needs from the backend; mocked in tests. */
export interface Transport {
    models(): Promise<ModelInfo[]>;
    suggest(model: string, herbs: string[], k: number): Promise<SuggestResponse>;
    completeHerbs(prefix: string, k: number): Promise<string[]>;
}

export class ApiError extends Error {
    constructor(readonly status: number, message: string) {
        super(message);
        this.name = "ApiError";
    }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
    if (response.ok) {
        return (await response.json()) as T;
    }
    let message = `request failed with status ${response.status}`;
    try {
        const body = (await response.json()) as { error?: string };
        if (body.error) {
            message = body.error;
        }
    } catch {
        // non-JSON error body; keep the generic message
    }
    throw new ApiError(response.status, message);
}

export class HttpTransport implements Transport {
    constructor(private readonly base: string = "") {}

    models(): Promise<ModelInfo[]> {
        return fetch(`${this.base}/api/models`).then((r) => parseOrThrow<ModelInfo[]>(r));
    }

    suggest(model: string, herbs: string[], k: number): Promise<SuggestResponse> {
        return fetch(`${this.base}/api/suggest`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ model, herbs, k }),
        }).then((r) => parseOrThrow<SuggestResponse>(r));
    }

    completeHerbs(prefix: string, k: number): Promise<string[]> {
        const params = new URLSearchParams({ prefix, k: String(k) });
        return fetch(`${this.base}/api/herbs?${params}`).then((r) =>
            parseOrThrow<string[]>(r),
        );
    }
}
