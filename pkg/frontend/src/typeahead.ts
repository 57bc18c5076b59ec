/** Vocabulary-backed completion for the herb input field. */

import { Transport } from "./api.js";

export class Typeahead {
    private ticket = 0;
    private timer: ReturnType<typeof setTimeout> | null = null;

    constructor(
        private readonly transport: Transport,
        private readonly onResults: (herbs: string[]) => void,
        private readonly k: number = 8,
        private readonly delayMs: number = 120,
    ) {}

    /** Debounced lookup; out-of-order responses never render. */
    query(prefix: string): void {
        if (this.timer !== null) {
            clearTimeout(this.timer);
        }
        const ticket = ++this.ticket;
        this.timer = setTimeout(async () => {
            try {
                const herbs = await this.transport.completeHerbs(prefix, this.k);
                if (ticket === this.ticket) {
                    this.onResults(herbs);
                }
            } catch {
                if (ticket === this.ticket) {
                    this.onResults([]);
                }
            }
        }, this.delayMs);
    }

    cancel(): void {
        if (this.timer !== null) {
            clearTimeout(this.timer);
            this.timer = null;
        }
        this.ticket++;
    }
}
