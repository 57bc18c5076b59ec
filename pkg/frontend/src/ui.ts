/** DOM wiring: render the store into the three panels and forward events. */

import { Transport } from "./api.js";
import { ComposerStore } from "./store.js";
import { Typeahead } from "./typeahead.js";
import { formatScore, viewModel } from "./view.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) {
        node.className = className;
    }
    if (text !== undefined) {
        node.textContent = text;
    }
    return node;
}

export function mount(root: HTMLElement, store: ComposerStore, transport: Transport): void {
    root.innerHTML = "";

    const header = el("header");
    header.append(el("h1", "", "Prescription composer"));
    const modelPicker = el("select", "model-picker");
    modelPicker.addEventListener("change", () => {
        void store.switchModel(modelPicker.value);
    });
    header.append(modelPicker);

    const banner = el("div", "banner");
    banner.hidden = true;

    const main = el("main");
    const draftPanel = el("section", "panel draft-panel");
    draftPanel.append(el("h2", "", "Draft"));
    const draftList = el("ul", "draft-list");
    draftPanel.append(draftList);

    const inputRow = el("div", "input-row");
    const input = el("input");
    input.placeholder = "add a herb...";
    const addButton = el("button", "", "Add");
    const completions = el("ul", "completions");
    inputRow.append(input, addButton);
    draftPanel.append(inputRow, completions);

    const suggestPanel = el("section", "panel suggest-panel");
    suggestPanel.append(el("h2", "", "Suggestions"));
    const suggestList = el("ul", "suggest-list");
    suggestPanel.append(suggestList);

    main.append(draftPanel, suggestPanel);
    root.append(header, banner, main);

    const typeahead = new Typeahead(transport, (herbs) => {
        completions.innerHTML = "";
        for (const herb of herbs) {
            const item = el("li", "completion", herb);
            item.addEventListener("mousedown", () => {
                input.value = "";
                completions.innerHTML = "";
                void store.addHerb(herb);
            });
            completions.append(item);
        }
    });

    const submit = () => {
        const value = input.value;
        input.value = "";
        completions.innerHTML = "";
        typeahead.cancel();
        void store.addHerb(value);
    };
    addButton.addEventListener("click", submit);
    input.addEventListener("keydown", (event) => {
        if (event.key === "Enter") {
            submit();
        }
    });
    input.addEventListener("input", () => {
        if (input.value.trim()) {
            typeahead.query(input.value.trim());
        } else {
            completions.innerHTML = "";
            typeahead.cancel();
        }
    });

    const render = () => {
        const vm = viewModel(store);

        if (modelPicker.options.length !== vm.modelNames.length) {
            modelPicker.innerHTML = "";
            for (const name of vm.modelNames) {
                const option = el("option", "", name);
                option.value = name;
                modelPicker.append(option);
            }
        }
        if (vm.selectedModel !== null) {
            modelPicker.value = vm.selectedModel;
        }

        banner.hidden = !vm.error && vm.warnings.length === 0;
        banner.textContent = vm.error ?? vm.warnings.join(" / ");
        banner.classList.toggle("error", vm.error !== null);

        draftList.innerHTML = "";
        vm.draft.forEach((herb, index) => {
            const item = el("li", "draft-herb");
            item.append(el("span", "", herb));
            const remove = el("button", "remove", "x");
            remove.addEventListener("click", () => void store.removeHerb(index));
            item.append(remove);
            draftList.append(item);
        });

        suggestList.innerHTML = "";
        suggestList.classList.toggle("loading", vm.loading);
        for (const suggestion of vm.suggestions) {
            const item = el("li", "suggestion");
            const label = el("span", "herb", suggestion.herb);
            const score = el("span", "score", formatScore(suggestion.score));
            const accept = el("button", "", "Accept");
            accept.addEventListener("click", () => {
                void store.acceptSuggestion(suggestion.herb);
            });
            item.append(label, score, accept);
            suggestList.append(item);
        }
    };

    store.subscribe(render);
    render();
}
