import { HttpTransport } from "./api.js";
import { ComposerStore } from "./store.js";
import { mount } from "./ui.js";

const transport = new HttpTransport();
const store = new ComposerStore(transport);
const root = document.getElementById("app");
if (!root) {
    throw new Error("missing #app element");
}
mount(root, store, transport);
void store.init();
