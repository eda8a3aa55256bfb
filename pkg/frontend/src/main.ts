import { mountApp } from "./app.js";

const root = document.querySelector<HTMLElement>("#app");
if (root) mountApp(root);
