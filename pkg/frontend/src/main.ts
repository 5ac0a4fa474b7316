import { SearchClient } from "./api.js";
import { createApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}
// same-origin by default; override with <body data-api="http://host:port">
const base = document.body.dataset.api ?? "";
createApp(root, new SearchClient(base));
