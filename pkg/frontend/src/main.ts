import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// Served by the inference service itself, so same-origin relative URLs.
const app = mountApp(root, new ApiClient(""));
void app.boot();
