import { ApiClient } from "./api.js";
import { initApp } from "./app.js";

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  initApp(root, new ApiClient(""), window.localStorage);
});
