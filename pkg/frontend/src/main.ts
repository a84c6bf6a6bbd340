import { ApiClient } from "./api.js";
import { initApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  // Served from /app/ by the scenario service; the API lives at the same origin.
  void initApp(root, new ApiClient("")).catch((error) => {
    root.textContent = `Failed to reach the scenario service: ${String(error)}`;
  });
}
