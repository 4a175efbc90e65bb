import { WorkbenchApi } from "./api.js";
import { WorkbenchSession } from "./session.js";
import { WorkbenchUi } from "./ui.js";

// Served by `diffeval serve --ui-dir frontend` the API is same-origin;
// point elsewhere with <meta name="api-base" content="http://host:port">.
const base =
  document.querySelector<HTMLMetaElement>('meta[name="api-base"]')?.content ?? "";

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("workbench");
  if (!root) throw new Error("missing #workbench mount point");
  const ui = new WorkbenchUi(new WorkbenchSession(new WorkbenchApi(base)), root);
  void ui.start();
});
