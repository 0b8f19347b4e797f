/* Browser entry point. Everything testable lives in app.ts and friends. */

import { boot } from "./app.js";

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", () => boot(document));
} else {
  boot(document);
}
