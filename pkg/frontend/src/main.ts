import { ApiClient } from "./api.js";
import { App } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const campaignId = params.get("campaign") ?? "campaign";
const base = params.get("server") ?? "";

const root = document.getElementById("app");
if (root) {
  const app = new App(root, new ApiClient(base, campaignId));
  app.renderRegister();
}
