import { App } from "./app.js";
import { ReviewApi } from "./api.js";

const root = document.getElementById("app");
if (root) {
  const app = new App(root, new ReviewApi(""));
  void app.showQueue();
}
