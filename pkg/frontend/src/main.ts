// Bootstrap: wire the client, the reducer, and the renderer to the page.
// Hub base URL comes from ?hub=… (default: same host, port 7713).

import { HubClient } from "./client.js";
import { initialModel, reduce, type Action } from "./model.js";
import { render } from "./render.js";
import type { CommandName } from "./types.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("hub") ?? `http://${window.location.hostname || "127.0.0.1"}:7713`;

const mount = document.getElementById("app");
if (!mount) throw new Error("missing #app mount point");

let model = initialModel();

function dispatch(action: Action): void {
  model = reduce(model, action);
  mount!.innerHTML = render(model);
}

const client = new HubClient(baseUrl, dispatch);

mount.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const cmd = target.dataset.cmd as CommandName | undefined;
  if (cmd) {
    void client.sendCommand(cmd);
    return;
  }
  if (target.dataset.action === "reset-home") {
    void client.resetHome();
  }
});

mount.innerHTML = render(model);
client.start();
