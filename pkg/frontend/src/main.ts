/** Page bootstrap: read the service URL and preset, mount the chat. */

import { ServiceClient } from "./api.js";
import { ChatController } from "./session.js";
import { mount } from "./view.js";

declare global {
  interface Window {
    chatController?: ChatController;
  }
}

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  const baseUrl = param("service", "http://127.0.0.1:8080");
  const preset = param("preset", "clinic_demo");

  const api = new ServiceClient(baseUrl);
  const controller = new ChatController(api, (state) => render(state));
  const render = mount(root, controller);
  window.chatController = controller; // console access for poking at state
  void controller.start(preset);
});
