/** Browser entry point: wires the API client, chat model, and DOM view. */

import { ApiClient } from "./api.js";
import { ChatModel } from "./model.js";
import { bindView } from "./view.js";

function deviceId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("device");
  if (fromQuery) return fromQuery;
  const stored = window.localStorage.getItem("chat-device-id");
  if (stored) return stored;
  const minted = `web-${Math.random().toString(36).slice(2, 10)}`;
  window.localStorage.setItem("chat-device-id", minted);
  return minted;
}

function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.location.origin;
}

const client = new ApiClient(baseUrl());
const model = new ChatModel(client, deviceId());
bindView(document, model);
void model.start();
