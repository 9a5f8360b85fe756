/** DOM rendering for the chat window and its debug side-panel. The view is
 * a pure function of the model; every model change repaints. */

import { EntityMatch, FilterVerdict } from "./api.js";
import { ChatModel } from "./model.js";

export interface ViewElements {
  messages: HTMLElement;
  banner: HTMLElement;
  input: HTMLInputElement;
  send: HTMLButtonElement;
  debugToggle: HTMLInputElement;
  debugPanel: HTMLElement;
}

export function bindView(doc: Document, model: ChatModel): ViewElements {
  const elements: ViewElements = {
    messages: doc.getElementById("messages") as HTMLElement,
    banner: doc.getElementById("banner") as HTMLElement,
    input: doc.getElementById("chat-input") as HTMLInputElement,
    send: doc.getElementById("send-button") as HTMLButtonElement,
    debugToggle: doc.getElementById("debug-toggle") as HTMLInputElement,
    debugPanel: doc.getElementById("debug-panel") as HTMLElement,
  };

  const submit = async () => {
    const text = elements.input.value;
    if (!model.canSend(text)) return;
    elements.input.value = "";
    const envelope = await model.send(text);
    if (envelope === null && model.failedDraft !== null) {
      elements.input.value = model.failedDraft;
    }
  };

  elements.send.addEventListener("click", () => void submit());
  elements.input.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") void submit();
  });
  elements.input.addEventListener("input", () => syncControls(elements, model));
  elements.debugToggle.addEventListener("change", () => model.toggleDebug());

  model.onChange(() => render(doc, elements, model));
  render(doc, elements, model);
  return elements;
}

function syncControls(elements: ViewElements, model: ChatModel): void {
  elements.send.disabled = !model.canSend(elements.input.value);
  elements.input.disabled = model.sessionId === null || model.closed;
}

export function render(doc: Document, elements: ViewElements, model: ChatModel): void {
  renderBanner(doc, elements, model);
  renderMessages(doc, elements, model);
  renderDebug(doc, elements, model);
  syncControls(elements, model);
}

function renderBanner(doc: Document, elements: ViewElements, model: ChatModel): void {
  elements.banner.textContent = "";
  elements.banner.hidden = model.banner === null;
  if (model.banner === null) return;
  const label = doc.createElement("span");
  label.textContent = `Could not reach the conversation service: ${model.banner} `;
  const retry = doc.createElement("button");
  retry.textContent = "Retry";
  retry.className = "retry-button";
  retry.addEventListener("click", () => void model.start());
  elements.banner.append(label, retry);
}

function renderMessages(doc: Document, elements: ViewElements, model: ChatModel): void {
  elements.messages.textContent = "";
  for (const message of model.messages) {
    const bubble = doc.createElement("div");
    bubble.className = `bubble ${message.speaker}${message.error ? " error" : ""}`;
    bubble.dataset.turn = String(message.turnIndex);
    bubble.dataset.speaker = message.speaker;
    const text = doc.createElement("p");
    text.textContent = message.text;
    const stamp = doc.createElement("time");
    stamp.textContent = new Date(message.timestamp).toLocaleTimeString();
    bubble.append(text, stamp);
    if (message.speaker === "bot" && !message.error) {
      bubble.addEventListener("click", () => model.selectTurn(message.turnIndex));
    }
    elements.messages.append(bubble);
  }
  if (model.inFlight) {
    const typing = doc.createElement("div");
    typing.className = "bubble bot typing";
    typing.textContent = "...";
    elements.messages.append(typing);
  }
}

function renderDebug(doc: Document, elements: ViewElements, model: ChatModel): void {
  elements.debugPanel.hidden = !model.debugVisible;
  elements.debugPanel.textContent = "";
  if (!model.debugVisible) return;
  const record = model.selectedRecord;
  if (!record) {
    elements.debugPanel.textContent = "No turns yet.";
    return;
  }
  const debug = record.debug;
  const title = doc.createElement("h2");
  title.textContent = `Turn ${record.turnIndex}`;
  elements.debugPanel.append(title);

  const facts: Array<[string, string]> = [
    ["chosen_generator", debug.generator ?? ""],
    ["intent", debug.intent ?? ""],
    ["topic", debug.topic ?? ""],
    ["user_topic", String(debug.topic_user ?? "")],
    ["ranker", String(debug.ranker ?? "")],
    ["engine_latency_ms", String(debug.latency_ms ?? "")],
    ["round_trip_ms", String(record.roundTripMs)],
  ];
  const list = doc.createElement("dl");
  list.className = "debug-facts";
  for (const [name, value] of facts) {
    const term = doc.createElement("dt");
    term.textContent = name;
    const detail = doc.createElement("dd");
    detail.textContent = value;
    detail.dataset.field = name;
    list.append(term, detail);
  }
  elements.debugPanel.append(list);

  elements.debugPanel.append(verdictBlock(doc, "input_filter", debug.input_filter));
  if (debug.output_filter) {
    elements.debugPanel.append(verdictBlock(doc, "output_filter", debug.output_filter));
  }
  elements.debugPanel.append(entityTable(doc, debug.entities ?? []));
}

function verdictBlock(doc: Document, name: string, verdict: FilterVerdict): HTMLElement {
  const block = doc.createElement("div");
  block.className = "verdict";
  block.dataset.filter = name;
  const parts = [verdict.blocked ? "blocked" : "passed"];
  if (verdict.category) parts.push(`category=${verdict.category}`);
  if (verdict.exemption) parts.push(`exemption=${verdict.exemption}`);
  block.textContent = `${name}: ${parts.join(" ")}`;
  return block;
}

function entityTable(doc: Document, entities: EntityMatch[]): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "entities";
  const heading = doc.createElement("h3");
  heading.textContent = entities.length ? "Matched entities" : "No entity matches";
  wrap.append(heading);
  if (!entities.length) return wrap;
  const table = doc.createElement("table");
  const head = doc.createElement("tr");
  for (const column of ["name", "type", "S", "h"]) {
    const cell = doc.createElement("th");
    cell.textContent = column;
    head.append(cell);
  }
  table.append(head);
  for (const entity of entities) {
    const row = doc.createElement("tr");
    row.dataset.entity = entity.name;
    for (const value of [
      entity.name,
      entity.entity_type,
      entity.match_score.toFixed(3),
      entity.rank_score.toFixed(3),
    ]) {
      const cell = doc.createElement("td");
      cell.textContent = value;
      row.append(cell);
    }
    table.append(row);
  }
  wrap.append(table);
  return wrap;
}

export function debugField(elements: ViewElements, field: string): string | null {
  const node = elements.debugPanel.querySelector(`dd[data-field="${field}"]`);
  return node ? node.textContent : null;
}
