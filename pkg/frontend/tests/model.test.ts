/** Unit tests for the chat model and view against a canned transport. */

import { describe, expect, it } from "vitest";
import { ApiClient, FetchLike, TurnDebug, TurnEnvelope } from "../src/api.js";
import { ChatModel } from "../src/model.js";
import { bindView, debugField } from "../src/view.js";
import { CannedReply, cannedResponse, mountDom, waitUntil } from "./helpers.js";

function envelope(turnIndex: number, text: string, debug: Partial<TurnDebug> = {}): TurnEnvelope {
  return {
    session_id: "s1",
    turn_index: turnIndex,
    text,
    closed: false,
    debug: {
      intent: "STATEMENT",
      topic_user: null,
      topic: "GENERAL",
      sentiment: 0,
      is_question: false,
      entities: [],
      input_filter: { blocked: false },
      generator: "chitchat",
      latency_ms: 1.5,
      ...debug,
    },
  };
}

type Route = (path: string, init?: RequestInit) => CannedReply | Promise<CannedReply>;

/** Canned transport: records calls, delegates to a swappable route table. */
function makeTransport(route: Route) {
  const calls: Array<{ path: string; method: string }> = [];
  const state = { route };
  const fetchImpl: FetchLike = async (input, init) => {
    const path = input.replace(/^http:\/\/[^/]+/, "");
    calls.push({ path, method: init?.method ?? "GET" });
    return cannedResponse(await state.route(path, init));
  };
  return { fetchImpl, calls, state };
}

const healthyRoute =
  (turnText = "I would love to know what to call you. What is your name?"): Route =>
  (path) => {
    if (path === "/sessions") return { status: 201, body: { session_id: "s1" } };
    if (path === "/sessions/s1/turns") return { status: 200, body: envelope(0, turnText, { generator: "welcome" }) };
    return { status: 404, body: { detail: "unknown path" } };
  };

function makeModel(route: Route) {
  const transport = makeTransport(route);
  const model = new ChatModel(new ApiClient("http://fake", transport.fetchImpl), "dev-1");
  return { model, transport };
}

describe("session start", () => {
  it("renders only the welcome bubble", async () => {
    const { model } = makeModel(healthyRoute());
    await model.start();
    expect(model.sessionId).toBe("s1");
    expect(model.banner).toBeNull();
    expect(model.messages).toHaveLength(1);
    expect(model.messages[0].speaker).toBe("bot");
    expect(model.messages[0].text).toContain("your name");
    expect(model.messages[0].turnIndex).toBe(0);
    expect(model.canSend("hi")).toBe(true);
  });

  it("shows a retry banner when the service is unreachable, then recovers", async () => {
    const { model, transport } = makeModel(() => {
      throw new Error("connect ECONNREFUSED");
    });
    await model.start();
    expect(model.sessionId).toBeNull();
    expect(model.banner).toContain("ECONNREFUSED");
    expect(model.messages).toHaveLength(0);
    expect(model.canSend("hi")).toBe(false);

    transport.state.route = healthyRoute();
    await model.start();
    expect(model.banner).toBeNull();
    expect(model.sessionId).toBe("s1");
    expect(model.messages).toHaveLength(1);
  });
});

describe("turn ordering", () => {
  it("renders messages by turn_index even when the service numbers turns out of order", async () => {
    const byText: Record<string, TurnEnvelope> = {
      a: envelope(5, "reply to a"),
      b: envelope(3, "reply to b"),
    };
    const { model } = makeModel((path, init) => {
      if (path === "/sessions") return { status: 201, body: { session_id: "s1" } };
      const text = (JSON.parse(String(init?.body)) as { text: string }).text;
      if (text === "hello") return { status: 200, body: envelope(0, "welcome") };
      return { status: 200, body: byText[text] };
    });
    await model.start();
    await model.send("a");
    await model.send("b");

    const order = model.messages.map((m) => `${m.turnIndex}:${m.speaker}`);
    expect(order).toEqual(["0:bot", "3:user", "3:bot", "5:user", "5:bot"]);
    expect(model.messages.find((m) => m.turnIndex === 3 && m.speaker === "user")?.text).toBe("b");
    expect(model.messages.find((m) => m.turnIndex === 5 && m.speaker === "user")?.text).toBe("a");
  });
});

describe("in-flight turns", () => {
  it("allows only one turn in flight per window", async () => {
    let release!: (reply: CannedReply) => void;
    const gate = new Promise<CannedReply>((resolve) => (release = resolve));
    let turnCalls = 0;
    const { model } = makeModel((path, init) => {
      if (path === "/sessions") return { status: 201, body: { session_id: "s1" } };
      const text = (JSON.parse(String(init?.body)) as { text: string }).text;
      if (text === "hello") return { status: 200, body: envelope(0, "welcome") };
      turnCalls += 1;
      return gate;
    });
    await model.start();

    const pending = model.send("first");
    expect(model.inFlight).toBe(true);
    expect(model.canSend("second")).toBe(false);
    expect(await model.send("second")).toBeNull();
    expect(turnCalls).toBe(1);

    release({ status: 200, body: envelope(1, "done") });
    const settled = await pending;
    expect(settled?.turn_index).toBe(1);
    expect(model.inFlight).toBe(false);
    expect(model.canSend("second")).toBe(true);
  });

  it("never sends empty input", async () => {
    const { model, transport } = makeModel(healthyRoute());
    await model.start();
    const before = transport.calls.length;
    expect(model.canSend("")).toBe(false);
    expect(model.canSend("   ")).toBe(false);
    expect(await model.send("   ")).toBeNull();
    expect(transport.calls.length).toBe(before);
  });
});

describe("failed sends", () => {
  it("keeps the typed text and shows an inline error bubble", async () => {
    let fail = true;
    const { model } = makeModel((path, init) => {
      if (path === "/sessions") return { status: 201, body: { session_id: "s1" } };
      const text = (JSON.parse(String(init?.body)) as { text: string }).text;
      if (text === "hello") return { status: 200, body: envelope(0, "welcome") };
      if (fail) return { status: 500, body: { detail: "engine fell over" } };
      return { status: 200, body: envelope(1, "recovered") };
    });
    await model.start();

    expect(await model.send("tell me a story")).toBeNull();
    expect(model.failedDraft).toBe("tell me a story");
    expect(model.inFlight).toBe(false);
    const last = model.messages[model.messages.length - 1];
    expect(last.error).toBe(true);
    expect(last.speaker).toBe("bot");
    expect(last.text).toContain("engine fell over");
    expect(last.text).toContain("was not sent");
    expect(model.debugFor(1)).toBeUndefined();
    expect(model.canSend("tell me a story")).toBe(true);

    fail = false;
    const retried = await model.send("tell me a story");
    expect(retried?.turn_index).toBe(1);
    const order = model.messages.map((m) => `${m.turnIndex}:${m.speaker}`);
    expect(order).toEqual(["0:bot", "1:user", "1:bot"]);
    expect(model.messages.some((m) => m.error)).toBe(false);
  });
});

describe("debug records", () => {
  it("tracks the latest turn and honors explicit selection", async () => {
    const generators: Record<string, string> = { "one": "news", "two": "knowledge_qa" };
    let index = 0;
    const { model } = makeModel((path, init) => {
      if (path === "/sessions") return { status: 201, body: { session_id: "s1" } };
      const text = (JSON.parse(String(init?.body)) as { text: string }).text;
      if (text === "hello") return { status: 200, body: envelope(0, "welcome", { generator: "welcome" }) };
      index += 1;
      return { status: 200, body: envelope(index, `reply ${index}`, { generator: generators[text] }) };
    });
    await model.start();
    await model.send("one");
    await model.send("two");

    expect(model.latestRecord?.turnIndex).toBe(2);
    expect(model.selectedRecord?.debug.generator).toBe("knowledge_qa");
    model.selectTurn(1);
    expect(model.selectedRecord?.turnIndex).toBe(1);
    expect(model.selectedRecord?.debug.generator).toBe("news");
    model.selectTurn(99);
    expect(model.selectedRecord?.turnIndex).toBe(1);
  });
});

describe("view", () => {
  it("disables send for empty input and while a turn is pending", async () => {
    mountDom(document);
    let release!: (reply: CannedReply) => void;
    const gate = new Promise<CannedReply>((resolve) => (release = resolve));
    let started = false;
    const { model } = makeModel((path, init) => {
      if (path === "/sessions") return { status: 201, body: { session_id: "s1" } };
      const text = (JSON.parse(String(init?.body)) as { text: string }).text;
      if (text === "hello") return { status: 200, body: envelope(0, "welcome") };
      started = true;
      return gate;
    });
    const elements = bindView(document, model);
    await model.start();

    expect(elements.send.disabled).toBe(true);
    elements.input.value = "hi there";
    elements.input.dispatchEvent(new Event("input"));
    expect(elements.send.disabled).toBe(false);

    elements.send.click();
    await waitUntil(() => started);
    expect(model.inFlight).toBe(true);
    expect(elements.send.disabled).toBe(true);

    release({ status: 200, body: envelope(1, "done") });
    await waitUntil(() => !model.inFlight);
    expect(elements.input.value).toBe("");
  });

  it("shows the banner with a retry button when startup fails", async () => {
    mountDom(document);
    const { model, transport } = makeModel(() => {
      throw new Error("connect ECONNREFUSED");
    });
    const elements = bindView(document, model);
    await model.start();

    expect(elements.banner.hidden).toBe(false);
    expect(elements.banner.textContent).toContain("Could not reach");
    const retry = elements.banner.querySelector("button.retry-button") as HTMLButtonElement;
    expect(retry).not.toBeNull();

    transport.state.route = healthyRoute();
    retry.click();
    await waitUntil(() => model.sessionId !== null);
    expect(elements.banner.hidden).toBe(true);
    expect(elements.messages.querySelectorAll(".bubble").length).toBe(1);
  });

  it("keeps the debug panel in step with the selected turn", async () => {
    mountDom(document);
    const { model } = makeModel((path, init) => {
      if (path === "/sessions") return { status: 201, body: { session_id: "s1" } };
      const text = (JSON.parse(String(init?.body)) as { text: string }).text;
      if (text === "hello") return { status: 200, body: envelope(0, "welcome", { generator: "welcome" }) };
      return {
        status: 200,
        body: envelope(1, "movie reply", {
          generator: "movie_ckt",
          entities: [
            { id: "m1", name: "James Bond", entity_type: "movie_actor", match_score: 1, rank_score: 7.35 },
          ],
          input_filter: { blocked: false, category: "finance", trigger: "bond", exemption: "atomic_entity" },
        }),
      };
    });
    const elements = bindView(document, model);
    await model.start();
    await model.send("i love james bond movies");

    expect(elements.debugPanel.hidden).toBe(true);
    elements.debugToggle.click();
    expect(elements.debugPanel.hidden).toBe(false);
    expect(debugField(elements, "chosen_generator")).toBe("movie_ckt");
    expect(elements.debugPanel.textContent).toContain("James Bond");
    expect(elements.debugPanel.textContent).toContain("exemption=atomic_entity");

    const welcomeBubble = elements.messages.querySelector('[data-turn="0"][data-speaker="bot"]') as HTMLElement;
    welcomeBubble.click();
    expect(debugField(elements, "chosen_generator")).toBe("welcome");
    expect(elements.debugPanel.textContent).toContain("Turn 0");
  });
});
