/** Shared test utilities: a Node-backed fetch for talking to a real server
 * from the DOM test environment, page mounting, and polling. */

import { readFileSync } from "node:fs";
import http from "node:http";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { FetchLike } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

/** Mount the real page markup (minus scripts) into the test document. */
export function mountDom(doc: Document): void {
  const page = readFileSync(join(here, "..", "index.html"), "utf8");
  const match = /<body>([\s\S]*)<\/body>/.exec(page);
  if (!match) throw new Error("index.html has no body");
  doc.body.innerHTML = match[1].replace(/<script[\s\S]*?<\/script>/g, "");
}

/** Plain HTTP fetch built on node:http; the test DOM's own fetch stays out
 * of the loop so transport behavior is deterministic. */
export const nodeFetch: FetchLike = (input, init) =>
  new Promise((resolve, reject) => {
    const request = http.request(
      input,
      {
        method: init?.method ?? "GET",
        headers: (init?.headers as Record<string, string>) ?? {},
      },
      (response) => {
        const chunks: Buffer[] = [];
        response.on("data", (chunk: Buffer) => chunks.push(chunk));
        response.on("end", () => {
          const text = Buffer.concat(chunks).toString("utf8");
          const status = response.statusCode ?? 0;
          resolve({
            ok: status >= 200 && status < 300,
            status,
            statusText: response.statusMessage ?? "",
            json: async () => JSON.parse(text) as unknown,
            text: async () => text,
          } as unknown as Response);
        });
      },
    );
    request.on("error", reject);
    const body = init?.body;
    if (typeof body === "string") request.write(body);
    request.end();
  });

export async function waitUntil(
  check: () => boolean | Promise<boolean>,
  timeoutMs = 20_000,
  stepMs = 25,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      if (await check()) return;
    } catch {
      // treat a throwing check as "not yet"
    }
    if (Date.now() > deadline) throw new Error("condition not met in time");
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
}

export interface CannedReply {
  status: number;
  body?: unknown;
}

/** Build a Response-shaped object without depending on any DOM fetch impl. */
export function cannedResponse(reply: CannedReply): Response {
  return {
    ok: reply.status >= 200 && reply.status < 300,
    status: reply.status,
    statusText: String(reply.status),
    json: async () => {
      if (reply.body === undefined) throw new Error("empty body");
      return reply.body;
    },
  } as unknown as Response;
}
