// Shared test plumbing: a fetch shim over node:http (independent of the DOM
// environment's own fetch), a canned-response fake fetch for unit tests, and
// a spawner for the real API server used by the integration suite.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import * as http from "node:http";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type { FetchLike } from "../src/api.js";

function asResponse(status: number, bodyText: string): Response {
  const shim = {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: () => Promise.resolve(JSON.parse(bodyText)),
    text: () => Promise.resolve(bodyText),
  };
  return shim as unknown as Response;
}

// real-network fetch built on node:http so the integration tests do not
// depend on whatever fetch the DOM test environment installs
export const nodeHttpFetch: FetchLike = (input, init) =>
  new Promise((resolve, reject) => {
    const req = http.request(
      input,
      {
        method: init?.method ?? "GET",
        headers: (init?.headers as Record<string, string>) ?? {},
      },
      (res) => {
        const chunks: Buffer[] = [];
        res.on("data", (chunk: Buffer) => chunks.push(chunk));
        res.on("end", () => {
          resolve(asResponse(res.statusCode ?? 0, Buffer.concat(chunks).toString("utf-8")));
        });
      },
    );
    req.on("error", reject);
    if (init?.body !== undefined && init.body !== null) {
      req.write(init.body);
    }
    req.end();
  });

export interface CannedCall {
  method: string;
  url: string;
  body: unknown;
}

// fake fetch for unit tests: handlers keyed by "METHOD path", called with the
// parsed JSON body; every call is recorded for assertions
export function makeFakeFetch(
  handlers: Record<string, (body: unknown) => { status: number; json: unknown }>,
): { fetchFn: FetchLike; calls: CannedCall[] } {
  const calls: CannedCall[] = [];
  const fetchFn: FetchLike = (input, init) => {
    const method = init?.method ?? "GET";
    const url = new URL(input, "http://unit.test");
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ method, url: url.pathname, body });
    const handler = handlers[`${method} ${url.pathname}`];
    if (!handler) {
      return Promise.resolve(
        asResponse(404, JSON.stringify({ detail: `no handler for ${method} ${url.pathname}` })),
      );
    }
    const out = handler(body);
    return Promise.resolve(asResponse(out.status, JSON.stringify(out.json)));
  };
  return { fetchFn, calls };
}

export interface RunningServer {
  baseUrl: string;
  stop: () => Promise<void>;
}

// boot `cxrstudy serve` on a free-ish port and wait for /healthz
export async function startServer(): Promise<RunningServer> {
  const workdir = mkdtempSync(join(tmpdir(), "cxrstudy-webui-"));
  const port = 18300 + (process.pid % 400);
  const proc: ChildProcess = spawn(
    "cxrstudy",
    [
      "serve",
      "--host",
      "127.0.0.1",
      "--port",
      String(port),
      "--event-log",
      join(workdir, "events.jsonl"),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const stderr: string[] = [];
  proc.stderr?.on("data", (chunk: Buffer) => stderr.push(chunk.toString()));

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30_000;
  for (;;) {
    if (proc.exitCode !== null) {
      throw new Error(`server exited early: ${stderr.join("")}`);
    }
    try {
      const res = await nodeHttpFetch(`${baseUrl}/healthz`);
      if (res.ok) {
        break;
      }
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error(`server did not come up: ${stderr.join("")}`);
    }
    await new Promise((r) => setTimeout(r, 200));
  }

  return {
    baseUrl,
    stop: () =>
      new Promise<void>((resolve) => {
        proc.once("exit", () => {
          rmSync(workdir, { recursive: true, force: true });
          resolve();
        });
        proc.kill("SIGTERM");
        setTimeout(() => proc.kill("SIGKILL"), 5_000).unref();
      }),
  };
}
