// End-to-end against a real gateway process. The suite shells out to the
// engine's CLI for the server and the example model, then talks to it the
// same way the browser does: HTTP and the monitor feed, nothing else.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ChildProcess, spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ApiError, Gateway } from "../src/api.js";
import { buildPayload, fieldsFor } from "../src/forms.js";
import { MonitorFeed, StaleItemError, TrackedItem, WorklistStore } from "../src/worklist.js";
import { bindRole, registerModel, roleBindings } from "../src/setup.js";

const PORT = 8900 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

const ROLED_XML = `<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             targetNamespace="http://example.test/roled-ui">
  <process id="roled">
    <documentation>@roles approver
bool ok;</documentation>
    <startEvent id="rs"/>
    <userTask id="RT1" name="approve">
      <documentation>@role approver
() : (bool _ok) -> { ok = _ok; }</documentation>
    </userTask>
    <endEvent id="re"/>
    <sequenceFlow id="rf1" sourceRef="rs" targetRef="RT1"/>
    <sequenceFlow id="rf2" sourceRef="RT1" targetRef="re"/>
  </process>
</definitions>
`;

let server: ChildProcess;
let workDir: string;
let demoXml: string;
let demoFlow: string;

function itemIds(store: WorklistStore): string[] {
  return store.items.map((i) => i.elementId);
}

async function submitWithForm(store: WorklistStore, item: TrackedItem, raw: Record<string, string>) {
  const fields = fieldsFor(item.imports);
  return store.submit(item, buildPayload(fields, raw));
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "worklist-ui-"));
  const fixture = spawnSync("python3", ["-m", "chaincase.cli", "fixture", "--dir", workDir]);
  if (fixture.status !== 0) {
    throw new Error(`fixture generation failed: ${fixture.stderr}`);
  }
  demoXml = readFileSync(join(workDir, "demo.bpmn"), "utf8");

  server = spawn("python3", ["-m", "chaincase.cli", "serve", "--port", String(PORT)], {
    stdio: ["ignore", "ignore", "pipe"],
  });
  let stderr = "";
  server.stderr?.on("data", (chunk) => { stderr += chunk; });

  for (let attempt = 0; ; attempt += 1) {
    if (server.exitCode !== null) {
      throw new Error(`gateway exited early: ${stderr}`);
    }
    try {
      const res = await fetch(`${BASE}/interpreter`, { method: "POST" });
      if (res.ok) break;
    } catch {
      // not listening yet
    }
    if (attempt > 60) throw new Error(`gateway never came up: ${stderr}`);
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
});

afterAll(async () => {
  if (server && server.exitCode === null) {
    server.kill("SIGTERM");
    await new Promise((resolve) => server.once("exit", resolve));
  }
  rmSync(workDir, { recursive: true, force: true });
});

describe("setup panel", () => {
  it("registers the example model with full plan progress", async () => {
    const gw = new Gateway(BASE, "setup-admin");
    const summary = await registerModel(gw, demoXml, "demo");

    expect(summary.meta.registered).toBe(true);
    expect(summary.meta.rootFlow).toMatch(/^0x/);
    expect(summary.flowsPlanned).toBe(3);
    expect(summary.flowsRegistered).toBe(3);
    expect(summary.elementsPlanned).toBe(19);
    expect(summary.elementsRegistered).toBe(19);
    expect(summary.progress).toBe(1);
    demoFlow = summary.meta.rootFlow;
  });
});

describe("worklist progression", () => {
  it("walks a case from {T1} to {T2} to {U1} to empty", async () => {
    const gw = new Gateway(BASE, "clerk");
    const caseAddress = (await gw.startCase(demoFlow)).caseAddress;
    const store = new WorklistStore(gw);
    store.trackCase(caseAddress);

    await store.refresh();
    expect(itemIds(store)).toEqual(["T1"]);

    await submitWithForm(store, store.items[0], { _t1Field: "true" });
    expect(itemIds(store)).toEqual(["T2"]);

    // T2 exports the earlier decision for display at check-out time
    const exported = await store.exportValues(store.items[0]);
    expect(exported).toEqual({ t1Field: true });

    await submitWithForm(store, store.items[0], { _t2Field: "true" });
    expect(itemIds(store)).toEqual(["U1"]);
    // the approval task lives on the sub-process node, not the root case
    expect(store.items[0].node).not.toBe(caseAddress);

    await submitWithForm(store, store.items[0], { _ok: "true" });
    expect(itemIds(store)).toEqual([]);
    expect(store.completed.has(caseAddress)).toBe(true);

    const finalState = await gw.caseState(caseAddress);
    expect(finalState.tokens).toEqual([]);
    expect(finalState.runningSubProcs).toEqual([]);
  });
});

describe("stale work items", () => {
  it("a lost race turns into a 409 and the stale item disappears on refresh", async () => {
    const winner = new Gateway(BASE, "alice");
    const caseAddress = (await winner.startCase(demoFlow)).caseAddress;
    const storeA = new WorklistStore(winner);
    storeA.trackCase(caseAddress);

    // second client whose check-in PATCH is held back until released, so
    // both confirmations pass before either write lands
    let release!: () => void;
    const gate = new Promise<void>((resolve) => { release = resolve; });
    let patches = 0;
    const held = new Gateway(BASE, "bob", async (url, init) => {
      if (init?.method === "PATCH") {
        patches += 1;
        await gate;
      }
      return fetch(url, init);
    });
    const storeB = new WorklistStore(held);
    storeB.trackCase(caseAddress);

    await storeA.refresh();
    await storeB.refresh();
    expect(itemIds(storeA)).toEqual(["T1"]);
    expect(itemIds(storeB)).toEqual(["T1"]);

    const staleT1 = storeB.items[0];
    const bAttempt = submitWithForm(storeB, staleT1, { _t1Field: "false" });
    const bFailure = bAttempt.catch((err) => err);
    await submitWithForm(storeA, storeA.items[0], { _t1Field: "true" });
    release();

    const err = await bFailure;
    expect(err).toBeInstanceOf(StaleItemError);
    expect(patches).toBe(1);
    expect(itemIds(storeB)).toEqual(["T2"]);

    // and the raw conflict is a plain 409 at the HTTP layer
    const again = await held.checkIn(staleT1.node, staleT1.eInd, { _t1Field: true }).catch((e) => e);
    expect(again).toBeInstanceOf(ApiError);
    expect(again.status).toBe(409);
    expect(again.reason).toBe("NOT_ENABLED");
  });

  it("an item consumed before confirmation is dropped without a write", async () => {
    const gw = new Gateway(BASE, "alice");
    const caseAddress = (await gw.startCase(demoFlow)).caseAddress;
    let patches = 0;
    const counted = new Gateway(BASE, "bob", (url, init) => {
      if (init?.method === "PATCH") patches += 1;
      return fetch(url, init);
    });
    const storeA = new WorklistStore(gw);
    const storeB = new WorklistStore(counted);
    storeA.trackCase(caseAddress);
    storeB.trackCase(caseAddress);
    await storeA.refresh();
    await storeB.refresh();

    await submitWithForm(storeA, storeA.items[0], { _t1Field: "true" });
    const stale = storeB.items[0];
    await expect(submitWithForm(storeB, stale, { _t1Field: "true" }))
      .rejects.toThrow(StaleItemError);
    expect(patches).toBe(0); // confirmation failed, so no check-in went out
    expect(itemIds(storeB)).toEqual(["T2"]);
  });
});

describe("role bindings", () => {
  it("surfaces 403 for an unbound actor, then succeeds after binding", async () => {
    // roles can only be declared by the deployer, so registration goes out
    // without an X-Actor header
    const admin = new Gateway(BASE);
    const meta = await admin.registerModel(ROLED_XML, { name: "approvals" });

    const carol = new Gateway(BASE, "carol");
    const caseAddress = (await carol.startCase(meta.rootFlow)).caseAddress;
    const store = new WorklistStore(carol);
    store.trackCase(caseAddress);

    await store.refresh();
    expect(itemIds(store)).toEqual(["RT1"]);
    expect(store.items[0].role).toBe("approver");

    const denied = await submitWithForm(store, store.items[0], { _ok: "true" }).catch((e) => e);
    expect(denied).toBeInstanceOf(ApiError);
    expect(denied.status).toBe(403);
    expect(itemIds(store)).toEqual(["RT1"]); // item survives the denial

    await bindRole(carol, caseAddress, "approver");
    expect(await roleBindings(carol, caseAddress)).toEqual({ approver: "carol" });

    await submitWithForm(store, store.items[0], { _ok: "true" });
    expect(itemIds(store)).toEqual([]);
    expect(store.completed.has(caseAddress)).toBe(true);
  });
});

describe("monitor feed", () => {
  it("replays engine events and keeps its place", async () => {
    const gw = new Gateway(BASE, "watcher");
    const names = new Set<string>();
    let position = 0;

    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(() => { feed.stop(); reject(new Error("no events")); }, 10000);
      const feed: MonitorFeed = new MonitorFeed(gw, (events) => {
        for (const event of events) names.add(event.name);
        if (names.has("CaseCreated") && names.has("StateChanged") && names.has("ElementRegistered")) {
          position = feed.position();
          clearTimeout(timer);
          feed.stop();
          resolve();
        }
      }, { wait: 1 });
      feed.start(0);
    });

    expect(position).toBeGreaterThan(0);
    const page = await gw.monitor(position);
    expect(page.next).toBeGreaterThanOrEqual(position);
  });
});
