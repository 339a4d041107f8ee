// Single-page wiring. Panels: setup (models, roles), cases, worklist,
// monitor. All state lives in the stores; this file only projects it into
// the DOM and routes clicks back.

import { ApiError, Gateway, MonitorEvent, ModelMeta } from "./api.js";
import { buildPayload, emptyDraft, fieldsFor, FieldError, FormField } from "./forms.js";
import { MonitorFeed, StaleItemError, TrackedItem, WorklistStore } from "./worklist.js";
import { describeEvent, previewModel, registerModel, bindRole, releaseRole, roleBindings } from "./setup.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const state = {
  gw: new Gateway(""),
  store: null as WorklistStore | null,
  feed: null as MonitorFeed | null,
  models: [] as ModelMeta[],
};

function flash(message: string, kind: "ok" | "err" = "err") {
  const bar = byId<HTMLDivElement>("flash");
  bar.textContent = message;
  bar.className = kind;
  if (message) setTimeout(() => { if (bar.textContent === message) bar.textContent = ""; }, 6000);
}

// -- worklist rendering ------------------------------------------------------

function renderForm(item: TrackedItem, fields: FormField[]): HTMLFormElement {
  const store = state.store!;
  const draft = store.draftFor(item) ?? emptyDraft(fields);
  store.saveDraft(item, draft);

  const form = el("form", { class: "task-form" });
  for (const field of fields) {
    const row = el("label", {}, field.label + " ");
    if (field.type === "bool") {
      const box = el("input", { type: "checkbox" });
      box.checked = draft[field.name] === "true";
      box.addEventListener("change", () => {
        draft[field.name] = box.checked ? "true" : "false";
      });
      row.append(box);
    } else {
      const input = el("input", { type: "text", placeholder: field.type });
      input.value = draft[field.name] ?? "";
      input.addEventListener("input", () => {
        draft[field.name] = input.value;
      });
      row.append(input);
    }
    form.append(row);
  }
  const submit = el("button", { type: "submit" }, "Check in");
  form.append(submit);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void submitItem(item, fields, draft);
  });
  return form;
}

async function submitItem(item: TrackedItem, fields: FormField[], draft: Record<string, string>) {
  const store = state.store!;
  let payload;
  try {
    payload = buildPayload(fields, draft);
  } catch (err) {
    if (err instanceof FieldError) { flash(err.message); return; }
    throw err;
  }
  try {
    const receipt = await store.submit(item, payload);
    flash(`${item.elementId} checked in (cost ${receipt.cost}, tx ${receipt.txSeq})`, "ok");
  } catch (err) {
    if (err instanceof StaleItemError) {
      flash(`${item.elementId} was already handled elsewhere`);
    } else if (err instanceof ApiError && err.status === 403) {
      flash(`${item.elementId}: not authorized (${err.reason})`);
    } else {
      flash(err instanceof Error ? err.message : String(err));
    }
  }
  renderWorklist();
}

function renderWorklist() {
  const store = state.store;
  const root = byId<HTMLDivElement>("worklist");
  root.textContent = "";
  if (!store) return;
  for (const caseAddress of store.cases) {
    const section = el("section", { class: "case-block" });
    const done = store.completed.has(caseAddress);
    section.append(el("h3", {}, `case ${caseAddress}${done ? " (completed)" : ""}`));
    const items = store.itemsFor(caseAddress);
    if (!items.length && !done) section.append(el("p", { class: "muted" }, "nothing enabled"));
    for (const item of items) {
      const card = el("div", { class: "work-item" });
      card.append(el("h4", {}, `${item.elementId} `,
        el("span", { class: "muted" }, `${item.kind}${item.role ? ", role " + item.role : ""}`)));
      try {
        card.append(renderForm(item, fieldsFor(item.imports)));
      } catch (err) {
        card.append(el("p", { class: "err" }, String(err)));
      }
      section.append(card);
    }
    root.append(section);
  }
}

function renderCaseStates() {
  const store = state.store;
  const root = byId<HTMLDivElement>("case-states");
  root.textContent = "";
  if (!store) return;
  for (const caseAddress of store.cases) {
    void state.gw.caseState(caseAddress).then((cs) => {
      const edges = cs.tokens.length ? cs.tokens.join(", ") : "none";
      const running = cs.runningSubProcs.length ? cs.runningSubProcs.join(", ") : "none";
      root.append(el("div", { class: "case-state" },
        el("code", {}, caseAddress), ` tokens on edges [${edges}], running subs [${running}]`,
        cs.completed ? " completed" : ""));
    }).catch(() => { /* case may be mid-commit; next refresh catches up */ });
  }
}

// -- setup panel --------------------------------------------------------------

async function refreshModels() {
  const listing = await state.gw.listModels();
  state.models = listing.models;
  const root = byId<HTMLDivElement>("models");
  root.textContent = "";
  for (const model of state.models) {
    const row = el("div", { class: "model-row" },
      el("strong", {}, model.name || model.root),
      el("code", { class: "muted" }, ` ${model.modelHash.slice(0, 12)} `));
    if (model.registered) {
      const start = el("button", {}, "Start case");
      start.addEventListener("click", () => void startCase(model));
      row.append(start);
    } else {
      row.append(el("span", { class: "muted" }, "parsed only"));
    }
    root.append(row);
  }
}

async function startCase(model: ModelMeta) {
  const created = await state.gw.startCase(model.rootFlow);
  state.store!.trackCase(created.caseAddress);
  flash(`case ${created.caseAddress} started (cost ${created.cost})`, "ok");
  await state.store!.refresh();
  renderCaseStates();
}

function wireSetup() {
  byId<HTMLButtonElement>("btn-preview").addEventListener("click", () => {
    void (async () => {
      const xml = byId<HTMLTextAreaElement>("model-xml").value;
      try {
        const detail = await previewModel(state.gw, xml, byId<HTMLInputElement>("model-name").value);
        const steps = detail.plan.steps.map((s) => `${s.op} ${s.ref ?? s.flow ?? ""}`.trim());
        byId<HTMLPreElement>("plan-view").textContent =
          `${detail.name || detail.root}  root flow ${detail.plan.rootFlow}\n` + steps.join("\n");
        await refreshModels();
      } catch (err) {
        flash(errText(err));
      }
    })();
  });

  byId<HTMLButtonElement>("btn-register").addEventListener("click", () => {
    void (async () => {
      const xml = byId<HTMLTextAreaElement>("model-xml").value;
      try {
        const summary = await registerModel(state.gw, xml, byId<HTMLInputElement>("model-name").value);
        byId<HTMLPreElement>("plan-view").textContent =
          `registered ${summary.meta.name || summary.meta.root}\n` +
          `${summary.flowsRegistered}/${summary.flowsPlanned} flow nodes, ` +
          `${summary.elementsRegistered}/${summary.elementsPlanned} elements, ` +
          `progress ${Math.round(summary.progress * 100)}%`;
        await refreshModels();
      } catch (err) {
        flash(errText(err));
      }
    })();
  });

  byId<HTMLButtonElement>("btn-bind").addEventListener("click", () => void roleAction("bind"));
  byId<HTMLButtonElement>("btn-release").addEventListener("click", () => void roleAction("release"));
}

async function roleAction(kind: "bind" | "release") {
  const pcase = byId<HTMLInputElement>("role-case").value;
  const role = byId<HTMLInputElement>("role-name").value;
  const who = byId<HTMLInputElement>("role-actor").value;
  try {
    const receipt = kind === "bind"
      ? await bindRole(state.gw, pcase, role, who)
      : await releaseRole(state.gw, pcase, role);
    const bindings = await roleBindings(state.gw, pcase);
    byId<HTMLPreElement>("bindings-view").textContent =
      `${receipt.label}: cost ${receipt.cost}\n` + JSON.stringify(bindings, null, 1);
  } catch (err) {
    flash(errText(err));
  }
}

function errText(err: unknown): string {
  if (err instanceof ApiError) return `${err.status} ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}

// -- monitor ------------------------------------------------------------------

function onMonitorEvents(events: MonitorEvent[]) {
  const log = byId<HTMLDivElement>("monitor-log");
  for (const event of events) {
    log.append(el("div", { class: "logline" }, describeEvent(event)));
  }
  while (log.childElementCount > 200) log.firstElementChild?.remove();
  log.scrollTop = log.scrollHeight;

  if (events.some((e) => e.name === "StateChanged" || e.name === "CaseCreated")) {
    void state.store?.refresh().then(() => {
      renderWorklist();
      renderCaseStates();
    });
  }
}

// -- boot ---------------------------------------------------------------------

function connect() {
  const base = byId<HTMLInputElement>("gateway-url").value.replace(/\/$/, "");
  const actor = byId<HTMLInputElement>("actor").value;
  state.feed?.stop();
  state.gw = new Gateway(base, actor);
  state.store = new WorklistStore(state.gw, {
    onChange: () => { renderWorklist(); renderCaseStates(); },
    onError: (message) => flash(message),
    onRetry: (active) => {
      byId<HTMLDivElement>("retry-banner").style.display = active ? "block" : "none";
    },
  });
  state.feed = new MonitorFeed(state.gw, onMonitorEvents, {
    onRetry: (active) => {
      byId<HTMLDivElement>("retry-banner").style.display = active ? "block" : "none";
    },
  });
  state.feed.start(0);
  void state.gw.deployInterpreter()
    .then(() => refreshModels())
    .then(() => flash("connected", "ok"))
    .catch((err) => flash(errText(err)));
}

export function main() {
  byId<HTMLButtonElement>("btn-connect").addEventListener("click", connect);
  byId<HTMLInputElement>("gateway-url").value = window.location.origin;
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  main();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", main);
}
