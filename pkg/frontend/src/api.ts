// Typed client for the process gateway. Everything the UI knows about the
// engine comes through these routes and the monitor feed; there is no other
// channel.

export type FieldPair = [string, string]; // [type, name], types: bool | int | text

export interface WorkItem {
  node: string; // case-tree node that owns the task (may be a sub-process)
  eInd: number;
  elementId: string;
  kind: "user" | "service" | "catch";
  role: string;
  imports: FieldPair[];
}

export interface CaseState {
  address: string;
  flow: string;
  tokens: number[];
  runningSubProcs: number[];
  completed: boolean;
  variables: Record<string, unknown>;
  parent: string;
  children: Record<string, string[]>;
  elementIds: Record<string, string>;
  enabled: WorkItem[];
  worklist: WorkItem[];
}

export interface ModelMeta {
  modelHash: string;
  name: string;
  root: string;
  registered: boolean;
  addresses: Record<string, string>;
  rootFlow: string;
  indexMaps?: Record<string, { elements: Record<string, number>; edges: Record<string, number> }>;
}

export interface PlanStep {
  op: "deployFlow" | "setElement" | "linkSubprocess" | "deployFactory"
    | "setFactory" | "declareRoles" | "requireRole";
  ref?: string;
  flow?: string;
  eInd?: number;
  [extra: string]: unknown;
}

export interface ModelDetail extends ModelMeta {
  plan: { modelHash: string; root: string; rootFlow: string; steps: PlanStep[] };
  xml?: string;
}

export interface MonitorEvent {
  seq: number;
  txSeq: number;
  index: number;
  emitter: string;
  name: string;
  payload: Record<string, unknown>;
}

export interface MonitorPage {
  events: MonitorEvent[];
  next: number;
}

export interface Receipt {
  ok?: boolean;
  cost: number;
  txSeq: number;
}

export interface ElementSpec {
  eInd: number;
  preC?: number;
  postC?: number;
  typeInfo?: number;
  evtCode?: string;
  attachedTo?: number;
  countInst?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly reason: string,
    readonly detail?: string,
  ) {
    super(detail ? `${reason}: ${detail}` : reason);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class Gateway {
  constructor(
    readonly base: string,
    public actor = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.actor) headers["X-Actor"] = this.actor;
    const res = await this.fetchImpl(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data = await res.json().catch(() => ({}));
    if (!res.ok) {
      throw new ApiError(res.status, data.reason ?? "unknown", data.detail);
    }
    return data as T;
  }

  deployInterpreter() {
    return this.request<{ address: string; created: boolean }>("POST", "/interpreter");
  }

  registerModel(xml: string, opts: { register?: boolean; name?: string } = {}) {
    return this.request<ModelMeta>("POST", "/interpreter/models", {
      xml,
      register: opts.register ?? true,
      name: opts.name ?? "",
    });
  }

  listModels() {
    return this.request<{ models: ModelMeta[] }>("GET", "/interpreter/models");
  }

  modelDetail(hash: string, withXml = false) {
    const q = withXml ? "?xml=true" : "";
    return this.request<ModelDetail>("GET", `/interpreter/models/${hash}${q}`);
  }

  deployFlow() {
    return this.request<{ address: string } & Receipt>("POST", "/i-flow");
  }

  setElement(flow: string, el: ElementSpec) {
    return this.request<Receipt>("PATCH", `/i-flow/element/${flow}`, el);
  }

  linkChild(flow: string, body: { eInd: number; childFlow: string; countInst?: number; attachedEvents?: number[] }) {
    return this.request<Receipt>("PATCH", `/i-flow/child/${flow}`, body);
  }

  setFactory(flow: string, body: { eInd: number; factory: string }) {
    return this.request<Receipt>("PATCH", `/i-flow/factory/${flow}`, body);
  }

  flowContents(flow: string) {
    return this.request<Record<string, unknown>>("GET", `/i-flow/${flow}`);
  }

  startCase(flow: string) {
    return this.request<{ caseAddress: string } & Receipt>("POST", `/i-flow/p-cases/${flow}`);
  }

  listCases(flow: string) {
    return this.request<{ cases: string[] }>("GET", `/i-flow/p-cases/${flow}`);
  }

  caseState(pc: string) {
    return this.request<CaseState>("GET", `/i-data/${pc}`);
  }

  checkOut(pc: string, eInd: number) {
    return this.request<{ values: Record<string, unknown> }>("GET", `/i-data/${pc}/i-flow/${eInd}`);
  }

  checkIn(pc: string, eInd: number, payload: Record<string, unknown>) {
    return this.request<Receipt>("PATCH", `/i-data/${pc}/i-flow/${eInd}`, { payload });
  }

  monitor(since: number, wait = 0) {
    const q = wait > 0 ? `?since=${since}&wait=${wait}` : `?since=${since}`;
    return this.request<MonitorPage>("GET", `/monitor${q}`);
  }

  bind(pcase: string, role: string, who = "") {
    return this.request<Receipt>("POST", "/access/bind", { case: pcase, role, actor: who });
  }

  release(pcase: string, role: string) {
    return this.request<Receipt>("POST", "/access/release", { case: pcase, role });
  }

  bindings(pcase: string) {
    return this.request<{ bindings: Record<string, string> }>("GET", `/access/bindings/${pcase}`);
  }
}
