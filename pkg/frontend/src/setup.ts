// Setup operations: model upload and registration, manual registry
// assembly, and role binding administration.
//
// Parsing and registration are two separate calls on purpose. A preview
// (register: false) returns the deployment plan without touching the
// ledger, so the admin sees every step and its target scope up front.
// Actual registration executes the plan server-side in one transaction
// batch; progress afterwards is reconciled from the model's addresses and
// the ElementRegistered events on the monitor. The manual forms below give
// true per-step receipts, and a failed step simply leaves assembly where it
// stopped, to be resumed with the next call.

import { Gateway, ModelDetail, ModelMeta, MonitorEvent, PlanStep } from "./api.js";

export interface RegistrationSummary {
  meta: ModelMeta;
  flowsPlanned: number;
  flowsRegistered: number;
  elementsPlanned: number;
  elementsRegistered: number;
  progress: number; // 0..1
}

export function planCounts(steps: PlanStep[]) {
  let flows = 0;
  let elements = 0;
  for (const step of steps) {
    if (step.op === "deployFlow") flows += 1;
    if (step.op === "setElement") elements += 1;
  }
  return { flows, elements };
}

export async function previewModel(gw: Gateway, xml: string, name = ""): Promise<ModelDetail> {
  const meta = await gw.registerModel(xml, { register: false, name });
  return gw.modelDetail(meta.modelHash);
}

export async function registerModel(
  gw: Gateway,
  xml: string,
  name = "",
  monitorFrom = 0,
): Promise<RegistrationSummary> {
  const preview = await previewModel(gw, xml, name);
  const { flows, elements } = planCounts(preview.plan.steps);
  const meta = await gw.registerModel(xml, { register: true, name });

  const registeredFlows = Object.keys(meta.addresses)
    .filter((ref) => ref.startsWith("flow:")).length;
  let registeredElements = 0;
  let cursor = monitorFrom;
  const flowAddresses = new Set(Object.values(meta.addresses));
  for (;;) {
    const page = await gw.monitor(cursor);
    for (const event of page.events) {
      if (event.name === "ElementRegistered" && flowAddresses.has(event.emitter)) {
        registeredElements += 1;
      }
    }
    if (page.next === cursor) break;
    cursor = page.next;
    if (!page.events.length) break;
  }

  return {
    meta,
    flowsPlanned: flows,
    flowsRegistered: registeredFlows,
    elementsPlanned: elements,
    elementsRegistered: registeredElements,
    progress: elements === 0 ? 1 : registeredElements / elements,
  };
}

export function describeEvent(event: MonitorEvent): string {
  const parts = Object.entries(event.payload)
    .map(([k, v]) => `${k}=${JSON.stringify(v)}`)
    .join(" ");
  return `#${event.seq} ${event.name} ${parts}`;
}

// -- manual assembly -------------------------------------------------------

export interface StepReceipt {
  label: string;
  cost: number;
  txSeq: number;
}

export async function assembleElement(
  gw: Gateway,
  flow: string,
  spec: { eInd: number; preC: number; postC: number; typeInfo: number; evtCode?: string; attachedTo?: number; countInst?: number },
): Promise<StepReceipt> {
  const receipt = await gw.setElement(flow, spec);
  return { label: `setElement ${spec.eInd}`, cost: receipt.cost, txSeq: receipt.txSeq };
}

export async function assembleChild(
  gw: Gateway,
  flow: string,
  eInd: number,
  childFlow: string,
  attachedEvents: number[] = [],
): Promise<StepReceipt> {
  const receipt = await gw.linkChild(flow, { eInd, childFlow, attachedEvents });
  return { label: `linkSubprocess ${eInd}`, cost: receipt.cost, txSeq: receipt.txSeq };
}

export async function assembleFactory(
  gw: Gateway,
  flow: string,
  eInd: number,
  factory: string,
): Promise<StepReceipt> {
  const receipt = await gw.setFactory(flow, { eInd, factory });
  return { label: `setFactory ${eInd}`, cost: receipt.cost, txSeq: receipt.txSeq };
}

// -- roles -----------------------------------------------------------------

export async function bindRole(gw: Gateway, pcase: string, role: string, who = ""): Promise<StepReceipt> {
  const receipt = await gw.bind(pcase, role, who);
  return { label: `bind ${role}`, cost: receipt.cost, txSeq: receipt.txSeq };
}

export async function releaseRole(gw: Gateway, pcase: string, role: string): Promise<StepReceipt> {
  const receipt = await gw.release(pcase, role);
  return { label: `release ${role}`, cost: receipt.cost, txSeq: receipt.txSeq };
}

export async function roleBindings(gw: Gateway, pcase: string): Promise<Record<string, string>> {
  const out = await gw.bindings(pcase);
  return out.bindings;
}
