// Worklist state for the task inbox.
//
// The server is the only source of truth. Items render from the latest GET,
// a fresh GET re-confirms every item immediately before its check-in goes
// out, and a 409 from a lost race drops the stale item on the refresh that
// follows. Nothing is shown optimistically.

import { ApiError, Gateway, WorkItem } from "./api.js";

export interface TrackedItem extends WorkItem {
  caseAddress: string; // root case this item was found under
}

export class StaleItemError extends Error {
  constructor(readonly item: TrackedItem) {
    super(`${item.elementId} is no longer enabled`);
  }
}

export interface WorklistEvents {
  onChange?: () => void;
  onError?: (message: string) => void;
  // retry banner: true while refreshes are failing, false once one succeeds
  onRetry?: (active: boolean) => void;
}

function itemKey(item: { node: string; eInd: number }): string {
  return `${item.node}#${item.eInd}`;
}

export class WorklistStore {
  items: TrackedItem[] = [];
  completed = new Set<string>();
  drafts = new Map<string, Record<string, string>>();

  private tracked: string[] = [];
  private failing = false;

  constructor(
    private gw: Gateway,
    private events: WorklistEvents = {},
  ) {}

  trackCase(caseAddress: string) {
    if (!this.tracked.includes(caseAddress)) this.tracked.push(caseAddress);
  }

  get cases(): string[] {
    return [...this.tracked];
  }

  itemsFor(caseAddress: string): TrackedItem[] {
    return this.items.filter((i) => i.caseAddress === caseAddress);
  }

  draftFor(item: TrackedItem): Record<string, string> | undefined {
    return this.drafts.get(itemKey(item));
  }

  saveDraft(item: TrackedItem, draft: Record<string, string>) {
    this.drafts.set(itemKey(item), draft);
  }

  async refresh(): Promise<void> {
    const next: TrackedItem[] = [];
    try {
      for (const caseAddress of this.tracked) {
        const state = await this.gw.caseState(caseAddress);
        if (state.completed) {
          this.completed.add(caseAddress);
          continue;
        }
        this.completed.delete(caseAddress);
        for (const item of state.worklist) {
          next.push({ ...item, caseAddress });
        }
      }
    } catch (err) {
      // keep the stale list and any unsubmitted drafts; the banner stays up
      // until a refresh gets through
      this.failing = true;
      this.events.onRetry?.(true);
      this.events.onError?.(err instanceof Error ? err.message : String(err));
      return;
    }
    if (this.failing) {
      this.failing = false;
      this.events.onRetry?.(false);
    }
    this.items = next;
    const live = new Set(next.map(itemKey));
    for (const key of [...this.drafts.keys()]) {
      if (!live.has(key)) this.drafts.delete(key);
    }
    this.events.onChange?.();
  }

  // Check-in. Confirms against a fresh GET first; the item is only trusted
  // if the server still lists it. A 409 after confirmation means someone
  // else won the race, so the item goes away with the refresh.
  async submit(item: TrackedItem, payload: Record<string, unknown>): Promise<{ cost: number; txSeq: number }> {
    const state = await this.gw.caseState(item.caseAddress);
    const confirmed = !state.completed && state.worklist.some(
      (w) => w.node === item.node && w.eInd === item.eInd,
    );
    if (!confirmed) {
      await this.refresh();
      throw new StaleItemError(item);
    }
    try {
      const receipt = await this.gw.checkIn(item.node, item.eInd, payload);
      this.drafts.delete(itemKey(item));
      await this.refresh();
      return { cost: receipt.cost, txSeq: receipt.txSeq };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
        throw new StaleItemError(item);
      }
      // 403 and friends: keep the item and its draft, surface the reason
      this.events.onError?.(err instanceof Error ? err.message : String(err));
      throw err;
    }
  }

  async exportValues(item: TrackedItem): Promise<Record<string, unknown>> {
    const out = await this.gw.checkOut(item.node, item.eInd);
    return out.values;
  }
}

// Long-poll loop over GET /monitor. Network failures back off and retry
// rather than surfacing into the worklist; onRetry drives the banner.
export class MonitorFeed {
  private next = 0;
  private running = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private gw: Gateway,
    private onEvents: (events: import("./api.js").MonitorEvent[]) => void,
    private opts: { wait?: number; retryMs?: number; onRetry?: (active: boolean) => void } = {},
  ) {}

  start(since = 0) {
    this.next = since;
    this.running = true;
    void this.poll();
  }

  stop() {
    this.running = false;
    if (this.timer) clearTimeout(this.timer);
  }

  position(): number {
    return this.next;
  }

  private async poll(): Promise<void> {
    while (this.running) {
      try {
        const page = await this.gw.monitor(this.next, this.opts.wait ?? 25);
        this.opts.onRetry?.(false);
        this.next = page.next;
        if (page.events.length) this.onEvents(page.events);
      } catch {
        this.opts.onRetry?.(true);
        await new Promise((resolve) => {
          this.timer = setTimeout(resolve, this.opts.retryMs ?? 2000);
        });
      }
    }
  }
}
