/** Headless workbench session: all UI state transitions, no DOM.
 *
 * The session is a thin veneer over the API. It never caches anything it
 * could not re-fetch, so reloading the page (a fresh session) reproduces
 * exactly the server-derived view.
 */

import {
  ApiError,
  EditRecord,
  FlagQueue,
  InstanceView,
  NetworkError,
  RepairReport,
  WorkbenchApi,
} from "./api.js";

export type FlagKind = "trivial" | "erroneous";

export interface Banner {
  kind: "error" | "retry";
  message: string;
}

export class WorkbenchSession {
  tab: FlagKind = "trivial";
  queue: FlagQueue | null = null;
  selected: InstanceView | null = null;
  draft: Record<string, string> = {};
  draftGoldLabel = "";
  lastEdit: EditRecord | null = null;
  report: RepairReport | null = null;
  inlineError: string | null = null;
  banner: Banner | null = null;

  constructor(readonly api: WorkbenchApi) {}

  async loadQueue(kind: FlagKind, offset = 0, limit = 50): Promise<FlagQueue> {
    this.tab = kind;
    // items render in exactly the server's order; never re-rank client-side
    this.queue = await this.api.flags(kind, offset, limit);
    return this.queue;
  }

  async openInstance(id: string): Promise<InstanceView> {
    this.selected = await this.api.instance(id);
    this.draft = Object.fromEntries(this.selected.text_fields);
    this.draftGoldLabel = this.selected.gold_label;
    this.lastEdit = null;
    this.inlineError = null;
    return this.selected;
  }

  setField(name: string, value: string): void {
    if (!(name in this.draft)) throw new Error(`unknown field ${name}`);
    this.draft[name] = value;
  }

  setGoldLabel(value: string): void {
    if (!this.goldLabelEditable) throw new Error("gold label is locked on this tab");
    this.draftGoldLabel = value;
  }

  /** Gold label is locked while hardening trivial instances. */
  get goldLabelEditable(): boolean {
    return this.selected?.flag_kind !== "trivial";
  }

  get editKind(): EditRecord["edit_kind"] {
    return this.selected?.flag_kind === "trivial"
      ? "trivial_hardening"
      : "error_repair";
  }

  /** Fields that really changed; whitespace-only edits do not count. */
  get changedFields(): Record<string, string> {
    if (!this.selected) return {};
    const changed: Record<string, string> = {};
    for (const [name, original] of this.selected.text_fields) {
      const value = this.draft[name] ?? "";
      if (value.trim() !== original.trim()) changed[name] = value;
    }
    if (this.draftGoldLabel.trim() !== this.selected.gold_label.trim()) {
      changed["gold_label"] = this.draftGoldLabel;
    }
    return changed;
  }

  get canSubmit(): boolean {
    return this.selected !== null && Object.keys(this.changedFields).length > 0;
  }

  /** Submit the draft; the server answers with the live predictor verdict. */
  async submitEdit(author = "curator"): Promise<EditRecord | null> {
    if (!this.selected || !this.canSubmit) return null;
    this.inlineError = null;
    this.banner = null;
    try {
      this.lastEdit = await this.api.submitEdit(
        this.selected.instance_id,
        {
          edit_kind: this.editKind,
          changed_fields: this.changedFields,
          author,
        },
        this.selected.revision,
      );
      return this.lastEdit;
    } catch (err) {
      if (err instanceof ApiError) {
        if (err.status === 412) {
          this.banner = {
            kind: "retry",
            message: "Someone else edited this instance; reload to continue.",
          };
        } else {
          this.inlineError = err.detail; // rendered next to the editor
        }
        return null;
      }
      if (err instanceof NetworkError) {
        // draft stays intact; the curator can retry
        this.banner = { kind: "retry", message: "Network failure - retry submit." };
        return null;
      }
      throw err;
    }
  }

  /** Accept is enabled only when the server-side acceptance rule would pass. */
  get canAccept(): boolean {
    const edit = this.lastEdit;
    if (!edit || edit.status !== "proposed") return false;
    if (Object.keys(edit.changed_fields).length === 0) return false;
    if (edit.edit_kind === "trivial_hardening") {
      if ("gold_label" in edit.changed_fields) return false;
      return edit.predictor_verdict?.flipped === true;
    }
    return true;
  }

  /** Decisions are never optimistic: wait for the ack, then re-fetch. */
  async decide(decision: "accepted" | "rejected"): Promise<EditRecord | null> {
    if (!this.lastEdit) return null;
    const acked = await this.api.decide(this.lastEdit.edit_id, decision);
    this.lastEdit = acked;
    await this.openInstance(acked.instance_id);
    this.lastEdit = acked;
    if (this.queue) await this.loadQueue(this.tab, this.queue.offset);
    await this.refreshReport();
    return acked;
  }

  async refreshReport(): Promise<RepairReport> {
    this.report = await this.api.repairReport();
    return this.report;
  }
}
