/** DOM bindings: render the session state, wire events back into it.
 *
 * Three panes: the flag queue (tabs trivial/erroneous), the editor with the
 * live verdict, and the repair dashboard. Every number shown is lifted
 * verbatim from an API response held on the session.
 */

import { ClassDelta } from "./api.js";
import { FlagKind, WorkbenchSession } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class WorkbenchUi {
  constructor(
    readonly session: WorkbenchSession,
    readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    await this.session.loadQueue("trivial");
    await this.session.refreshReport();
    this.render();
  }

  render(): void {
    this.root.replaceChildren(
      this.renderTabs(),
      this.renderBanner(),
      el("div", "panes"),
    );
    const panes = this.root.querySelector(".panes")!;
    panes.append(this.renderQueue(), this.renderEditor(), this.renderDashboard());
  }

  private renderTabs(): HTMLElement {
    const bar = el("nav", "tabs");
    for (const kind of ["trivial", "erroneous"] as FlagKind[]) {
      const btn = el("button", this.session.tab === kind ? "tab active" : "tab");
      btn.textContent = kind === "trivial" ? "Trivial" : "Potentially erroneous";
      btn.onclick = async () => {
        await this.session.loadQueue(kind);
        this.render();
      };
      bar.append(btn);
    }
    return bar;
  }

  private renderBanner(): HTMLElement {
    const banner = this.session.banner;
    const box = el("div", banner ? `banner ${banner.kind}` : "banner hidden");
    if (banner) {
      box.append(el("span", undefined, banner.message));
      const retry = el("button", "retry", "Reload");
      retry.onclick = () => location.reload();
      box.append(retry);
    }
    return box;
  }

  private renderQueue(): HTMLElement {
    const pane = el("section", "queue");
    const queue = this.session.queue;
    if (!queue) return pane;
    pane.append(el("h2", undefined, `${queue.total} flagged`));
    const list = el("ul");
    for (const item of queue.items) {
      const li = el("li", item.resolved ? "item resolved" : "item");
      const head = el("div", "item-head");
      head.append(
        el("code", undefined, item.instance_id),
        el("span", "difficulty", item.difficulty.toFixed(3)),
        el("span", "attempts", `${item.attempt_count} attempts`),
      );
      li.append(head);
      li.append(el("div", "snippet", item.text_fields.map(([, v]) => v).join(" / ")));
      li.onclick = async () => {
        await this.session.openInstance(item.instance_id);
        this.render();
      };
      list.append(li);
    }
    pane.append(list);
    return pane;
  }

  private renderEditor(): HTMLElement {
    const pane = el("section", "editor");
    const inst = this.session.selected;
    if (!inst) {
      pane.append(el("p", "empty", "Pick an instance from the queue."));
      return pane;
    }
    pane.append(el("h2", undefined, inst.instance_id));
    for (const [name, original] of inst.text_fields) {
      const label = el("label", undefined, name);
      const area = el("textarea");
      area.value = this.session.draft[name] ?? original;
      area.oninput = () => {
        this.session.setField(name, area.value);
        this.syncControls();
      };
      label.append(area);
      pane.append(label);
    }
    const goldLabel = el("label", undefined, "gold label");
    const gold = el("input");
    gold.value = this.session.draftGoldLabel;
    gold.readOnly = !this.session.goldLabelEditable;
    gold.oninput = () => {
      this.session.setGoldLabel(gold.value);
      this.syncControls();
    };
    goldLabel.append(gold);
    pane.append(goldLabel);

    if (this.session.inlineError) {
      pane.append(el("p", "inline-error", this.session.inlineError));
    }
    pane.append(this.renderVerdict());

    const controls = el("div", "controls");
    const submit = el("button", "submit", "Submit edit");
    submit.disabled = !this.session.canSubmit;
    submit.onclick = async () => {
      await this.session.submitEdit();
      this.render();
    };
    const accept = el("button", "accept", "Accept");
    accept.disabled = !this.session.canAccept;
    accept.onclick = async () => {
      await this.session.decide("accepted");
      this.render();
    };
    const reject = el("button", "reject", "Reject");
    reject.disabled = this.session.lastEdit?.status !== "proposed";
    reject.onclick = async () => {
      await this.session.decide("rejected");
      this.render();
    };
    controls.append(submit, accept, reject);
    pane.append(controls);
    return pane;
  }

  private syncControls(): void {
    const submit = this.root.querySelector<HTMLButtonElement>("button.submit");
    if (submit) submit.disabled = !this.session.canSubmit;
  }

  private renderVerdict(): HTMLElement {
    const box = el("div", "verdict");
    const edit = this.session.lastEdit;
    if (!edit || !edit.predictor_verdict) return box;
    const v = edit.predictor_verdict;
    box.append(
      el("span", undefined, `predicted: ${v.predicted_label}`),
      el("span", undefined, `confidence: ${v.confidence.toFixed(3)}`),
      el("span", v.flipped ? "badge flipped" : "badge", v.flipped ? "flipped" : "not flipped"),
      el("span", "status", edit.status),
    );
    return box;
  }

  private renderDashboard(): HTMLElement {
    const pane = el("section", "dashboard");
    pane.append(el("h2", undefined, "Repair report"));
    const report = this.session.report;
    if (!report || (!report.trivial && !report.erroneous)) {
      pane.append(el("p", "empty", "No flagged instances yet - nothing to report."));
      return pane;
    }
    for (const [name, delta] of [
      ["trivial", report.trivial],
      ["erroneous", report.erroneous],
    ] as [string, ClassDelta | null][]) {
      if (!delta) continue;
      const row = el("div", "bars");
      row.append(el("h3", undefined, `${name} (${delta.n_instances} instances)`));
      for (const [label, value] of [
        ["before", delta.before_accuracy],
        ["after", delta.after_accuracy],
      ] as [string, number][]) {
        const bar = el("div", "bar");
        const fill = el("div", "fill");
        fill.style.width = `${(value * 100).toFixed(1)}%`;
        bar.append(fill, el("span", undefined, `${label} ${(value * 100).toFixed(1)}%`));
        row.append(bar);
      }
      row.append(el("p", "delta", `delta ${(delta.delta * 100).toFixed(1)}%`));
      pane.append(row);
    }
    return pane;
  }
}
