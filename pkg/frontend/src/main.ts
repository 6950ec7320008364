// DOM wiring for the sandbox: form, submission, polling, and result tables.

import { ApiClient, ApiError } from "./api";
import { defaultForm, toRequestBody, validateForm, type PolicyForm } from "./form";
import { pollStatus, type PollHandle } from "./poll";
import {
  METRIC_EXPLANATIONS,
  buildComparisonView,
  buildSubgroupView,
  type TableView,
} from "./table";
import type { Defaults, PolicyInfo, ResultsPayload } from "./types";
import { formToQuery, queryToForm } from "./urlstate";

const client = new ApiClient();

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  for (const child of children) node.append(child);
  return node;
}

function renderTable(view: TableView): HTMLTableElement {
  const head = el("tr", {}, [
    el("th", {}, ["policy"]),
    ...view.metricKeys.map((key, i) =>
      el("th", { title: METRIC_EXPLANATIONS[key] ?? "" }, [view.metricLabels[i]]),
    ),
  ]);
  const body = view.rows.map((row) =>
    el("tr", {}, [
      el("td", { class: "policy" }, [row.policy]),
      ...row.cells.map((cell) =>
        el("td", { class: cell.badge ?? "" }, [
          cell.value,
          cell.badge ? el("span", { class: `badge ${cell.badge}` }, [cell.badge]) : "",
        ]),
      ),
    ]),
  );
  return el("table", { class: "comparison" }, [el("thead", {}, [head]), el("tbody", {}, body)]);
}

class App {
  private defaults!: Defaults;
  private policies: PolicyInfo[] = [];
  private form!: PolicyForm;
  private results: ResultsPayload | null = null;
  private activeGroup: string | null = null;
  private poller: PollHandle | null = null;
  private currentId: string | null = null;

  async start(): Promise<void> {
    [this.defaults, this.policies] = await Promise.all([
      client.defaults(),
      client.policies().then((r) => r.policies),
    ]);
    this.form = queryToForm(window.location.search.slice(1), defaultForm(this.defaults));
    this.renderForm();
    this.renderStatus("idle", "");
  }

  private syncUrl(): void {
    const qs = formToQuery(this.form);
    window.history.replaceState(null, "", `${window.location.pathname}?${qs}`);
  }

  private renderForm(): void {
    const root = document.getElementById("form-root")!;
    root.replaceChildren();
    const picker = el("fieldset", {}, [el("legend", {}, ["Matching policies"])]);
    for (const info of this.policies) {
      const box = el("input", { type: "checkbox", value: info.name }) as HTMLInputElement;
      box.checked = this.form.policies.includes(info.name);
      box.addEventListener("change", () => {
        this.form.policies = box.checked
          ? [...this.form.policies, info.name]
          : this.form.policies.filter((p) => p !== info.name);
        this.syncUrl();
      });
      picker.append(el("label", { title: info.description }, [box, ` ${info.label}`]));
    }
    root.append(picker);

    const numeric = (
      label: string,
      get: () => number | null,
      set: (v: number | null) => void,
      step = "1",
    ) => {
      const input = el("input", { type: "number", step }) as HTMLInputElement;
      const current = get();
      if (current !== null) input.value = String(current);
      input.addEventListener("change", () => {
        set(input.value === "" ? null : Number(input.value));
        this.syncUrl();
      });
      return el("label", { class: "field" }, [label, input]);
    };

    root.append(
      numeric("Seeds", () => this.form.seeds, (v) => (this.form.seeds = v ?? 1)),
      numeric("Horizon (minutes)", () => this.form.horizonMin, (v) => (this.form.horizonMin = v ?? 1)),
      numeric(
        "Recommendation accept probability",
        () => this.form.noiseAcceptProb,
        (v) => (this.form.noiseAcceptProb = v ?? 0.9),
        "0.05",
      ),
      numeric(
        `Mean patience (default ${this.defaults.population.patience_mean_min} min)`,
        () => this.form.patienceMean,
        (v) => (this.form.patienceMean = v),
        "0.1",
      ),
      numeric(
        `Seekers online (default ${this.defaults.population.seeker_online_mean})`,
        () => this.form.seekerOnlineMean,
        (v) => (this.form.seekerOnlineMean = v),
        "1",
      ),
      numeric(
        `Counselors online (default ${this.defaults.population.counselor_online_mean})`,
        () => this.form.counselorOnlineMean,
        (v) => (this.form.counselorOnlineMean = v),
        "1",
      ),
      numeric(
        `Teen fraction (default ${this.defaults.population.teen_fraction})`,
        () => this.form.teenFraction,
        (v) => (this.form.teenFraction = v),
        "0.05",
      ),
      numeric(
        "Gender-minority share (rescales gender weights)",
        () => this.form.minorityShare,
        (v) => (this.form.minorityShare = v),
        "0.05",
      ),
    );

    const submit = el("button", { class: "submit" }, ["Run experiment"]);
    submit.addEventListener("click", () => void this.submit());
    const cancel = el("button", { class: "cancel" }, ["Cancel"]);
    cancel.addEventListener("click", () => void this.cancel());
    root.append(el("div", { class: "actions" }, [submit, cancel]));
  }

  private renderErrors(errors: { field: string; message: string }[]): void {
    const box = document.getElementById("errors")!;
    box.replaceChildren(
      ...errors.map((e) => el("div", { class: "error" }, [`${e.field}: ${e.message}`])),
    );
  }

  private renderStatus(state: string, detail: string): void {
    const box = document.getElementById("status")!;
    box.replaceChildren(el("span", { class: `state ${state}` }, [state]), ` ${detail}`);
  }

  private async submit(): Promise<void> {
    // invalid forms never reach the network
    const errors = validateForm(this.form, this.defaults);
    this.renderErrors(errors);
    if (errors.length > 0) return;
    this.results = null;
    this.renderResults();
    try {
      const { id } = await client.submitExperiment(toRequestBody(this.form, this.defaults));
      this.currentId = id;
      this.renderStatus("queued", `experiment ${id}`);
      this.poller?.stop();
      this.poller = pollStatus(client, id, (status) => {
        const pct = Math.round(status.progress.fraction * 100);
        this.renderStatus(status.state, `${status.progress.completed}/${status.progress.total} runs (${pct}%)`);
      });
      const final = await this.poller.promise;
      if (final.state === "done") {
        this.results = await client.results(id);
        this.renderResults();
      } else if (final.state === "failed") {
        this.renderErrors([{ field: "experiment", message: final.error ?? "failed" }]);
      }
    } catch (err) {
      if (err instanceof ApiError) {
        this.renderErrors(err.fieldErrors.length ? err.fieldErrors : [{ field: "request", message: err.message }]);
      } else {
        this.renderErrors([{ field: "network", message: String(err) }]);
      }
    }
  }

  private async cancel(): Promise<void> {
    if (this.currentId) {
      await client.cancel(this.currentId).catch(() => undefined);
    }
  }

  private renderResults(): void {
    const root = document.getElementById("results-root")!;
    root.replaceChildren();
    if (!this.results) return;
    const tabs = el("div", { class: "tabs" });
    const mk = (label: string, group: string | null) => {
      const active = this.activeGroup === group ? " active" : "";
      const b = el("button", { class: `tab${active}` }, [label]);
      b.addEventListener("click", () => {
        this.activeGroup = group;
        this.renderResults();
      });
      return b;
    };
    tabs.append(mk("overall", null));
    for (const g of this.results.subgroups.groups) tabs.append(mk(g.replace("_", "-"), g));
    root.append(tabs);
    const view =
      this.activeGroup === null
        ? buildComparisonView(this.results.comparison)
        : buildSubgroupView(this.results.subgroups, this.activeGroup);
    root.append(renderTable(view));
  }
}

window.addEventListener("DOMContentLoaded", () => {
  void new App().start();
});
