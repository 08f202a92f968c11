import { ApiError, createGateway, type Gateway } from "./api.js";
import { mountRunView, type RunView } from "./render.js";
import type { RunSummary } from "./types.js";

const DEFAULT_BASE = "http://127.0.0.1:8723";

function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? DEFAULT_BASE;
}

function summaryRow(summary: RunSummary, onOpen: (id: string) => void) {
  const row = document.createElement("tr");
  const open = document.createElement("button");
  open.type = "button";
  open.textContent = summary.run_id;
  open.addEventListener("click", () => onOpen(summary.run_id));
  const cells = [
    open,
    summary.stage,
    summary.latest_overall_score === null
      ? "-"
      : summary.latest_overall_score.toFixed(2),
    `${summary.total_cost_micro}`,
    summary.created_at,
  ];
  for (const value of cells) {
    const td = document.createElement("td");
    td.append(value);
    row.append(td);
  }
  return row;
}

async function renderRunList(
  container: HTMLElement,
  gateway: Gateway,
  onOpen: (id: string) => void,
): Promise<void> {
  container.replaceChildren();
  const heading = document.createElement("h1");
  heading.textContent = "Runs";
  container.append(heading);

  let runs: RunSummary[];
  try {
    runs = await gateway.listRuns();
  } catch (err) {
    const warn = document.createElement("p");
    warn.className = "banner banner-error";
    warn.textContent = `Could not reach the run server: ${
      err instanceof Error ? err.message : String(err)
    }`;
    container.append(warn);
    return;
  }

  if (runs.length === 0) {
    const none = document.createElement("p");
    none.textContent = "No runs yet.";
    container.append(none);
  } else {
    const table = document.createElement("table");
    table.className = "run-list";
    const head = document.createElement("tr");
    for (const label of ["run", "stage", "score", "cost (micro)", "created"]) {
      const th = document.createElement("th");
      th.textContent = label;
      head.append(th);
    }
    table.append(head);
    for (const summary of runs) table.append(summaryRow(summary, onOpen));
    container.append(table);
  }

  // minimal start form: dataset path only, everything else server defaults
  const form = document.createElement("form");
  form.className = "new-run-form";
  const input = document.createElement("input");
  input.type = "text";
  input.name = "dataset_path";
  input.placeholder = "path to dataset csv on the server";
  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Start run";
  const note = document.createElement("span");
  note.className = "form-note";
  form.append(input, submit, note);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const path = input.value.trim();
    if (path === "") {
      note.textContent = "a dataset path is required";
      return;
    }
    note.textContent = "starting...";
    gateway
      .createRun({ dataset_path: path })
      .then((summary) => onOpen(summary.run_id))
      .catch((err) => {
        note.textContent =
          err instanceof ApiError ? err.message : "failed to start run";
      });
  });
  container.append(form);
}

function boot(): void {
  const app = document.getElementById("app");
  if (app === null) return;
  const gateway = createGateway(baseUrl());
  let active: RunView | null = null;

  const showList = () => {
    if (active !== null) {
      active.unmount();
      active = null;
    }
    void renderRunList(app, gateway, showRun);
  };

  const showRun = (runId: string) => {
    if (active !== null) active.unmount();
    app.replaceChildren();
    const back = document.createElement("button");
    back.type = "button";
    back.textContent = "< runs";
    back.className = "back-link";
    back.addEventListener("click", showList);
    const host = document.createElement("div");
    app.append(back, host);
    active = mountRunView(host, gateway, runId);
  };

  showList();
}

boot();
