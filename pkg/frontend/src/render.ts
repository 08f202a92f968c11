import type { Gateway } from "./api.js";
import { renderMarkdown } from "./md.js";
import {
  eventStudyGeometry,
  trajectoryGeometry,
  type EventCoefficient,
} from "./chart.js";
import {
  publicationGateView,
  questionGateView,
  resultsTables,
  tableCsv,
  type CandidateRow,
  type TrajectoryPoint,
} from "./views.js";
import { createRunStore, type RunStore, type TimerApi } from "./store.js";
import type { RunSnapshot } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

type Attrs = Record<string, string | boolean>;

function el(
  tag: string,
  attrs: Attrs = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  applyAttrs(node, attrs);
  for (const child of children) node.append(child);
  return node;
}

function svgEl(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function applyAttrs(node: HTMLElement, attrs: Attrs): void {
  for (const [k, v] of Object.entries(attrs)) {
    if (typeof v === "boolean") {
      if (v) node.setAttribute(k, "");
    } else {
      node.setAttribute(k, v);
    }
  }
}

export interface MountOptions {
  intervalMs?: number;
  timers?: TimerApi;
  /** Confirmation hook for selecting a candidate flagged infeasible. */
  confirmFn?: (message: string) => boolean;
}

export interface RunView {
  store: RunStore;
  unmount(): void;
}

/**
 * Mount the console for one run. Renders from store snapshots only; every
 * verdict, score, and flag shown comes off the wire untouched.
 */
export function mountRunView(
  container: HTMLElement,
  gateway: Gateway,
  runId: string,
  opts: MountOptions = {},
): RunView {
  const store = createRunStore(gateway, runId, {
    intervalMs: opts.intervalMs,
    timers: opts.timers,
  });
  const confirmFn =
    opts.confirmFn ?? ((msg: string) => window.confirm(msg));

  const render = () => {
    const { snapshot, error, stale } = store.state;
    const parts: HTMLElement[] = [];
    if (stale !== null) {
      parts.push(
        el("div", { class: "banner banner-stale", "data-stale": true }, [
          `Decision not applied: ${stale}. The view has been refreshed.`,
          el("button", { type: "button", "data-dismiss-stale": true }, [
            "dismiss",
          ]),
        ]),
      );
    }
    if (error !== null) {
      parts.push(
        el("div", { class: "banner banner-error" }, [`Fetch failed: ${error}`]),
      );
    }
    if (snapshot === null) {
      parts.push(el("p", { class: "loading" }, ["Loading run..."]));
    } else {
      parts.push(renderHeader(snapshot));
      parts.push(renderQuestionGate(snapshot));
      parts.push(renderManuscript(snapshot));
      parts.push(renderResults(snapshot));
      parts.push(renderEventLog(snapshot));
    }
    container.replaceChildren(...parts);
    wireActions(container, store, snapshot, confirmFn);
  };

  const unsubscribe = store.subscribe(render);
  render();
  store.start();
  return {
    store,
    unmount() {
      store.stop();
      unsubscribe();
      container.replaceChildren();
    },
  };
}

function renderHeader(snapshot: RunSnapshot): HTMLElement {
  return el("header", { class: "run-header" }, [
    el("h1", {}, [`Run ${snapshot.run_id}`]),
    el("span", { class: "stage-badge", "data-stage": snapshot.stage }, [
      snapshot.stage,
    ]),
    el("span", { class: "run-meta" }, [
      `round ${snapshot.question_round} / revision ${snapshot.revision_iteration}`,
    ]),
    el("span", { class: "run-cost" }, [
      `cost: ${snapshot.cost.total_micro} micro-dollars`,
    ]),
  ]);
}

function candidateCard(row: CandidateRow, gateOpen: boolean): HTMLElement {
  const badges: HTMLElement[] = [
    el("span", { class: "design-tag" }, [row.design]),
    el("span", { class: "tractability" }, [
      `tractability ${row.tractability.toFixed(2)}`,
    ]),
  ];
  if (!row.feasible) {
    badges.push(
      el("span", { class: "badge-infeasible", "data-infeasible": true }, [
        "INFEASIBLE",
      ]),
    );
  }

  const detail: HTMLElement[] = [
    el("p", { class: "candidate-rationale" }, [row.rationale]),
    el("p", { class: "candidate-vars" }, [
      `outcome: ${row.outcome}; treatment: ${row.treatments.join(", ")}` +
        (row.controls.length > 0
          ? `; controls: ${row.controls.join(", ")}`
          : ""),
    ]),
  ];
  if (!row.feasible) {
    const reasons: string[] = [];
    if (row.missingVars.length > 0) {
      reasons.push(`missing variables: ${row.missingVars.join(", ")}`);
    }
    if (row.designReason !== "") reasons.push(row.designReason);
    if (row.methodReason !== "") reasons.push(row.methodReason);
    detail.push(
      el("p", { class: "infeasible-reasons" }, [reasons.join("; ")]),
    );
  }

  return el(
    "article",
    {
      class: row.feasible ? "candidate" : "candidate candidate-infeasible",
      "data-candidate": row.id,
      "data-feasible": String(row.feasible),
    },
    [
      el("div", { class: "candidate-head" }, [
        el("strong", {}, [`[${row.id}]`]),
        " ",
        row.text,
        ...badges,
      ]),
      ...detail,
      el(
        "button",
        {
          type: "button",
          "data-select": row.id,
          disabled: !gateOpen,
        },
        ["Select"],
      ),
    ],
  );
}

function renderQuestionGate(snapshot: RunSnapshot): HTMLElement {
  const view = questionGateView(snapshot);
  if (view.rounds.length === 0) {
    return el("section", { class: "question-gate" }, [
      el("h2", {}, ["Question candidates"]),
      el("p", {}, ["No candidates generated yet."]),
    ]);
  }

  const sections = view.rounds.map((round) =>
    el("section", { class: "round", "data-round": String(round.round) }, [
      el("h3", {}, [`Round ${round.round}`]),
      ...round.rows.map((row) => candidateCard(row, view.gateOpen)),
    ]),
  );

  const regenerate = el("form", { class: "regenerate-form" }, [
    el("input", {
      type: "text",
      name: "constraint",
      placeholder: "constraint for the next round",
      "data-constraint-input": true,
      disabled: !view.gateOpen,
    }),
    el(
      "button",
      { type: "submit", "data-regenerate": true, disabled: !view.gateOpen },
      ["Regenerate with constraint"],
    ),
    el("span", { class: "form-note", "data-regenerate-note": true }, []),
  ]);

  const selectedLine =
    view.selectedId !== null
      ? [el("p", { class: "selected-line" }, [`selected: ${view.selectedId}`])]
      : [];

  return el("section", { class: "question-gate" }, [
    el("h2", {}, ["Question candidates"]),
    el("p", { class: "gate-counts" }, [
      `${view.candidateCount} candidates, ${view.infeasibleCount} flagged infeasible`,
    ]),
    ...selectedLine,
    ...sections,
    regenerate,
  ]);
}

function renderManuscript(snapshot: RunSnapshot): HTMLElement {
  const view = publicationGateView(snapshot);
  if (view.latestDraft === null) {
    return el("section", { class: "manuscript" }, [
      el("h2", {}, ["Manuscript"]),
      el("p", {}, ["No draft yet."]),
    ]);
  }

  const latest = snapshot.drafts[snapshot.drafts.length - 1];
  const body = el("div", { class: "draft-body" });
  body.innerHTML = renderMarkdown(latest.body);

  const children: HTMLElement[] = [
    el("h2", {}, [
      `Manuscript v${view.latestDraft.version} (${view.latestDraft.wordCount} words)`,
    ]),
    body,
  ];

  if (view.trajectory.length > 0) {
    children.push(renderTrajectory(view.trajectory));
    const last = view.trajectory[view.trajectory.length - 1];
    children.push(
      el("p", { class: "verdict-line" }, [
        `latest review: overall ${last.overall.toFixed(2)} (${last.verdict})`,
      ]),
    );
    if (view.latestRequests.length > 0) {
      children.push(
        el("ul", { class: "revision-requests" }, [
          ...view.latestRequests.map((r) =>
            el("li", {}, [`${r.kind}: ${r.text}`]),
          ),
        ]),
      );
    }
  }

  children.push(
    el("div", { class: "publication-actions" }, [
      el(
        "button",
        { type: "button", "data-approve": true, disabled: !view.gateOpen },
        ["Approve for publication"],
      ),
      el("textarea", {
        "data-reject-reason": true,
        placeholder: "reason for rejection",
        disabled: !view.gateOpen,
      }),
      el(
        "button",
        { type: "button", "data-reject": true, disabled: !view.gateOpen },
        ["Reject"],
      ),
      el("span", { class: "form-note", "data-reject-note": true }, []),
    ]),
  );

  return el("section", { class: "manuscript" }, children);
}

function renderTrajectory(trajectory: TrajectoryPoint[]): HTMLElement {
  const geometry = trajectoryGeometry(trajectory);
  const svg = svgEl("svg", {
    class: "trajectory-chart",
    viewBox: `0 0 ${geometry.frame.width} ${geometry.frame.height}`,
    width: String(geometry.frame.width),
    height: String(geometry.frame.height),
  });

  for (const tick of geometry.ticks) {
    svg.append(
      svgEl("line", {
        x1: String(tick.x),
        y1: String(tick.y),
        x2: String(geometry.frame.width - geometry.frame.pad),
        y2: String(tick.y),
        class: "grid-line",
      }),
    );
    const label = svgEl("text", {
      x: String(tick.x - 6),
      y: String(tick.y),
      class: "tick-label",
      "text-anchor": "end",
    });
    label.textContent = String(tick.value);
    svg.append(label);
  }

  for (const series of geometry.series) {
    const isOverall = series.name === "overall";
    svg.append(
      svgEl("path", {
        d: series.path,
        class: isOverall ? "series series-overall" : "series series-dim",
        "data-series": series.name,
        fill: "none",
      }),
    );
    for (const point of series.points) {
      const dot = svgEl("circle", {
        cx: point.x.toFixed(1),
        cy: point.y.toFixed(1),
        r: isOverall ? "4" : "2.5",
        "data-series": series.name,
        "data-value": String(point.value),
        "data-label": point.label,
      });
      if (isOverall) dot.setAttribute("data-overall", String(point.value));
      svg.append(dot);
    }
  }

  const wrap = el("figure", { class: "trajectory" }, [
    el("figcaption", {}, ["Review trajectory (overall and per-dimension)"]),
  ]);
  wrap.append(svg);
  return wrap;
}

function renderResults(snapshot: RunSnapshot): HTMLElement {
  const tables = resultsTables(snapshot);
  if (tables.length === 0) {
    return el("section", { class: "results" }, []);
  }

  const blocks = tables.map((table, idx) => {
    const rows = table.rows.map((r) =>
      el("tr", {}, [
        el("td", {}, [r.name]),
        el("td", {}, [r.estimate.toFixed(4)]),
        el("td", {}, [r.stdError.toFixed(4)]),
        el("td", {}, [r.pValue.toFixed(4)]),
        el("td", {}, [`[${r.ciLow.toFixed(4)}, ${r.ciHigh.toFixed(4)}]`]),
      ]),
    );
    const csvHref =
      "data:text/csv;charset=utf-8," + encodeURIComponent(tableCsv(table));
    const children: HTMLElement[] = [
      el("h3", {}, [`${table.label} (${table.design})`]),
      el("p", { class: "fit-line" }, [
        `n = ${table.nObs}, R^2 = ${table.rSquared.toFixed(4)}`,
      ]),
      el("table", { class: "coef-table" }, [
        el("thead", {}, [
          el("tr", {}, [
            el("th", {}, ["term"]),
            el("th", {}, ["estimate"]),
            el("th", {}, ["std. error"]),
            el("th", {}, ["p"]),
            el("th", {}, ["95% CI"]),
          ]),
        ]),
        el("tbody", {}, rows),
      ]),
      el(
        "a",
        {
          href: csvHref,
          download: `analysis_${idx + 1}.csv`,
          class: "csv-download",
          "data-csv": String(idx + 1),
        },
        ["Download CSV"],
      ),
    ];
    if (table.eventStudy) {
      const analysis = snapshot.analyses[idx];
      children.push(renderEventStudy(analysis.coefficients, analysis.spec));
    }
    return el(
      "article",
      { class: "analysis", "data-analysis": String(idx + 1) },
      children,
    );
  });

  return el("section", { class: "results" }, [
    el("h2", {}, ["Estimation results"]),
    ...blocks,
  ]);
}

function renderEventStudy(
  coefficients: EventCoefficient[],
  spec: { event_fields: Record<string, unknown> | null },
): HTMLElement {
  const omittedRaw = spec.event_fields?.["omitted_period"];
  const omitted = typeof omittedRaw === "number" ? omittedRaw : null;
  const geometry = eventStudyGeometry(coefficients, omitted);
  const svg = svgEl("svg", {
    class: "event-study-chart",
    viewBox: `0 0 ${geometry.frame.width} ${geometry.frame.height}`,
    width: String(geometry.frame.width),
    height: String(geometry.frame.height),
  });
  svg.append(
    svgEl("line", {
      x1: String(geometry.frame.pad),
      y1: String(geometry.zeroY),
      x2: String(geometry.frame.width - geometry.frame.pad),
      y2: String(geometry.zeroY),
      class: "zero-line",
    }),
  );
  for (const point of geometry.points) {
    if (!point.omitted) {
      svg.append(
        svgEl("line", {
          x1: String(point.x),
          y1: String(point.ciLowY),
          x2: String(point.x),
          y2: String(point.ciHighY),
          class: "ci-whisker",
        }),
      );
    }
    svg.append(
      svgEl("circle", {
        cx: String(point.x),
        cy: String(point.y),
        r: "3.5",
        class: point.omitted ? "es-point es-omitted" : "es-point",
        "data-period": String(point.period),
        "data-estimate": String(point.estimate),
      }),
    );
  }
  const wrap = el("figure", { class: "event-study" }, [
    el("figcaption", {}, ["Event-study coefficients"]),
  ]);
  wrap.append(svg);
  return wrap;
}

function renderEventLog(snapshot: RunSnapshot): HTMLElement {
  const recent = snapshot.events.slice(-8);
  return el("section", { class: "event-log" }, [
    el("h2", {}, ["Recent events"]),
    el("ul", {}, [
      ...recent.map((ev) =>
        el("li", { "data-event-kind": ev.kind }, [
          `${ev.timestamp} ${ev.kind} (${ev.actor})`,
        ]),
      ),
    ]),
  ]);
}

function wireActions(
  container: HTMLElement,
  store: RunStore,
  snapshot: RunSnapshot | null,
  confirmFn: (message: string) => boolean,
): void {
  const dismiss = container.querySelector<HTMLButtonElement>(
    "[data-dismiss-stale]",
  );
  if (dismiss) {
    dismiss.addEventListener("click", () => store.dismissStale());
  }
  if (snapshot === null) return;

  for (const button of container.querySelectorAll<HTMLButtonElement>(
    "[data-select]",
  )) {
    button.addEventListener("click", () => {
      const id = button.getAttribute("data-select");
      if (id === null) return;
      const card = button.closest("[data-candidate]");
      const feasible = card?.getAttribute("data-feasible") !== "false";
      if (!feasible) {
        const ok = confirmFn(
          `Candidate ${id} is flagged infeasible. Select it anyway?`,
        );
        if (!ok) return;
      }
      void store.decide("question", { action: "Select", question_id: id });
    });
  }

  const regenerateForm =
    container.querySelector<HTMLFormElement>(".regenerate-form");
  if (regenerateForm) {
    regenerateForm.addEventListener("submit", (ev) => {
      ev.preventDefault();
      const input = regenerateForm.querySelector<HTMLInputElement>(
        "[data-constraint-input]",
      );
      const note = regenerateForm.querySelector<HTMLElement>(
        "[data-regenerate-note]",
      );
      const constraint = input?.value.trim() ?? "";
      if (constraint === "") {
        if (note) note.textContent = "a constraint is required";
        return;
      }
      if (note) note.textContent = "";
      void store.decide("question", {
        action: "Regenerate",
        constraint_text: constraint,
      });
    });
  }

  const approve =
    container.querySelector<HTMLButtonElement>("[data-approve]");
  if (approve) {
    approve.addEventListener("click", () => {
      void store.decide("publication", { action: "Approve" });
    });
  }

  const reject = container.querySelector<HTMLButtonElement>("[data-reject]");
  if (reject) {
    reject.addEventListener("click", () => {
      const reasonBox = container.querySelector<HTMLTextAreaElement>(
        "[data-reject-reason]",
      );
      const note = container.querySelector<HTMLElement>("[data-reject-note]");
      const reason = reasonBox?.value.trim() ?? "";
      if (reason === "") {
        if (note) note.textContent = "a rejection reason is required";
        return;
      }
      if (note) note.textContent = "";
      void store.decide("publication", {
        action: "Reject",
        reason_text: reason,
      });
    });
  }
}
