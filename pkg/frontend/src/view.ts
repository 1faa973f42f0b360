/** Rendering: the view is a pure function of the last full-state response. */

import { Applicability, EquationView, StatePayload } from "./protocol.js";

export interface ProofView {
  equationsPanel: string[];
  hypothesesPanel: string[];
  ledgerPanel: { text: string; color: string }[];
  transcriptPanel: string[];
  statusLine: string;
}

const STATUS_COLORS: Array<[RegExp, string]> = [
  [/\(pending\)/, "orange"],
  [/\(proved\)/, "green"],
  [/\(discharged-syntactic\)/, "green"],
  [/\(trusted\)/, "blue"],
  [/\(failed\)/, "red"],
];

export function renderProofView(state: StatePayload): ProofView {
  const ledgerPanel = state.ledger.map((text) => {
    const match = STATUS_COLORS.find(([pattern]) => pattern.test(text));
    return { text, color: match ? match[1] : "gray" };
  });
  let statusLine = state.complete ? "complete" : "incomplete";
  if (state.refuted) statusLine = "⊥ refuted";
  else if (state.qed) statusLine = "QED";
  return {
    equationsPanel: state.equations.map((eq) => `${eq.id}. ${eq.rendered}`),
    hypothesesPanel: state.hypotheses.map((h, i) => `${i + 1}. ${h}`),
    ledgerPanel,
    transcriptPanel: state.transcript ?? [],
    statusLine,
  };
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** One equation as HTML; subterm spans carry data attributes so clicks map
 * straight to positions without any client-side term parsing. */
export function renderEquationHtml(eq: EquationView): string {
  const side = (name: "left" | "right", text: string, marked: boolean) => {
    const subterms = eq.subterms[name]
      .map(
        (s) =>
          `<option value="${escapeHtml(s.pos)}">${escapeHtml(s.pos)} : ${escapeHtml(s.text)}</option>`
      )
      .join("");
    const mark = marked ? `<span class="bound-mark" style="color:red">⊙</span>` : "";
    return (
      `<span class="side" data-equation="${eq.id}" data-side="${name}">` +
      `${escapeHtml(text)}${mark}<select class="subterm-picker" data-side="${name}">${subterms}</select></span>`
    );
  };
  const constraint =
    eq.constraint === "true" ? "" : ` <span class="constraint">[${escapeHtml(eq.constraint)}]</span>`;
  return (
    `<div class="equation" data-id="${eq.id}">` +
    `<span class="eq-id">${eq.id}.</span> ` +
    side("left", eq.lhs, eq.leftMark) +
    ` == ` +
    side("right", eq.rhs, eq.rightMark) +
    constraint +
    `</div>`
  );
}

export function renderStateHtml(state: StatePayload, applicability?: Applicability): string {
  const equations = state.equations.map(renderEquationHtml).join("\n");
  const view = renderProofView(state);
  const hypotheses = view.hypothesesPanel.map((h) => `<li>${escapeHtml(h)}</li>`).join("");
  const ledger = view.ledgerPanel
    .map((entry) => `<li style="color:${entry.color}">${escapeHtml(entry.text)}</li>`)
    .join("");
  const transcript = view.transcriptPanel
    .map((line) => `<li>${escapeHtml(line)}</li>`)
    .join("");
  const rules = applicability
    ? applicability.simplify
        .map(
          (inst) =>
            `<button class="apply" data-side="${inst.side}" data-rule="${escapeHtml(inst.rule)}" data-pos="${escapeHtml(inst.pos)}">` +
            `simplify ${inst.side} with ${escapeHtml(inst.rule)} at ${escapeHtml(inst.pos)}</button>`
        )
        .join("")
    : "";
  return (
    `<section class="status">${escapeHtml(view.statusLine)}</section>` +
    `<section class="equations">${equations}</section>` +
    `<section class="hypotheses"><ul>${hypotheses}</ul></section>` +
    `<section class="ledger"><ul>${ledger}</ul></section>` +
    `<section class="transcript"><ol>${transcript}</ol></section>` +
    (rules ? `<section class="applicable">${rules}</section>` : "")
  );
}
