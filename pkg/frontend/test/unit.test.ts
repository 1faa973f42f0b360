import { describe, expect, it } from "vitest";

import { compilePick } from "../src/picks.js";
import { LineBuffer } from "../src/transport.js";
import { renderEquationHtml, renderProofView, renderStateHtml } from "../src/view.js";
import type { StatePayload } from "../src/protocol.js";

describe("pick compilation", () => {
  it("compiles the golden replay commands", () => {
    expect(compilePick({ kind: "induct", equation: 1 })).toBe("induct 1");
    expect(
      compilePick({ kind: "case-constraints", equation: 2, constraints: ["i < n", "i >= n"] })
    ).toBe("case 2 [i < n] | [i >= n]");
    expect(
      compilePick({ kind: "simplify", equation: 3, side: "left", rule: "R1", pos: "ε" })
    ).toBe("simplify 3 left with R1");
    expect(
      compilePick({ kind: "simplify", equation: 9, side: "left", rule: "calc", pos: "2.3" })
    ).toBe("simplify 9 left with calc at 2.3");
    expect(
      compilePick({
        kind: "alter-add",
        equation: 8,
        definitions: [
          { name: "i'", term: "i - 1" },
          { name: "n'", term: "n + 1" },
        ],
      })
    ).toBe("alter 8 add i' := i - 1, n' := n + 1");
    expect(
      compilePick({ kind: "hypothesis", equation: 11, side: "left", hyp: 1, direction: "lr", pos: "2" })
    ).toBe("hypothesis 11 left with 1 lr at 2");
    expect(compilePick({ kind: "hdelete", equation: 22, hyp: 2 })).toBe("hdelete 22 with 2");
    expect(compilePick({ kind: "eq-delete", equation: 17 })).toBe("eq-delete 17");
  });
});

describe("line buffering", () => {
  it("reassembles split and batched lines", () => {
    const seen: string[] = [];
    const buffer = new LineBuffer((line) => seen.push(line));
    buffer.push('{"a"');
    buffer.push(': 1}\n{"b": 2}\n{"c"');
    buffer.push(": 3}\n");
    expect(seen).toEqual(['{"a": 1}', '{"b": 2}', '{"c": 3}']);
  });
});

const sampleState: StatePayload = {
  equations: [
    {
      id: 2,
      lhs: "recdown f n i a",
      rhs: "tailup f n i a",
      constraint: "true",
      leftBound: "recdown f n i a",
      rightBound: "tailup f n i a",
      leftMark: true,
      rightMark: true,
      rendered: "recdown f n i a == tailup f n i a ⊙L ⊙R",
      renderedFull: "<recdown f n i a> recdown f n i a == tailup f n i a <tailup f n i a>",
      subterms: {
        left: [{ pos: "ε", text: "recdown f n i a" }],
        right: [{ pos: "ε", text: "tailup f n i a" }],
      },
    },
  ],
  hypotheses: ["recdown f n i a == tailup f n i a"],
  ledger: ["REQ1: recdown f n i a > f i (tailup f n i' a)  (pending)"],
  complete: true,
  qed: false,
  refuted: false,
  finished: false,
  renderedEquations: "  2. recdown f n i a == tailup f n i a ⊙L ⊙R",
  renderedEquationsFull: "  2. <recdown f n i a> ...",
};

describe("view rendering", () => {
  it("is a pure function of the state payload", () => {
    const view = renderProofView(sampleState);
    expect(view.equationsPanel).toEqual(["2. recdown f n i a == tailup f n i a ⊙L ⊙R"]);
    expect(view.hypothesesPanel[0]).toContain("recdown");
    expect(view.ledgerPanel[0].color).toBe("orange");
    expect(view.statusLine).toBe("complete");
  });

  it("marks bound-equal sides and carries position data for clicks", () => {
    const html = renderEquationHtml(sampleState.equations[0]);
    expect(html).toContain("⊙");
    expect(html).toContain('data-side="left"');
    expect(html).toContain('<option value="ε">');
    const page = renderStateHtml(sampleState);
    expect(page).toContain('class="equations"');
    expect(page).toContain("REQ1");
  });
});
