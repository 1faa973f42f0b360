/** Structured picks: what the UI gathers from clicks, compiled into the
 * exact command text a REPL user would type.  The client holds no proof
 * logic; rules and positions come from the server's applicability lists. */

export type Pick =
  | { kind: "induct"; equation: number }
  | { kind: "case-constraints"; equation: number; constraints: string[] }
  | { kind: "case-variable"; equation: number; variable: string }
  | {
      kind: "simplify";
      equation: number;
      side: "left" | "right";
      rule: string;
      pos: string;
    }
  | { kind: "delete"; equation: number }
  | { kind: "eq-delete"; equation: number }
  | {
      kind: "hypothesis";
      equation: number;
      side: "left" | "right";
      hyp: number;
      direction: "lr" | "rl";
      pos: string;
    }
  | { kind: "hdelete"; equation: number; hyp?: number; direction?: "lr" | "rl" }
  | { kind: "alter-add"; equation: number; definitions: { name: string; term: string }[] }
  | { kind: "alter-subst"; equation: number; mapping: { name: string; term: string }[] }
  | { kind: "alter-constraint"; equation: number; constraint: string }
  | { kind: "generalize"; equation: number; text: string; witness?: string }
  | { kind: "postulate"; text: string }
  | { kind: "semiconstructor"; equation: number }
  | { kind: "expand"; equation: number; side: "left" | "right"; pos: string }
  | { kind: "disprove"; equation: number; instantiation?: { name: string; term: string }[] }
  | { kind: "auto"; budget?: number }
  | { kind: "command"; text: string };

const ROOT = "ε";

function at(pos: string): string {
  return pos === ROOT ? "" : ` at ${pos}`;
}

function assignments(defs: { name: string; term: string }[]): string {
  return defs.map((d) => `${d.name} := ${d.term}`).join(", ");
}

/** Compile a pick to command text, byte-compatible with hand-typed scripts. */
export function compilePick(pick: Pick): string {
  switch (pick.kind) {
    case "induct":
      return `induct ${pick.equation}`;
    case "case-constraints":
      return `case ${pick.equation} ${pick.constraints.map((c) => `[${c}]`).join(" | ")}`;
    case "case-variable":
      return `case ${pick.equation} ${pick.variable}`;
    case "simplify":
      return `simplify ${pick.equation} ${pick.side} with ${pick.rule}${at(pick.pos)}`;
    case "delete":
      return `delete ${pick.equation}`;
    case "eq-delete":
      return `eq-delete ${pick.equation}`;
    case "hypothesis":
      return `hypothesis ${pick.equation} ${pick.side} with ${pick.hyp} ${pick.direction}${at(pick.pos)}`;
    case "hdelete": {
      const withPart = pick.hyp === undefined ? "" : ` with ${pick.hyp}`;
      const dirPart = pick.direction === undefined ? "" : ` ${pick.direction}`;
      return `hdelete ${pick.equation}${withPart}${dirPart}`;
    }
    case "alter-add":
      return `alter ${pick.equation} add ${assignments(pick.definitions)}`;
    case "alter-subst":
      return `alter ${pick.equation} subst ${assignments(pick.mapping)}`;
    case "alter-constraint":
      return `alter ${pick.equation} [${pick.constraint}]`;
    case "generalize":
      return `generalize ${pick.equation} ${pick.text}${pick.witness ? ` with ${pick.witness}` : ""}`;
    case "postulate":
      return `postulate ${pick.text}`;
    case "semiconstructor":
      return `semiconstructor ${pick.equation}`;
    case "expand":
      return `expand ${pick.equation} ${pick.side}${at(pick.pos)}`;
    case "disprove": {
      const inst = pick.instantiation;
      return `disprove ${pick.equation}${inst && inst.length ? ` with ${assignments(inst)}` : ""}`;
    }
    case "auto":
      return pick.budget === undefined ? "auto" : `auto ${pick.budget}`;
    case "command":
      return pick.text;
  }
}
