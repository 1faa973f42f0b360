/** Wire types for the prover's newline-delimited JSON session protocol. */

export interface SubtermRef {
  pos: string;
  text: string;
}

export interface EquationView {
  id: number;
  lhs: string;
  rhs: string;
  constraint: string;
  leftBound: string | null;
  rightBound: string | null;
  leftMark: boolean;
  rightMark: boolean;
  rendered: string;
  renderedFull: string;
  subterms: { left: SubtermRef[]; right: SubtermRef[] };
}

export interface StatePayload {
  equations: EquationView[];
  hypotheses: string[];
  ledger: string[];
  complete: boolean;
  qed: boolean;
  refuted: boolean;
  finished: boolean;
  renderedEquations: string;
  renderedEquationsFull: string;
  transcript?: string[];
}

export interface SimplifyInstance {
  side: "left" | "right";
  rule: string;
  pos: string;
}

export interface HypothesisInstance {
  side: "left" | "right";
  hyp: number;
  direction: "lr" | "rl";
  pos: string;
}

export interface Applicability {
  simplify: SimplifyInstance[];
  hypothesis: HypothesisInstance[];
  delete: boolean;
  eqDelete: boolean;
  hdelete: boolean;
}

export interface Hello {
  protocol: number;
  system: string[];
  state: StatePayload;
}

export interface Request {
  id: number;
  command: string;
}

export interface Response {
  id: number;
  protocol: number;
  ok: boolean;
  output?: string;
  error?: { code: string; message: string };
  quit?: boolean;
  state: StatePayload;
  applicability?: Applicability;
}

export function isResponse(value: unknown): value is Response {
  if (typeof value !== "object" || value === null) return false;
  const record = value as Record<string, unknown>;
  return typeof record.id === "number" && typeof record.ok === "boolean" && "state" in record;
}

export function isHello(value: unknown): value is Hello {
  if (typeof value !== "object" || value === null) return false;
  const record = value as Record<string, unknown>;
  return typeof record.protocol === "number" && "state" in record && !("id" in record);
}
