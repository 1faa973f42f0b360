/** The client session: one transport, at most one in-flight request. */

import {
  Applicability,
  Hello,
  Response,
  StatePayload,
  isHello,
  isResponse,
} from "./protocol.js";
import { Pick, compilePick } from "./picks.js";
import { Transport } from "./transport.js";

export class ProtocolError extends Error {}

interface Waiter {
  id: number;
  resolve: (response: Response) => void;
  reject: (error: Error) => void;
}

export class ClientSession {
  private nextId = 1;
  private waiter: Waiter | null = null;
  private queue: Array<() => void> = [];
  private closed = false;
  /** Every command text this session sent, in order (the emitted script). */
  readonly sentCommands: string[] = [];
  state: StatePayload;
  readonly protocolVersion: number;
  readonly systemSymbols: string[];

  private constructor(private readonly transport: Transport, hello: Hello) {
    this.state = hello.state;
    this.protocolVersion = hello.protocol;
    this.systemSymbols = hello.system;
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => this.handleClose());
  }

  /** Handshake: the prover sends a hello record with the initial state. */
  static async connect(transport: Transport): Promise<ClientSession> {
    const hello = await new Promise<Hello>((resolve, reject) => {
      transport.onLine((line) => {
        try {
          const parsed: unknown = JSON.parse(line);
          if (!isHello(parsed)) {
            reject(new ProtocolError("expected a hello record"));
            return;
          }
          if (parsed.protocol !== 1) {
            reject(new ProtocolError(`unsupported protocol version ${parsed.protocol}`));
            return;
          }
          resolve(parsed);
        } catch (err) {
          reject(err instanceof Error ? err : new ProtocolError(String(err)));
        }
      });
      transport.onClose(() => reject(new ProtocolError("connection closed during handshake")));
    });
    return new ClientSession(transport, hello);
  }

  private handleLine(line: string): void {
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch {
      return;
    }
    if (!isResponse(parsed)) return;
    const waiter = this.waiter;
    if (waiter === null || parsed.id !== waiter.id) {
      // single in-flight request: anything else is a protocol violation
      if (waiter !== null) waiter.reject(new ProtocolError(`response id ${parsed.id} out of order`));
      return;
    }
    this.waiter = null;
    // the view is a pure function of the last full-state response
    this.state = parsed.state;
    waiter.resolve(parsed);
    const next = this.queue.shift();
    if (next) next();
  }

  private handleClose(): void {
    this.closed = true;
    if (this.waiter) {
      this.waiter.reject(new ProtocolError("connection closed"));
      this.waiter = null;
    }
  }

  private request(command: string): Promise<Response> {
    if (this.closed) return Promise.reject(new ProtocolError("session is closed"));
    return new Promise<Response>((resolve, reject) => {
      const fire = () => {
        const id = this.nextId++;
        this.waiter = { id, resolve, reject };
        this.transport.send(JSON.stringify({ id, command }));
      };
      if (this.waiter === null) fire();
      else this.queue.push(fire);
    });
  }

  /** Submit raw command text or a structured pick. */
  async submit(command: string | Pick): Promise<Response> {
    const text = typeof command === "string" ? command : compilePick(command);
    const response = await this.request(text);
    if (response.ok && !text.startsWith(":")) this.sentCommands.push(text);
    return response;
  }

  /** Server-side applicability for one equation (keeps the client logic-free). */
  async applicability(equation: number): Promise<Applicability> {
    const response = await this.request(`:applicable ${equation}`);
    if (!response.ok || !response.applicability) {
      throw new ProtocolError(response.error?.message ?? "applicability unavailable");
    }
    return response.applicability;
  }

  async quit(): Promise<void> {
    try {
      await this.request(":quit");
    } finally {
      this.transport.close();
    }
  }
}
