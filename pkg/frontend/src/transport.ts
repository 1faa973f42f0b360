/** Transports carry newline-delimited JSON lines to and from the prover. */

export interface Transport {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

/** Reassembles complete lines from stream chunks. */
export class LineBuffer {
  private pending = "";

  constructor(private readonly emit: (line: string) => void) {}

  push(chunk: string): void {
    this.pending += chunk;
    let index = this.pending.indexOf("\n");
    while (index >= 0) {
      const line = this.pending.slice(0, index).trim();
      this.pending = this.pending.slice(index + 1);
      if (line.length > 0) this.emit(line);
      index = this.pending.indexOf("\n");
    }
  }
}

/** TCP transport for node-side clients and tests (the prover's --serve --port). */
export async function connectTcp(host: string, port: number): Promise<Transport> {
  const net = await import("net");
  const socket = net.createConnection({ host, port });
  await new Promise<void>((resolve, reject) => {
    socket.once("connect", () => resolve());
    socket.once("error", (err: Error) => reject(err));
  });
  socket.setEncoding("utf-8");
  let lineHandler: (line: string) => void = () => undefined;
  let closeHandler: () => void = () => undefined;
  const buffer = new LineBuffer((line) => lineHandler(line));
  socket.on("data", (chunk: string) => buffer.push(chunk));
  socket.on("close", () => closeHandler());
  return {
    send(line: string): void {
      socket.write(line + "\n");
    },
    onLine(handler: (line: string) => void): void {
      lineHandler = handler;
    },
    onClose(handler: () => void): void {
      closeHandler = handler;
    },
    close(): void {
      socket.end();
    },
  };
}
