export * from "./protocol.js";
export * from "./transport.js";
export * from "./picks.js";
export * from "./client.js";
export * from "./view.js";
