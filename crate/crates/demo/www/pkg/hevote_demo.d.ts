/* tslint:disable */
/* eslint-disable */

/**
 * Runs one argmax window through the exact backend. `values` is a comma
 * separated list; `method` is `secpe` or `phoenix`.
 */
export function argmax_window(values: string, d_min: number, d_max: number, method: string): string;

/**
 * Modeled argmax cost of both methods for `n = 2, 4, ..., 2^max_log_n`
 * (at most 1024) under the default cost model, with `cost_rot` and
 * `cost_bootstrap` overridable from the page.
 */
export function cost_curve(max_log_n: number, cost_rot: number, cost_bootstrap: number): string;

/**
 * Samples `f^d_f(g^d_g(x))` at `points` evenly spaced inputs on `[lo, hi]`.
 */
export function sign_curve(alpha: number, d_f: number, d_g: number, degree: number, lo: number, hi: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly argmax_window: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly cost_curve: (a: number, b: number, c: number) => [number, number];
    readonly sign_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
