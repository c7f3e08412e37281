/* tslint:disable */
/* eslint-disable */

/**
 * Magnitude response of the bandpass, one-way and forward-backward, as an
 * SVG line plot in dB.
 */
export function filter_response(fs: number, low: number, high: number, order: number): string;

/**
 * Ranks `LABEL: value` pairs (comma, semicolon or newline separated) and
 * applies the elbow cut.
 */
export function rank_values(text: string, inclusive: boolean): string;

/**
 * Generates a small synthetic recording and runs the three-stage workflow
 * on it. `ictal` and `clinician` are channel ranges like `"LA2, LB1"`.
 */
export function synthetic_demo(ictal: string, clinician: string, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly filter_response: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly rank_values: (a: number, b: number, c: number) => [number, number, number, number];
    readonly synthetic_demo: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
