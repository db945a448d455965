/* tslint:disable */
/* eslint-disable */

export function anchorColor(k: number): Uint8Array;

export function assignmentField(anchors: Float64Array, alpha: number, width: number, height: number, extent: number): Uint8Array;

export function kmeansAnchors(xy: Float64Array, k: number, seed: number): Float64Array;

export function poolCompare(xy: Float64Array, anchors: Float64Array, alpha: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly anchorColor: (a: number) => [number, number];
    readonly assignmentField: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly kmeansAnchors: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly poolCompare: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
