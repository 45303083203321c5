/* tslint:disable */
/* eslint-disable */

/**
 * Sampled closed-loop run; see [`demo::TrackingRun`] for the row layout.
 */
export class TrackingRun {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    rows(): Float64Array;
    readonly row_width: number;
    /**
     * `completed`, `singular_abort` or `integrator_failure`.
     */
    readonly status: string;
    readonly t_stop: number;
    readonly tracking_error: number;
}

export function controllability_sweep(n: number): Float64Array;

export function determinant_grid(alpha0: number, n: number): Float64Array;

export function track_circle(alpha0: number, heading: number, radius: number, rate: number, turns: number, samples: number): TrackingRun;

export function track_line(alpha0: number, heading: number, speed: number, duration: number, samples: number): TrackingRun;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_trackingrun_free: (a: number, b: number) => void;
    readonly controllability_sweep: (a: number) => [number, number, number, number];
    readonly determinant_grid: (a: number, b: number) => [number, number, number, number];
    readonly track_circle: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly track_line: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly trackingrun_row_width: (a: number) => number;
    readonly trackingrun_rows: (a: number) => [number, number];
    readonly trackingrun_status: (a: number) => [number, number];
    readonly trackingrun_t_stop: (a: number) => number;
    readonly trackingrun_tracking_error: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
