/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_trackingrun_free: (a: number, b: number) => void;
export const controllability_sweep: (a: number) => [number, number, number, number];
export const determinant_grid: (a: number, b: number) => [number, number, number, number];
export const track_circle: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const track_line: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const trackingrun_row_width: (a: number) => number;
export const trackingrun_rows: (a: number) => [number, number];
export const trackingrun_status: (a: number) => [number, number];
export const trackingrun_t_stop: (a: number) => number;
export const trackingrun_tracking_error: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
