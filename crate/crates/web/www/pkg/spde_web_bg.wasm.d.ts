/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_averages_free: (a: number, b: number) => void;
export const __wbg_get_averages_mean: (a: number) => [number, number];
export const __wbg_get_averages_scales: (a: number) => [number, number];
export const __wbg_get_averages_se: (a: number) => [number, number];
export const __wbg_get_averages_t: (a: number) => [number, number];
export const __wbg_get_profiles_t: (a: number) => [number, number];
export const __wbg_get_profiles_values: (a: number) => [number, number];
export const __wbg_get_profiles_x: (a: number) => [number, number];
export const __wbg_get_rate_dt: (a: number) => [number, number];
export const __wbg_get_rate_err: (a: number) => [number, number];
export const __wbg_get_rate_se: (a: number) => [number, number];
export const __wbg_get_rate_slope: (a: number) => number;
export const __wbg_profiles_free: (a: number, b: number) => void;
export const __wbg_rate_free: (a: number, b: number) => void;
export const __wbg_set_averages_mean: (a: number, b: number, c: number) => void;
export const __wbg_set_averages_scales: (a: number, b: number, c: number) => void;
export const __wbg_set_averages_se: (a: number, b: number, c: number) => void;
export const __wbg_set_averages_t: (a: number, b: number, c: number) => void;
export const __wbg_set_profiles_t: (a: number, b: number, c: number) => void;
export const __wbg_set_profiles_values: (a: number, b: number, c: number) => void;
export const __wbg_set_profiles_x: (a: number, b: number, c: number) => void;
export const __wbg_set_rate_dt: (a: number, b: number, c: number) => void;
export const __wbg_set_rate_err: (a: number, b: number, c: number) => void;
export const __wbg_set_rate_se: (a: number, b: number, c: number) => void;
export const __wbg_set_rate_slope: (a: number, b: number) => void;
export const ergodicAverages: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: bigint) => [number, number, number];
export const profiles: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number];
export const weakRate: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
