/* tslint:disable */
/* eslint-disable */

/**
 * Mean of one functional along time, row-major per initial value:
 * `mean[c * t.len() + i]`.
 */
export class Averages {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    mean: Float64Array;
    scales: Float64Array;
    se: Float64Array;
    t: Float64Array;
}

/**
 * States on a grid, row-major: `values[i * x.len() + p]` is `u(t_i, x_p)`.
 */
export class Profiles {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    t: Float64Array;
    values: Float64Array;
    x: Float64Array;
}

export class Rate {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    dt: Float64Array;
    err: Float64Array;
    se: Float64Array;
    /**
     * NaN when the fit was refused.
     */
    slope: number;
}

export function ergodicAverages(lambda_f: number, kappa: number, modes: number, dt: number, horizon: number, samples: number, functional: string, seed: bigint): Averages;

export function profiles(lambda_f: number, kappa: number, modes: number, dt: number, horizon: number, stride: number, seed: bigint): Profiles;

export function weakRate(lambda_f: number, kappa: number, modes: number, samples: number, functional: string, seed: bigint): Rate;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_averages_free: (a: number, b: number) => void;
    readonly __wbg_get_averages_mean: (a: number) => [number, number];
    readonly __wbg_get_averages_scales: (a: number) => [number, number];
    readonly __wbg_get_averages_se: (a: number) => [number, number];
    readonly __wbg_get_averages_t: (a: number) => [number, number];
    readonly __wbg_get_profiles_t: (a: number) => [number, number];
    readonly __wbg_get_profiles_values: (a: number) => [number, number];
    readonly __wbg_get_profiles_x: (a: number) => [number, number];
    readonly __wbg_get_rate_dt: (a: number) => [number, number];
    readonly __wbg_get_rate_err: (a: number) => [number, number];
    readonly __wbg_get_rate_se: (a: number) => [number, number];
    readonly __wbg_get_rate_slope: (a: number) => number;
    readonly __wbg_profiles_free: (a: number, b: number) => void;
    readonly __wbg_rate_free: (a: number, b: number) => void;
    readonly __wbg_set_averages_mean: (a: number, b: number, c: number) => void;
    readonly __wbg_set_averages_scales: (a: number, b: number, c: number) => void;
    readonly __wbg_set_averages_se: (a: number, b: number, c: number) => void;
    readonly __wbg_set_averages_t: (a: number, b: number, c: number) => void;
    readonly __wbg_set_profiles_t: (a: number, b: number, c: number) => void;
    readonly __wbg_set_profiles_values: (a: number, b: number, c: number) => void;
    readonly __wbg_set_profiles_x: (a: number, b: number, c: number) => void;
    readonly __wbg_set_rate_dt: (a: number, b: number, c: number) => void;
    readonly __wbg_set_rate_err: (a: number, b: number, c: number) => void;
    readonly __wbg_set_rate_se: (a: number, b: number, c: number) => void;
    readonly __wbg_set_rate_slope: (a: number, b: number) => void;
    readonly ergodicAverages: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: bigint) => [number, number, number];
    readonly profiles: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number];
    readonly weakRate: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
