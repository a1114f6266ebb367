/**
 * Point and maximum-likelihood estimates from `k` excitations in `n` shots.
 */
export class EstimateView {
    static __wrap(ptr) {
        const obj = Object.create(EstimateView.prototype);
        obj.__wbg_ptr = ptr;
        EstimateViewFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        EstimateViewFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_estimateview_free(ptr, 0);
    }
    /**
     * @returns {boolean}
     */
    get mle_boundary() {
        const ret = wasm.__wbg_get_estimateview_mle_boundary(this.__wbg_ptr);
        return ret !== 0;
    }
    /**
     * @returns {number}
     */
    get mle_nbar() {
        const ret = wasm.__wbg_get_estimateview_mle_nbar(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mle_std() {
        const ret = wasm.__wbg_get_estimateview_mle_std(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {boolean}
     */
    get point_clipped() {
        const ret = wasm.__wbg_get_estimateview_point_clipped(this.__wbg_ptr);
        return ret !== 0;
    }
    /**
     * @returns {number}
     */
    get point_nbar() {
        const ret = wasm.__wbg_get_estimateview_point_nbar(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get point_std() {
        const ret = wasm.__wbg_get_estimateview_point_std(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {boolean} arg0
     */
    set mle_boundary(arg0) {
        wasm.__wbg_set_estimateview_mle_boundary(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mle_nbar(arg0) {
        wasm.__wbg_set_estimateview_mle_nbar(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mle_std(arg0) {
        wasm.__wbg_set_estimateview_mle_std(this.__wbg_ptr, arg0);
    }
    /**
     * @param {boolean} arg0
     */
    set point_clipped(arg0) {
        wasm.__wbg_set_estimateview_point_clipped(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set point_nbar(arg0) {
        wasm.__wbg_set_estimateview_point_nbar(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set point_std(arg0) {
        wasm.__wbg_set_estimateview_point_std(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) EstimateView.prototype[Symbol.dispose] = EstimateView.prototype.free;

/**
 * Per-shot Fisher information against probe time, the Cramér-Rao bound
 * for `n_shots` repetitions and the optimal probe point.
 */
export class FisherView {
    static __wrap(ptr) {
        const obj = Object.create(FisherView.prototype);
        obj.__wbg_ptr = ptr;
        FisherViewFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        FisherViewFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_fisherview_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get crb_at_optimum() {
        const ret = wasm.fisherview_crb_at_optimum(this.__wbg_ptr);
        return ret;
    }
    /**
     * `n̄` standard deviation bound; infinite where the information vanishes.
     * @returns {Float64Array}
     */
    get crb() {
        const ret = wasm.fisherview_crb(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get fisher() {
        const ret = wasm.fisherview_fisher(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get pe_star() {
        const ret = wasm.fisherview_pe_star(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get t_star_us() {
        const ret = wasm.fisherview_t_star_us(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float64Array}
     */
    get times_us() {
        const ret = wasm.fisherview_times_us(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) FisherView.prototype[Symbol.dispose] = FisherView.prototype.free;

/**
 * Excited population against time from the numeric displacement dynamics
 * and the two closed forms.
 */
export class PopulationCurves {
    static __wrap(ptr) {
        const obj = Object.create(PopulationCurves.prototype);
        obj.__wbg_ptr = ptr;
        PopulationCurvesFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        PopulationCurvesFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_populationcurves_free(ptr, 0);
    }
    /**
     * @returns {Float64Array}
     */
    get extended() {
        const ret = wasm.populationcurves_extended(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get numeric() {
        const ret = wasm.populationcurves_numeric(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get reduced() {
        const ret = wasm.populationcurves_reduced(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get times_us() {
        const ret = wasm.populationcurves_times_us(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) PopulationCurves.prototype[Symbol.dispose] = PopulationCurves.prototype.free;

/**
 * @param {number} k
 * @param {number} n
 * @param {number} eta
 * @param {number} omega_khz
 * @param {number} t_us
 * @param {number} max_nbar
 * @returns {EstimateView}
 */
export function estimate(k, n, eta, omega_khz, t_us, max_nbar) {
    const ret = wasm.estimate(k, n, eta, omega_khz, t_us, max_nbar);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return EstimateView.__wrap(ret[0]);
}

/**
 * @param {number} nbar
 * @param {number} eta
 * @param {number} omega_khz
 * @param {number} t_max_us
 * @param {number} points
 * @param {number} n_shots
 * @returns {FisherView}
 */
export function fisherCurve(nbar, eta, omega_khz, t_max_us, points, n_shots) {
    const ret = wasm.fisherCurve(nbar, eta, omega_khz, t_max_us, points, n_shots);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return FisherView.__wrap(ret[0]);
}

/**
 * @param {number} nbar
 * @param {number} eta
 * @param {number} omega_khz
 * @param {number} t_max_us
 * @param {number} points
 * @returns {PopulationCurves}
 */
export function populationCurves(nbar, eta, omega_khz, t_max_us, points) {
    const ret = wasm.populationCurves(nbar, eta, omega_khz, t_max_us, points);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return PopulationCurves.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./ionthermo_wasm_bg.js": import0,
    };
}

const EstimateViewFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_estimateview_free(ptr, 1));
const FisherViewFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_fisherview_free(ptr, 1));
const PopulationCurvesFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_populationcurves_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('ionthermo_wasm_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
