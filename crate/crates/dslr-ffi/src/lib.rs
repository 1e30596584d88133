//! C ABI for the accelerator model: opaque model handles, analytic cycle
//! queries, JSON report generation and a guarded digit-accurate layer
//! simulation. The header is generated into `include/dslr.h` at build time.
//!
//! Conventions: every function returns a [`DslrStatus`]; results come back
//! through out-pointers; strings returned by the library are freed with
//! [`dslr_string_free`] and models with [`dslr_model_free`].

use dslr_sim::baseline::baseline_cycles;
use dslr_sim::config::LayerConfig;
use dslr_sim::perf::{build_report, dslr_cycles_with_form, layer_ops, ReportParams};
use dslr_sim::sim::{estimated_mult_steps, reference_conv, run_layer_opts, SimOptions};
use dslr_sim::tensor::TensorFx;
use dslr_sim::zoo::{builtin, ConfigFile, NetworkDef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result codes of every entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DslrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    UnknownNetwork = 3,
    ParseError = 4,
    IndexOutOfRange = 5,
    TooLarge = 6,
    Internal = 7,
}

/// Opaque handle: a network plus the model parameters used for reports.
pub struct DslrModel {
    network: NetworkDef,
    params: ReportParams,
}

/// Layer dimensions for an ad-hoc simulation.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct DslrLayer {
    pub in_channels: u32,
    pub out_channels: u32,
    pub out_rows: u32,
    pub out_cols: u32,
    pub kernel: u32,
    pub stride: u32,
    pub padding: u32,
}

/// Outcome of a digit-accurate simulation.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct DslrSimResult {
    pub measured_cycles: u64,
    pub predicted_cycles: u64,
    pub per_pass_cycles: u64,
    pub matches_reference: bool,
}

/// Multiplier-step ceiling accepted by `dslr_simulate_layer`.
pub const DSLR_SIM_STEP_GUARD: u64 = 1 << 28;

fn guarded(f: impl FnOnce() -> DslrStatus) -> DslrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => DslrStatus::Internal,
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dslr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a model for a built-in network (alexnet, vgg16, resnet18) with
/// default tile geometry and hardware profiles.
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dslr_model_builtin(
    name: *const c_char,
    out: *mut *mut DslrModel,
) -> DslrStatus {
    guarded(|| {
        if out.is_null() {
            return DslrStatus::NullArgument;
        }
        let Some(name) = read_str(name) else {
            return DslrStatus::NullArgument;
        };
        match builtin(name) {
            Ok(network) => {
                let model = Box::new(DslrModel {
                    network,
                    params: ReportParams::default(),
                });
                *out = Box::into_raw(model);
                DslrStatus::Ok
            }
            Err(_) => DslrStatus::UnknownNetwork,
        }
    })
}

/// Create a model from a JSON configuration document (same schema as the
/// CLI's `--config` file).
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dslr_model_from_json(
    json: *const c_char,
    out: *mut *mut DslrModel,
) -> DslrStatus {
    guarded(|| {
        if out.is_null() {
            return DslrStatus::NullArgument;
        }
        let Some(json) = read_str(json) else {
            return DslrStatus::NullArgument;
        };
        let file: ConfigFile = match serde_json::from_str(json) {
            Ok(f) => f,
            Err(_) => return DslrStatus::ParseError,
        };
        if file.network.validate().is_err() || file.tile.validate().is_err() {
            return DslrStatus::InvalidArgument;
        }
        let hardware = file.hardware.unwrap_or_default();
        let defaults = ReportParams::default();
        let params = ReportParams {
            tile: file.tile,
            dslr_profile: hardware.dslr.unwrap_or(defaults.dslr_profile.clone()),
            baseline_profile: hardware.baseline.unwrap_or(defaults.baseline_profile.clone()),
            ..defaults
        };
        let model = Box::new(DslrModel {
            network: file.network,
            params,
        });
        *out = Box::into_raw(model);
        DslrStatus::Ok
    })
}

/// Release a model handle. Passing NULL is a no-op.
///
/// # Safety
/// `model` must have come from a `dslr_model_*` constructor and not have
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn dslr_model_free(model: *mut DslrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of layers in the model's network.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dslr_model_layer_count(
    model: *const DslrModel,
    out: *mut usize,
) -> DslrStatus {
    guarded(|| {
        let (Some(model), false) = (model.as_ref(), out.is_null()) else {
            return DslrStatus::NullArgument;
        };
        *out = model.network.layers.len();
        DslrStatus::Ok
    })
}

unsafe fn layer_query(
    model: *const DslrModel,
    layer_idx: usize,
    out: *mut u64,
    f: impl Fn(&DslrModel, &LayerConfig) -> u64,
) -> DslrStatus {
    let (Some(model), false) = (model.as_ref(), out.is_null()) else {
        return DslrStatus::NullArgument;
    };
    let Some(layer) = model.network.layers.get(layer_idx) else {
        return DslrStatus::IndexOutOfRange;
    };
    *out = f(model, layer);
    DslrStatus::Ok
}

/// Analytic cycle count of one layer on the left-to-right design.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dslr_model_cycles(
    model: *const DslrModel,
    layer_idx: usize,
    out: *mut u64,
) -> DslrStatus {
    guarded(|| {
        layer_query(model, layer_idx, out, |m, l| {
            dslr_cycles_with_form(l, &m.params.tile, m.params.tiles_form)
        })
    })
}

/// Analytic cycle count of one layer on the bit-serial baseline.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dslr_model_baseline_cycles(
    model: *const DslrModel,
    layer_idx: usize,
    out: *mut u64,
) -> DslrStatus {
    guarded(|| {
        layer_query(model, layer_idx, out, |m, l| {
            baseline_cycles(l, &m.params.tile, &m.params.baseline_cfg)
        })
    })
}

/// Operation count (2*M*N*R*C*K*K) of one layer.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dslr_model_layer_ops(
    model: *const DslrModel,
    layer_idx: usize,
    out: *mut u64,
) -> DslrStatus {
    guarded(|| layer_query(model, layer_idx, out, |_, l| layer_ops(l)))
}

/// Full performance report as a JSON document; free with
/// [`dslr_string_free`].
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dslr_model_report_json(
    model: *const DslrModel,
    include_baseline: bool,
    out: *mut *mut c_char,
) -> DslrStatus {
    guarded(|| {
        let (Some(model), false) = (model.as_ref(), out.is_null()) else {
            return DslrStatus::NullArgument;
        };
        let report = match build_report(&model.network, &model.params, include_baseline) {
            Ok(r) => r,
            Err(_) => return DslrStatus::InvalidArgument,
        };
        let json = match serde_json::to_string_pretty(&report) {
            Ok(j) => j,
            Err(_) => return DslrStatus::Internal,
        };
        match CString::new(json) {
            Ok(s) => {
                *out = s.into_raw();
                DslrStatus::Ok
            }
            Err(_) => DslrStatus::Internal,
        }
    })
}

/// Free a string returned by this library. Passing NULL is a no-op.
///
/// # Safety
/// `s` must have been returned by this library and not freed already.
#[no_mangle]
pub unsafe extern "C" fn dslr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Run a digit-accurate simulation of one ad-hoc layer against the golden
/// model, with tensors generated from `seed`. Uses the default tile
/// geometry; refuses runs beyond [`DSLR_SIM_STEP_GUARD`] multiplier steps.
///
/// # Safety
/// `layer` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dslr_simulate_layer(
    layer: *const DslrLayer,
    seed: u64,
    out: *mut DslrSimResult,
) -> DslrStatus {
    guarded(|| {
        let (Some(spec), false) = (layer.as_ref(), out.is_null()) else {
            return DslrStatus::NullArgument;
        };
        let layer = LayerConfig::new(
            "ffi",
            spec.in_channels as usize,
            spec.out_channels as usize,
            spec.out_rows as usize,
            spec.out_cols as usize,
            spec.kernel as usize,
        )
        .with_geometry(spec.stride as usize, spec.padding as usize);
        let tile = dslr_sim::TileConfig::default();
        if layer.validate().is_err() {
            return DslrStatus::InvalidArgument;
        }
        if estimated_mult_steps(&layer, &tile) > DSLR_SIM_STEP_GUARD as u128 {
            return DslrStatus::TooLarge;
        }
        let (h, w) = layer.input_size();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = TensorFx::random(&[layer.n, h, w], tile.p_i, &mut rng);
        let weights = TensorFx::random(&[layer.m, layer.n, layer.k, layer.k], tile.p_i, &mut rng);
        let sim = match run_layer_opts(&layer, &tile, &inputs, &weights, &SimOptions::default()) {
            Ok(s) => s,
            Err(_) => return DslrStatus::InvalidArgument,
        };
        let golden = match reference_conv(&layer, &tile, &inputs, &weights) {
            Ok(g) => g,
            Err(_) => return DslrStatus::Internal,
        };
        *out = DslrSimResult {
            measured_cycles: sim.measured_cycles,
            predicted_cycles: dslr_cycles_with_form(
                &layer,
                &tile,
                dslr_sim::TilesForm::Product,
            ),
            per_pass_cycles: sim.per_pass_cycles,
            matches_reference: sim.outputs == golden,
        };
        DslrStatus::Ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn version_is_nul_terminated() {
        let v = dslr_version();
        let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
        assert_eq!(s, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn builtin_lifecycle_and_cycles() {
        unsafe {
            let mut model: *mut DslrModel = ptr::null_mut();
            let name = CString::new("alexnet").unwrap();
            assert_eq!(dslr_model_builtin(name.as_ptr(), &mut model), DslrStatus::Ok);
            let mut count = 0usize;
            assert_eq!(dslr_model_layer_count(model, &mut count), DslrStatus::Ok);
            assert_eq!(count, 5);
            let mut cycles = 0u64;
            assert_eq!(dslr_model_cycles(model, 0, &mut cycles), DslrStatus::Ok);
            assert_eq!(cycles, 29_376);
            assert_eq!(dslr_model_baseline_cycles(model, 0, &mut cycles), DslrStatus::Ok);
            assert_eq!(cycles, 42_048);
            let mut ops = 0u64;
            assert_eq!(dslr_model_layer_ops(model, 0, &mut ops), DslrStatus::Ok);
            assert_eq!(ops, 210_830_400);
            assert_eq!(
                dslr_model_cycles(model, 99, &mut cycles),
                DslrStatus::IndexOutOfRange
            );
            dslr_model_free(model);
        }
    }

    #[test]
    fn unknown_network_and_null_args() {
        unsafe {
            let mut model: *mut DslrModel = ptr::null_mut();
            let name = CString::new("lenet").unwrap();
            assert_eq!(
                dslr_model_builtin(name.as_ptr(), &mut model),
                DslrStatus::UnknownNetwork
            );
            assert_eq!(
                dslr_model_builtin(ptr::null(), &mut model),
                DslrStatus::NullArgument
            );
            assert_eq!(
                dslr_model_builtin(name.as_ptr(), ptr::null_mut()),
                DslrStatus::NullArgument
            );
        }
    }

    #[test]
    fn report_json_roundtrips() {
        unsafe {
            let mut model: *mut DslrModel = ptr::null_mut();
            let name = CString::new("alexnet").unwrap();
            assert_eq!(dslr_model_builtin(name.as_ptr(), &mut model), DslrStatus::Ok);
            let mut json: *mut c_char = ptr::null_mut();
            assert_eq!(dslr_model_report_json(model, true, &mut json), DslrStatus::Ok);
            let text = CStr::from_ptr(json).to_str().unwrap();
            let parsed: serde_json::Value = serde_json::from_str(text).unwrap();
            let total = parsed["dslr"]["aggregate"]["total_cycles"].as_u64().unwrap();
            assert_eq!(total, 471_744);
            dslr_string_free(json);
            dslr_model_free(model);
        }
    }

    #[test]
    fn model_from_json_config() {
        unsafe {
            let cfg = CString::new(
                r#"{"network": {"name": "tiny",
                    "layers": [{"name": "c1", "n": 16, "m": 8, "r": 8, "c": 8, "k": 3}]}}"#,
            )
            .unwrap();
            let mut model: *mut DslrModel = ptr::null_mut();
            assert_eq!(dslr_model_from_json(cfg.as_ptr(), &mut model), DslrStatus::Ok);
            let mut cycles = 0u64;
            assert_eq!(dslr_model_cycles(model, 0, &mut cycles), DslrStatus::Ok);
            assert_eq!(cycles, 42);
            dslr_model_free(model);

            let broken = CString::new("{ not json").unwrap();
            assert_eq!(
                dslr_model_from_json(broken.as_ptr(), &mut model),
                DslrStatus::ParseError
            );
        }
    }

    #[test]
    fn simulate_small_layer() {
        unsafe {
            let spec = DslrLayer {
                in_channels: 4,
                out_channels: 2,
                out_rows: 4,
                out_cols: 4,
                kernel: 3,
                stride: 1,
                padding: 1,
            };
            let mut result = DslrSimResult {
                measured_cycles: 0,
                predicted_cycles: 0,
                per_pass_cycles: 0,
                matches_reference: false,
            };
            assert_eq!(dslr_simulate_layer(&spec, 7, &mut result), DslrStatus::Ok);
            assert!(result.matches_reference);
            assert_eq!(result.measured_cycles, result.predicted_cycles);
        }
    }

    #[test]
    fn simulate_guard_refuses_huge_layers() {
        unsafe {
            let spec = DslrLayer {
                in_channels: 512,
                out_channels: 512,
                out_rows: 224,
                out_cols: 224,
                kernel: 3,
                stride: 1,
                padding: 1,
            };
            let mut result = DslrSimResult {
                measured_cycles: 0,
                predicted_cycles: 0,
                per_pass_cycles: 0,
                matches_reference: false,
            };
            assert_eq!(dslr_simulate_layer(&spec, 0, &mut result), DslrStatus::TooLarge);
        }
    }

    #[test]
    fn generated_header_exists() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dslr.h");
        let text = std::fs::read_to_string(header).expect("header generated at build time");
        assert!(text.contains("dslr_model_builtin"));
        assert!(text.contains("DslrStatus"));
        assert!(text.contains("dslr_simulate_layer"));
    }
}
