//! C ABI for the visnir toolkit: opaque pipeline handles, dataset
//! synthesis, inference on raw float buffers and the image quality metrics.
//!
//! Conventions:
//! * all functions return [`VnStatus`] (or null on handle constructors);
//!   `vn_last_error` yields a message for the calling thread's last failure
//! * image buffers are row-major, channel-interleaved f32 in [0,1]
//! * strings are NUL-terminated UTF-8

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use visnir::dataset::{synthesize_dataset, SynthesisConfig};
use visnir::error::Error;
use visnir::image::{ColorSpace, Raster};
use visnir::metrics::{colourfulness, psnr, ssim_metric, MetricDomain};
use visnir::nets::{load_checkpoint, raster_to_tensor, tensor_to_raster, Pipeline};
use visnir::sensor::NoiseMode;

/// Status codes mirroring the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VnStatus {
    Ok = 0,
    /// Invalid arguments or configuration.
    InvalidArgument = 2,
    /// Missing or malformed data.
    DataError = 3,
    /// Non-finite values.
    NumericalError = 4,
    /// Panic caught at the FFI boundary.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> VnStatus {
    match err.exit_code() {
        2 => VnStatus::InvalidArgument,
        3 => VnStatus::DataError,
        4 => VnStatus::NumericalError,
        _ => VnStatus::Internal,
    }
}

fn guard<F: FnOnce() -> VnStatus>(f: F) -> VnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside visnir");
            VnStatus::Internal
        }
    }
}

/// Message of the calling thread's most recent failure. Valid until the
/// next failing visnir call on this thread.
#[no_mangle]
pub extern "C" fn vn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static library version string.
#[no_mangle]
pub extern "C" fn vn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque trained-pipeline handle.
pub struct VnPipeline {
    inner: Pipeline<f32>,
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, VnStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return Err(VnStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{name} is not valid UTF-8"));
        VnStatus::InvalidArgument
    })
}

/// Load a checkpoint written by `visnir train` (path prefix without the
/// .json/.bin extension). Returns null on failure; see `vn_last_error`.
///
/// # Safety
/// `ckpt_prefix` must be a valid NUL-terminated string pointer.
#[no_mangle]
pub unsafe extern "C" fn vn_pipeline_load(ckpt_prefix: *const c_char) -> *mut VnPipeline {
    let result = catch_unwind(AssertUnwindSafe(|| {
        let path = match cstr_arg(ckpt_prefix, "ckpt_prefix") {
            Ok(p) => p,
            Err(_) => return std::ptr::null_mut(),
        };
        match load_checkpoint(Path::new(path)) {
            Ok(p) => Box::into_raw(Box::new(VnPipeline { inner: p })),
            Err(e) => {
                set_error(&e.to_string());
                std::ptr::null_mut()
            }
        }
    }));
    result.unwrap_or_else(|_| {
        set_error("panic inside visnir");
        std::ptr::null_mut()
    })
}

/// Release a pipeline handle. Null is a no-op.
///
/// # Safety
/// `pipeline` must be a pointer returned by [`vn_pipeline_load`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn vn_pipeline_free(pipeline: *mut VnPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// Spatial divisor the pipeline requires: input height and width must be
/// multiples of this. Returns 0 for a null handle.
///
/// # Safety
/// `pipeline` must be a live handle from [`vn_pipeline_load`] or null.
#[no_mangle]
pub unsafe extern "C" fn vn_pipeline_divisor(pipeline: *const VnPipeline) -> u32 {
    if pipeline.is_null() {
        return 0;
    }
    1u32 << (*pipeline).inner.config.depth
}

/// Run the pipeline on a mixed capture. `mixed` and `out_rgb` are
/// `height*width*3` floats; the output is the final restored RGB image.
///
/// # Safety
/// `pipeline` must be a live handle; `mixed` and `out_rgb` must point to
/// `height*width*3` readable/writable floats.
#[no_mangle]
pub unsafe extern "C" fn vn_pipeline_infer(
    pipeline: *const VnPipeline,
    mixed: *const f32,
    height: usize,
    width: usize,
    out_rgb: *mut f32,
) -> VnStatus {
    guard(|| {
        if pipeline.is_null() || mixed.is_null() || out_rgb.is_null() {
            set_error("null pointer argument");
            return VnStatus::InvalidArgument;
        }
        let pipe = &(*pipeline).inner;
        let n = height * width * 3;
        let data: Vec<f32> = std::slice::from_raw_parts(mixed, n)
            .iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        let raster = match Raster::new(height, width, 3, ColorSpace::Rgb, data) {
            Ok(r) => r,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let div = 1usize << pipe.config.depth;
        if height % div != 0 || width % div != 0 {
            set_error(&format!(
                "input {height}x{width} must be divisible by {div}"
            ));
            return VnStatus::InvalidArgument;
        }
        let out = match pipe.forward(&raster_to_tensor::<f32>(&raster)) {
            Ok(o) => o,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let final_rgb = match tensor_to_raster(&out.final_rgb, ColorSpace::Rgb) {
            Ok(r) => r,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        std::slice::from_raw_parts_mut(out_rgb, n).copy_from_slice(final_rgb.data());
        VnStatus::Ok
    })
}

/// Synthesize an aligned MIX/VIS/NIR dataset under `out_dir`.
///
/// # Safety
/// `out_dir` must be a valid NUL-terminated string pointer.
#[no_mangle]
pub unsafe extern "C" fn vn_synthesize_dataset(
    out_dir: *const c_char,
    scenes: usize,
    height: usize,
    width: usize,
    seed: u64,
    noise_on: bool,
) -> VnStatus {
    guard(|| {
        let dir = match cstr_arg(out_dir, "out_dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        let mode = if noise_on {
            NoiseMode::PoissonGaussian
        } else {
            NoiseMode::Off
        };
        let cfg = SynthesisConfig::new(scenes, height, width, seed, mode);
        match synthesize_dataset(&cfg, Path::new(dir)) {
            Ok(_) => VnStatus::Ok,
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

unsafe fn raster_arg(
    ptr: *const f32,
    height: usize,
    width: usize,
    channels: usize,
) -> Result<Raster, VnStatus> {
    if ptr.is_null() {
        set_error("null image pointer");
        return Err(VnStatus::InvalidArgument);
    }
    let data: Vec<f32> = std::slice::from_raw_parts(ptr, height * width * channels)
        .iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    let cs = if channels == 1 {
        ColorSpace::Gray
    } else {
        ColorSpace::Rgb
    };
    Raster::new(height, width, channels, cs, data).map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

/// PSNR in dB between two images of `len = height*width*channels` floats.
/// Identical images yield +INFINITY.
///
/// # Safety
/// `a`, `b` must point to `height*width*channels` floats; `out_db` to one
/// writable double.
#[no_mangle]
pub unsafe extern "C" fn vn_psnr(
    a: *const f32,
    b: *const f32,
    height: usize,
    width: usize,
    channels: usize,
    out_db: *mut f64,
) -> VnStatus {
    guard(|| {
        if out_db.is_null() {
            set_error("out_db is null");
            return VnStatus::InvalidArgument;
        }
        let ra = match raster_arg(a, height, width, channels) {
            Ok(r) => r,
            Err(s) => return s,
        };
        let rb = match raster_arg(b, height, width, channels) {
            Ok(r) => r,
            Err(s) => return s,
        };
        match psnr(&ra, &rb, 1.0, MetricDomain::Float) {
            Ok(v) => {
                *out_db = v.unwrap_or(f64::INFINITY);
                VnStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Mean local SSIM between two images (11x11 Gaussian window).
///
/// # Safety
/// Pointer contracts as in [`vn_psnr`].
#[no_mangle]
pub unsafe extern "C" fn vn_ssim(
    a: *const f32,
    b: *const f32,
    height: usize,
    width: usize,
    channels: usize,
    out_ssim: *mut f64,
) -> VnStatus {
    guard(|| {
        if out_ssim.is_null() {
            set_error("out_ssim is null");
            return VnStatus::InvalidArgument;
        }
        let ra = match raster_arg(a, height, width, channels) {
            Ok(r) => r,
            Err(s) => return s,
        };
        let rb = match raster_arg(b, height, width, channels) {
            Ok(r) => r,
            Err(s) => return s,
        };
        match ssim_metric(&ra, &rb, MetricDomain::Float) {
            Ok(v) => {
                *out_ssim = v;
                VnStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Hasler-Suesstrunk colourfulness of an RGB image.
///
/// # Safety
/// `rgb` must point to `height*width*3` floats; `out_colour` to one
/// writable double.
#[no_mangle]
pub unsafe extern "C" fn vn_colourfulness(
    rgb: *const f32,
    height: usize,
    width: usize,
    out_colour: *mut f64,
) -> VnStatus {
    guard(|| {
        if out_colour.is_null() {
            set_error("out_colour is null");
            return VnStatus::InvalidArgument;
        }
        let r = match raster_arg(rgb, height, width, 3) {
            Ok(r) => r,
            Err(s) => return s,
        };
        match colourfulness(&r, MetricDomain::Float) {
            Ok(v) => {
                *out_colour = v;
                VnStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}
