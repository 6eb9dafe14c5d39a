//! C ABI over the gigastore toolkit.
//!
//! Every fallible function returns a [`GsStatus`]; on failure a message is
//! available from [`gs_last_error_message`] on the same thread. Objects are
//! handed out as opaque pointers and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gigastore::degrade::{age_disk, DamageScenario, GrayLevels};
use gigastore::layout::{build_layout, render_mask, DiskLayout, LayoutError, LayoutParams, Manifest, MaskBitmap};
use gigastore::optics::{IndexTable, MediumDesign, StackPair};
use gigastore::qrcodec::{qr_decode, qr_encode, BitMatrix, EcLevel, QrSymbol, Version};
use gigastore::readout::{read_disk, ReadMode, ReadOptions};
use gigastore::retention::{self, RetentionError, TestPlan};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Overflow = 4,
    CapacityExceeded = 5,
    DecodeFailed = 6,
    BufferTooSmall = 7,
    Io = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsEcLevel {
    L = 0,
    M = 1,
    Q = 2,
    H = 3,
}

fn ec_level(raw: u32) -> Result<EcLevel, Failure> {
    EcLevel::ALL
        .get(raw as usize)
        .copied()
        .ok_or_else(|| Failure::new(GsStatus::InvalidArgument, format!("EC level {raw} is not a GsEcLevel")))
}

impl From<EcLevel> for GsEcLevel {
    fn from(l: EcLevel) -> Self {
        match l {
            EcLevel::L => GsEcLevel::L,
            EcLevel::M => GsEcLevel::M,
            EcLevel::Q => GsEcLevel::Q,
            EcLevel::H => GsEcLevel::H,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsReadMode {
    Monochromatic = 0,
    Whitelight = 1,
}

/// Disk geometry. `gs_layout_default_params` fills in the defaults. Levels
/// hold `GsEcLevel` values.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsLayoutParams {
    pub outer_version: u8,
    pub outer_level: u32,
    pub inner_version: u8,
    pub inner_level: u32,
    /// Mask pixel size in metres.
    pub pitch_m: f64,
    /// Blank border in outer modules.
    pub quiet_zone: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GsReadSummary {
    pub total_inner: usize,
    pub decoded: usize,
    pub decoded_after_repair: usize,
    pub alpha_observed: f64,
    pub passed: bool,
}

/// Encoded QR symbol.
pub struct GsQrSymbol {
    symbol: QrSymbol,
}

/// Disk layout together with its rendered mask and manifest.
pub struct GsDisk {
    layout: DiskLayout,
    mask: MaskBitmap,
    manifest: Manifest,
}

struct Failure {
    status: GsStatus,
    message: String,
}

impl Failure {
    fn new(status: GsStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<RetentionError> for Failure {
    fn from(e: RetentionError) -> Self {
        let status = match e {
            RetentionError::Domain { .. } => GsStatus::Domain,
            RetentionError::Overflow { .. } => GsStatus::Overflow,
            _ => GsStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<LayoutError> for Failure {
    fn from(e: LayoutError) -> Self {
        let status = match e {
            LayoutError::DocumentTooLarge { .. } | LayoutError::Outer(_) => GsStatus::CapacityExceeded,
            LayoutError::Io(_) => GsStatus::Io,
            _ => GsStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GsStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|panic| {
        let what = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(Failure::new(GsStatus::Internal, what))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GsStatus::Ok
        }
        Err(f) => {
            set_last_error(&f.message);
            f.status
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(GsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn bytes<'a>(data: *const u8, len: usize, what: &str) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

fn version(v: u8) -> Result<Version, Failure> {
    Version::new(v).ok_or_else(|| Failure::new(GsStatus::InvalidArgument, format!("version {v} outside 1-10")))
}

fn seconds_per_hour() -> f64 {
    3600.0
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn gs_status_name(status: GsStatus) -> *const c_char {
    let name: &'static CStr = match status {
        GsStatus::Ok => c"ok",
        GsStatus::NullPointer => c"null pointer",
        GsStatus::InvalidArgument => c"invalid argument",
        GsStatus::Domain => c"domain error",
        GsStatus::Overflow => c"overflow",
        GsStatus::CapacityExceeded => c"capacity exceeded",
        GsStatus::DecodeFailed => c"decode failed",
        GsStatus::BufferTooSmall => c"buffer too small",
        GsStatus::Io => c"i/o error",
        GsStatus::Internal => c"internal error",
    };
    name.as_ptr()
}

/// Message for the last failed call on this thread, or null after a
/// successful call. Valid until the next gs_* call on this thread.
#[no_mangle]
pub extern "C" fn gs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Barrier in units of k_B·T needed to keep `alpha` of the bits for
/// `storage_seconds`.
///
/// # Safety
/// `out_kt` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn gs_required_barrier(storage_seconds: f64, alpha: f64, f0: f64, out_kt: *mut f64) -> GsStatus {
    guard(|| {
        let out = out_ref(out_kt, "out_kt")?;
        *out = retention::required_barrier(storage_seconds, alpha, f0)?;
        Ok(())
    })
}

/// Oven temperature for a test of `test_hours` that proves `storage_years` at
/// `storage_temp_k`.
///
/// # Safety
/// `out_k` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn gs_test_temperature(
    storage_years: f64,
    test_hours: f64,
    alpha: f64,
    alpha_test: f64,
    f0: f64,
    storage_temp_k: f64,
    out_k: *mut f64,
) -> GsStatus {
    guard(|| {
        let out = out_ref(out_k, "out_k")?;
        *out = retention::test_temperature(&TestPlan {
            storage_time: retention::years_to_seconds(storage_years),
            storage_temperature: storage_temp_k,
            storage_error_fraction: alpha,
            test_time: test_hours * seconds_per_hour(),
            test_error_fraction: alpha_test,
            attempt_frequency: f0,
        })?;
        Ok(())
    })
}

/// Storage time in years proven by surviving `test_hours` at `test_temp_k`.
///
/// # Safety
/// `out_years` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn gs_equivalent_storage_years(
    test_temp_k: f64,
    test_hours: f64,
    alpha_test: f64,
    storage_temp_k: f64,
    alpha: f64,
    f0: f64,
    out_years: *mut f64,
) -> GsStatus {
    guard(|| {
        let out = out_ref(out_years, "out_years")?;
        let seconds = retention::equivalent_storage_time(
            test_temp_k,
            test_hours * seconds_per_hour(),
            alpha_test,
            storage_temp_k,
            alpha,
            f0,
        )?;
        *out = retention::seconds_to_years(seconds);
        Ok(())
    })
}

/// Probability that a bit with `barrier_ev` switches within `seconds` at
/// `temp_k`.
///
/// # Safety
/// `out_p` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn gs_switching_probability(
    f0: f64,
    barrier_ev: f64,
    temp_k: f64,
    seconds: f64,
    out_p: *mut f64,
) -> GsStatus {
    guard(|| {
        let out = out_ref(out_p, "out_p")?;
        if seconds.is_nan() || seconds < 0.0 {
            return Err(Failure::new(GsStatus::InvalidArgument, format!("time {seconds} must be >= 0")));
        }
        let model = retention::RetentionModel::new(f0, barrier_ev * retention::ELECTRON_VOLT, temp_k)?;
        *out = model.switching_probability(seconds);
        Ok(())
    })
}

fn medium(top_nm: f64, bottom_nm: f64, tungsten_nm: f64, wavelength_nm: f64) -> Result<StackPair, Failure> {
    MediumDesign {
        bottom_nitride: bottom_nm * 1e-9,
        tungsten: tungsten_nm * 1e-9,
        top_nitride: top_nm * 1e-9,
        wavelength: wavelength_nm * 1e-9,
    }
    .stacks(&IndexTable::bundled())
    .map_err(|e| Failure::new(GsStatus::InvalidArgument, e.to_string()))
}

/// Reflectance of the bare and tungsten regions of the Si / Si3N4 / W /
/// Si3N4 medium and their difference, using the bundled index table. Any
/// output pointer may be null.
///
/// # Safety
/// Non-null output pointers must be valid pointers to doubles.
#[no_mangle]
pub unsafe extern "C" fn gs_medium_contrast(
    top_nm: f64,
    bottom_nm: f64,
    tungsten_nm: f64,
    wavelength_nm: f64,
    out_contrast: *mut f64,
    out_bare: *mut f64,
    out_metal: *mut f64,
) -> GsStatus {
    guard(|| {
        let stacks = medium(top_nm, bottom_nm, tungsten_nm, wavelength_nm)?;
        if let Some(c) = out_contrast.as_mut() {
            *c = stacks.contrast();
        }
        if let Some(b) = out_bare.as_mut() {
            *b = stacks.bare.reflectance();
        }
        if let Some(m) = out_metal.as_mut() {
            *m = stacks.metal.reflectance();
        }
        Ok(())
    })
}

/// Encodes `len` bytes as a byte-mode QR symbol; `level` is a `GsEcLevel`.
///
/// # Safety
/// `data` must point to `len` readable bytes (may be null when `len` is 0);
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_qr_encode(
    data: *const u8,
    len: usize,
    version_number: u8,
    level: u32,
    out: *mut *mut GsQrSymbol,
) -> GsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let payload = bytes(data, len, "data")?;
        let symbol = qr_encode(payload, version(version_number)?, ec_level(level)?)
            .map_err(|e| Failure::new(GsStatus::CapacityExceeded, e.to_string()))?;
        *out = Box::into_raw(Box::new(GsQrSymbol { symbol }));
        Ok(())
    })
}

/// Side length in modules, or 0 for a null handle.
///
/// # Safety
/// `symbol` must be null or a live handle from `gs_qr_encode`.
#[no_mangle]
pub unsafe extern "C" fn gs_qr_side(symbol: *const GsQrSymbol) -> usize {
    symbol.as_ref().map_or(0, |s| s.symbol.modules.side())
}

/// Mask pattern chosen by the encoder, or -1 for a null handle.
///
/// # Safety
/// `symbol` must be null or a live handle from `gs_qr_encode`.
#[no_mangle]
pub unsafe extern "C" fn gs_qr_mask(symbol: *const GsQrSymbol) -> i32 {
    symbol.as_ref().map_or(-1, |s| s.symbol.mask as i32)
}

/// Copies the modules row-major into `buf` (1 = dark, 0 = light). `len` must
/// be at least side².
///
/// # Safety
/// `symbol` must be a live handle; `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gs_qr_copy_modules(symbol: *const GsQrSymbol, buf: *mut u8, len: usize) -> GsStatus {
    guard(|| {
        let s = symbol.as_ref().ok_or_else(|| null("symbol"))?;
        copy_bits(s.symbol.modules.bits(), buf, len)
    })
}

unsafe fn copy_bits(bits: &[bool], buf: *mut u8, len: usize) -> Result<(), Failure> {
    if len < bits.len() {
        return Err(Failure::new(
            GsStatus::BufferTooSmall,
            format!("buffer holds {len} bytes, need {}", bits.len()),
        ));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    let out = std::slice::from_raw_parts_mut(buf, bits.len());
    for (o, &b) in out.iter_mut().zip(bits) {
        *o = b as u8;
    }
    Ok(())
}

/// Releases a symbol. Null is ignored.
///
/// # Safety
/// `symbol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_qr_free(symbol: *mut GsQrSymbol) {
    if !symbol.is_null() {
        drop(Box::from_raw(symbol));
    }
}

unsafe fn matrix(modules: *const u8, side: usize, what: &str) -> Result<BitMatrix, Failure> {
    let cells = bytes(modules, side * side, what)?;
    let rows: Vec<Vec<bool>> = cells.chunks(side.max(1)).map(|r| r.iter().map(|&b| b != 0).collect()).collect();
    BitMatrix::from_rows(&rows).ok_or_else(|| Failure::new(GsStatus::InvalidArgument, format!("{what} is not square")))
}

/// Decodes a row-major module matrix (non-zero = dark). `erasures` is an
/// optional matrix of the same shape flagging unreliable modules. The payload
/// is written to `out_buf`; `out_len` receives its length, also when the
/// buffer is too small. `out_corrected` may be null.
///
/// # Safety
/// `modules` (and `erasures` if non-null) must point to side² bytes; `out_buf`
/// must point to `cap` writable bytes; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_qr_decode(
    modules: *const u8,
    side: usize,
    erasures: *const u8,
    out_buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
    out_corrected: *mut usize,
) -> GsStatus {
    guard(|| {
        let out_len = out_ref(out_len, "out_len")?;
        *out_len = 0;
        if Version::from_side(side).is_none() {
            return Err(Failure::new(GsStatus::InvalidArgument, format!("side {side} is not a QR size")));
        }
        let m = matrix(modules, side, "modules")?;
        let e = if erasures.is_null() { None } else { Some(matrix(erasures, side, "erasures")?) };
        let report = qr_decode(&m, e.as_ref());
        if let Some(c) = out_corrected.as_mut() {
            *c = report.corrected_codewords;
        }
        let payload = report
            .payload
            .map_err(|f| Failure::new(GsStatus::DecodeFailed, f.to_string()))?;
        *out_len = payload.len();
        if payload.len() > cap {
            return Err(Failure::new(
                GsStatus::BufferTooSmall,
                format!("payload is {} bytes, buffer holds {cap}", payload.len()),
            ));
        }
        if !payload.is_empty() {
            if out_buf.is_null() {
                return Err(null("out_buf"));
            }
            ptr::copy_nonoverlapping(payload.as_ptr(), out_buf, payload.len());
        }
        Ok(())
    })
}

/// Fills `out` with the default disk geometry.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_layout_default_params(out: *mut GsLayoutParams) -> GsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let p = LayoutParams::default();
        *out = GsLayoutParams {
            outer_version: p.outer_version.value(),
            outer_level: GsEcLevel::from(p.outer_ec_level) as u32,
            inner_version: p.inner_version.value(),
            inner_level: GsEcLevel::from(p.inner_ec_level) as u32,
            pitch_m: p.pitch,
            quiet_zone: p.quiet_zone,
        };
        Ok(())
    })
}

/// Builds a disk: the outer symbol carries `outer`, every dark outer module
/// carries one of the `n_docs` documents. `params` may be null for defaults.
///
/// # Safety
/// `outer` must point to `outer_len` bytes; `docs` and `doc_lens` must point
/// to `n_docs` entries each, and `docs[i]` to `doc_lens[i]` bytes; `out` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn gs_disk_build(
    outer: *const u8,
    outer_len: usize,
    docs: *const *const u8,
    doc_lens: *const usize,
    n_docs: usize,
    params: *const GsLayoutParams,
    out: *mut *mut GsDisk,
) -> GsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let outer = bytes(outer, outer_len, "outer")?;
        let mut documents = Vec::with_capacity(n_docs);
        if n_docs > 0 {
            if docs.is_null() || doc_lens.is_null() {
                return Err(null("docs"));
            }
            let ptrs = std::slice::from_raw_parts(docs, n_docs);
            let lens = std::slice::from_raw_parts(doc_lens, n_docs);
            for (i, (&p, &l)) in ptrs.iter().zip(lens).enumerate() {
                documents.push(bytes(p, l, &format!("docs[{i}]"))?.to_vec());
            }
        }
        let p = match params.as_ref() {
            None => LayoutParams::default(),
            Some(p) => LayoutParams {
                outer_version: version(p.outer_version)?,
                outer_ec_level: ec_level(p.outer_level)?,
                inner_version: version(p.inner_version)?,
                inner_ec_level: ec_level(p.inner_level)?,
                pitch: p.pitch_m,
                quiet_zone: p.quiet_zone,
            },
        };
        let layout = build_layout(outer, &documents, &p)?;
        let mask = render_mask(&layout);
        let manifest = layout.manifest();
        *out = Box::into_raw(Box::new(GsDisk { layout, mask, manifest }));
        Ok(())
    })
}

/// Mask side length in pixels, or 0 for a null handle.
///
/// # Safety
/// `disk` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_disk_side(disk: *const GsDisk) -> usize {
    disk.as_ref().map_or(0, |d| d.mask.width)
}

/// Number of inner symbols on the disk, or 0 for a null handle.
///
/// # Safety
/// `disk` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_disk_inner_count(disk: *const GsDisk) -> usize {
    disk.as_ref().map_or(0, |d| d.layout.slots.len())
}

/// Copies the mask row-major (1 = tungsten). `len` must be at least side².
///
/// # Safety
/// `disk` must be a live handle; `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gs_disk_copy_mask(disk: *const GsDisk, buf: *mut u8, len: usize) -> GsStatus {
    guard(|| {
        let d = disk.as_ref().ok_or_else(|| null("disk"))?;
        copy_bits(d.mask.bits(), buf, len)
    })
}

/// Writes the mask as a binary PBM file.
///
/// # Safety
/// `disk` must be a live handle; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gs_disk_write_pbm(disk: *const GsDisk, path: *const c_char) -> GsStatus {
    guard(|| {
        let d = disk.as_ref().ok_or_else(|| null("disk"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::new(GsStatus::InvalidArgument, "path is not UTF-8"))?;
        d.mask.write_pbm(path)?;
        Ok(())
    })
}

/// Manifest JSON as a newly allocated string, released with
/// `gs_string_free`. Null for a null handle.
///
/// # Safety
/// `disk` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_disk_manifest_json(disk: *const GsDisk) -> *mut c_char {
    disk.as_ref()
        .and_then(|d| CString::new(d.manifest.to_json()).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// Ages the disk for `hours` at `temp_k` with the default damage model and
/// reads it back through the default medium; `mode` is a `GsReadMode`.
///
/// # Safety
/// `disk` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_disk_age_and_read(
    disk: *const GsDisk,
    temp_k: f64,
    hours: f64,
    seed: u64,
    mode: u32,
    repair_finders: bool,
    out: *mut GsReadSummary,
) -> GsStatus {
    guard(|| {
        let d = disk.as_ref().ok_or_else(|| null("disk"))?;
        let out = out_ref(out, "out")?;
        let stacks = medium(225.0, 338.0, 50.0, 550.0)?;
        let scenario = DamageScenario::isothermal(temp_k, hours * seconds_per_hour(), seed);
        let image = age_disk(&d.mask, &stacks, &scenario)
            .map_err(|e| Failure::new(GsStatus::InvalidArgument, e.to_string()))?;
        let mode = match mode {
            m if m == GsReadMode::Monochromatic as u32 => ReadMode::Monochromatic,
            m if m == GsReadMode::Whitelight as u32 => ReadMode::Whitelight,
            other => {
                return Err(Failure::new(GsStatus::InvalidArgument, format!("read mode {other} is not a GsReadMode")))
            }
        };
        let mut options = ReadOptions::new(GrayLevels::of(&stacks), mode);
        options.classify.seed = seed;
        options.repair_finders = repair_finders;
        let report = read_disk(&image, &d.manifest, &options)
            .map_err(|e| Failure::new(GsStatus::InvalidArgument, e.to_string()))?;
        *out = GsReadSummary {
            total_inner: report.total_inner,
            decoded: report.decoded,
            decoded_after_repair: report.decoded_after_repair,
            alpha_observed: report.alpha_observed,
            passed: report.passed,
        };
        Ok(())
    })
}

/// Releases a disk. Null is ignored.
///
/// # Safety
/// `disk` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_disk_free(disk: *mut GsDisk) {
    if !disk.is_null() {
        drop(Box::from_raw(disk));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
