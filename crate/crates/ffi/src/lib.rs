//! C ABI for `mcaimem`.
//!
//! Calibrations and arrays are opaque handles created by `*_new` functions
//! and released with the matching `*_free`. Fallible calls return an
//! [`McaimemStatus`] and write results through out-pointers; on failure
//! [`mcaimem_last_error`] describes what went wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcaimem::array::{Address, ArrayConfig, MixedArray};
use mcaimem::codec::{self, EncodedByte};
use mcaimem::dataflow::{self, AccelConfig, BitStats, LayerSpec, OperandStats, Preset};
use mcaimem::energy::{self, Access, EnergyParams, Tech};
use mcaimem::retention::RetentionCalibration;
use mcaimem::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McaimemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Calibration = 4,
    AddressOutOfRange = 5,
    TimeRegression = 6,
    Format = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McaimemTech {
    Sram = 0,
    Edram = 1,
    Mcaimem = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McaimemAccess {
    Read = 0,
    Write = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McaimemPreset {
    Eyeriss = 0,
    Tpuv1 = 1,
}

/// Opaque retention calibration.
pub struct McaimemCalibration(RetentionCalibration);

/// Opaque mixed SRAM/eDRAM array.
pub struct McaimemArray(MixedArray);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McaimemArrayConfig {
    pub banks: usize,
    pub rows_per_bank: usize,
    pub bytes_per_row: usize,
    /// Sense reference in volts.
    pub v_ref: f64,
    pub refresh_enabled: bool,
    /// Per-cell flip probability the refresh period is sized for.
    pub refresh_target_p: f64,
    pub clock_hz: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct McaimemCounters {
    pub reads: u64,
    pub writes: u64,
    pub row_refreshes: u64,
    pub flips: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McaimemLayer {
    pub ifmap_h: u64,
    pub ifmap_w: u64,
    pub filter_h: u64,
    pub filter_w: u64,
    pub channels: u64,
    pub num_filters: u64,
    pub stride: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct McaimemLayerStats {
    pub cycles: u64,
    pub ifmap_reads_bytes: u64,
    pub filter_reads_bytes: u64,
    pub ofmap_writes_bytes: u64,
}

impl From<ArrayConfig> for McaimemArrayConfig {
    fn from(c: ArrayConfig) -> Self {
        Self {
            banks: c.banks,
            rows_per_bank: c.rows_per_bank,
            bytes_per_row: c.bytes_per_row,
            v_ref: c.v_ref,
            refresh_enabled: c.refresh_enabled,
            refresh_target_p: c.refresh_target_p,
            clock_hz: c.clock_hz,
        }
    }
}

impl From<McaimemArrayConfig> for ArrayConfig {
    fn from(c: McaimemArrayConfig) -> Self {
        Self {
            banks: c.banks,
            rows_per_bank: c.rows_per_bank,
            bytes_per_row: c.bytes_per_row,
            v_ref: c.v_ref,
            refresh_enabled: c.refresh_enabled,
            refresh_target_p: c.refresh_target_p,
            clock_hz: c.clock_hz,
        }
    }
}

impl From<McaimemTech> for Tech {
    fn from(t: McaimemTech) -> Self {
        match t {
            McaimemTech::Sram => Tech::Sram,
            McaimemTech::Edram => Tech::Edram,
            McaimemTech::Mcaimem => Tech::Mcaimem,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> McaimemStatus {
    match e {
        Error::Domain(_) | Error::EmptyInput(_) | Error::Shape(_) => McaimemStatus::Domain,
        Error::Calibration(_) => McaimemStatus::Calibration,
        Error::AddressOutOfRange { .. } => McaimemStatus::AddressOutOfRange,
        Error::TimeRegression { .. } => McaimemStatus::TimeRegression,
        _ => McaimemStatus::Format,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, recording any failure or panic for `mcaimem_last_error`.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> McaimemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => McaimemStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            McaimemStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            McaimemStatus::InvalidArgument
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            McaimemStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    *deref_mut(out, "out")? = v;
    Ok(())
}

/// Message for the last failed call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mcaimem_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Stored cell pattern of `x` under one-enhancement encoding.
#[no_mangle]
pub extern "C" fn mcaimem_encode(x: i8) -> u8 {
    codec::encode(x).to_bits()
}

/// Inverse of [`mcaimem_encode`]; total over all 256 patterns.
#[no_mangle]
pub extern "C" fn mcaimem_decode(bits: u8) -> i8 {
    codec::decode(EncodedByte::from_bits(bits))
}

/// Calibration fitted to the reference retention anchors.
#[no_mangle]
pub extern "C" fn mcaimem_calibration_default() -> *mut McaimemCalibration {
    Box::into_raw(Box::new(McaimemCalibration(RetentionCalibration::default())))
}

/// Parses a calibration JSON object as written by `mcaimem calibrate`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_calibration_from_json(
    json: *const c_char,
    out: *mut *mut McaimemCalibration,
) -> McaimemStatus {
    guard(|| {
        let text = CStr::from_ptr(deref(json, "json")?)
            .to_str()
            .map_err(|e| Fail::Arg(format!("json is not UTF-8: {e}")))?;
        let cal: RetentionCalibration = serde_json::from_str(text).map_err(Error::from)?;
        cal.validate()?;
        put(out, Box::into_raw(Box::new(McaimemCalibration(cal))))
    })
}

/// # Safety
/// `cal` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_calibration_free(cal: *mut McaimemCalibration) {
    if !cal.is_null() {
        drop(Box::from_raw(cal));
    }
}

/// Probability that a stored zero reads as one after `t_us` microseconds.
///
/// # Safety
/// `cal` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_flip_probability(
    cal: *const McaimemCalibration,
    t_us: f64,
    v_ref: f64,
    out: *mut f64,
) -> McaimemStatus {
    guard(|| {
        let p = deref(cal, "cal")?.0.flip_probability(t_us, v_ref)?;
        put(out, p)
    })
}

/// Longest refresh period in microseconds keeping the flip probability at
/// or below `target_p`.
///
/// # Safety
/// `cal` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_refresh_interval(
    cal: *const McaimemCalibration,
    v_ref: f64,
    target_p: f64,
    out: *mut f64,
) -> McaimemStatus {
    guard(|| {
        let t = deref(cal, "cal")?.0.refresh_interval(v_ref, target_p)?;
        put(out, t)
    })
}

/// 1 MB array at V_REF 0.8 V with refresh on.
#[no_mangle]
pub extern "C" fn mcaimem_array_config_default() -> McaimemArrayConfig {
    ArrayConfig::default().into()
}

/// Creates an array holding encoded zeros at time 0.
///
/// # Safety
/// `config`, `cal` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_array_new(
    config: *const McaimemArrayConfig,
    cal: *const McaimemCalibration,
    seed: u64,
    out: *mut *mut McaimemArray,
) -> McaimemStatus {
    guard(|| {
        let config = ArrayConfig::from(*deref(config, "config")?);
        let cal = deref(cal, "cal")?.0.clone();
        let array = MixedArray::new(config, cal, seed)?;
        put(out, Box::into_raw(Box::new(McaimemArray(array))))
    })
}

/// # Safety
/// `array` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_array_free(array: *mut McaimemArray) {
    if !array.is_null() {
        drop(Box::from_raw(array));
    }
}

/// Stores the cell pattern `bits` at time `t_ns`.
///
/// # Safety
/// `array` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_array_write(
    array: *mut McaimemArray,
    bank: usize,
    row: usize,
    col: usize,
    bits: u8,
    t_ns: u64,
) -> McaimemStatus {
    guard(|| {
        let a = &mut deref_mut(array, "array")?.0;
        a.write(Address::new(bank, row, col), EncodedByte::from_bits(bits), t_ns)?;
        Ok(())
    })
}

/// Senses the byte at time `t_ns`; the row is written back as sensed.
///
/// # Safety
/// `array` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_array_read(
    array: *mut McaimemArray,
    bank: usize,
    row: usize,
    col: usize,
    t_ns: u64,
    out: *mut u8,
) -> McaimemStatus {
    guard(|| {
        let a = &mut deref_mut(array, "array")?.0;
        let e = a.read(Address::new(bank, row, col), t_ns)?;
        put(out, e.to_bits())
    })
}

/// Runs scheduled refreshes up to `t_ns`; `out_refreshes` may be null.
///
/// # Safety
/// `array` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_array_advance(
    array: *mut McaimemArray,
    t_ns: u64,
    out_refreshes: *mut u64,
) -> McaimemStatus {
    guard(|| {
        let n = deref_mut(array, "array")?.0.advance(t_ns)?;
        if !out_refreshes.is_null() {
            *out_refreshes = n;
        }
        Ok(())
    })
}

/// # Safety
/// `array` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_array_refresh_row(
    array: *mut McaimemArray,
    bank: usize,
    row: usize,
    t_ns: u64,
) -> McaimemStatus {
    guard(|| {
        deref_mut(array, "array")?.0.refresh_row(bank, row, t_ns)?;
        Ok(())
    })
}

/// # Safety
/// `array` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_array_counters(
    array: *const McaimemArray,
    out: *mut McaimemCounters,
) -> McaimemStatus {
    guard(|| {
        let c = deref(array, "array")?.0.counters();
        put(
            out,
            McaimemCounters {
                reads: c.reads,
                writes: c.writes,
                row_refreshes: c.row_refreshes,
                flips: c.flips,
            },
        )
    })
}

/// Static power in mW of `capacity_mb` megabytes at the given zero-bit fraction.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_static_power(
    tech: McaimemTech,
    zero_fraction: f64,
    capacity_mb: f64,
    out: *mut f64,
) -> McaimemStatus {
    guard(|| {
        let p = EnergyParams::default().static_power(tech.into(), zero_fraction, capacity_mb)?;
        put(out, p)
    })
}

/// Energy in pJ of one byte access at the given zero-bit fraction.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_access_energy(
    tech: McaimemTech,
    op: McaimemAccess,
    zero_fraction: f64,
    out: *mut f64,
) -> McaimemStatus {
    guard(|| {
        let op = match op {
            McaimemAccess::Read => Access::Read,
            McaimemAccess::Write => Access::Write,
        };
        let e = EnergyParams::default().access_energy(tech.into(), op, zero_fraction)?;
        put(out, e)
    })
}

/// Relative ops-per-watt gain from scaling buffer energy by `buffer_energy_ratio`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_ops_per_watt_gain(
    buffer_power_share: f64,
    buffer_energy_ratio: f64,
    out: *mut f64,
) -> McaimemStatus {
    guard(|| put(out, energy::ops_per_watt_gain(buffer_power_share, buffer_energy_ratio)?))
}

/// Output-stationary cycle and buffer traffic counts for one layer.
///
/// # Safety
/// `layer` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcaimem_simulate_layer(
    layer: *const McaimemLayer,
    preset: McaimemPreset,
    out: *mut McaimemLayerStats,
) -> McaimemStatus {
    guard(|| {
        let l = deref(layer, "layer")?;
        let spec = LayerSpec {
            name: String::new(),
            ifmap_h: l.ifmap_h,
            ifmap_w: l.ifmap_w,
            filter_h: l.filter_h,
            filter_w: l.filter_w,
            channels: l.channels,
            num_filters: l.num_filters,
            stride: l.stride,
        };
        let accel = AccelConfig::preset(match preset {
            McaimemPreset::Eyeriss => Preset::Eyeriss,
            McaimemPreset::Tpuv1 => Preset::Tpuv1,
        });
        let s = dataflow::simulate_layer(&spec, &accel, OperandStats::same(BitStats::uniform(0.5)))?;
        put(
            out,
            McaimemLayerStats {
                cycles: s.cycles,
                ifmap_reads_bytes: s.ifmap_reads_bytes,
                filter_reads_bytes: s.filter_reads_bytes,
                ofmap_writes_bytes: s.ofmap_writes_bytes,
            },
        )
    })
}
