//! C interface to the `mzeuler` solver.
//!
//! Every function returns an [`MzStatus`]; on failure a message can be
//! fetched with [`mz_last_error_message`] from the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mzeuler::config::RunConfig;
use mzeuler::integrate::Simulation;
use mzeuler::spectral::RangeMask;
use mzeuler::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Grid = 4,
    Io = 5,
    BufferTooSmall = 6,
    BlowUp = 7,
    Internal = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> MzStatus {
    match err {
        Error::Config(_) | Error::OrderBound { .. } => MzStatus::Config,
        Error::InvalidGrid(_) | Error::GridMismatch { .. } | Error::UnresolvedSupport(_) => MzStatus::Grid,
        Error::Io { .. } => MzStatus::Io,
        _ => MzStatus::Internal,
    }
}

fn fail(err: Error) -> MzStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

fn guard(f: impl FnOnce() -> MzStatus) -> MzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside mzeuler");
            MzStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, MzStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(MzStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        MzStatus::InvalidArgument
    })
}

/// Copies `text` plus a NUL into `buf` when it fits; `needed` receives the
/// full size including the NUL.
unsafe fn write_text(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> MzStatus {
    let status = copy_text(text, buf, len, needed);
    if status == MzStatus::BufferTooSmall {
        set_error(format!("buffer of {len} bytes, need {}", text.len() + 1));
    }
    status
}

unsafe fn copy_text(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> MzStatus {
    let size = text.len() + 1;
    if !needed.is_null() {
        *needed = size;
    }
    if buf.is_null() || len < size {
        return MzStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    MzStatus::Ok
}

/// Copies the last error message of this thread into `buf`. The message is
/// kept, so a first call with a null buffer can query its size.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null; `needed` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn mz_last_error_message(buf: *mut c_char, len: usize, needed: *mut usize) -> MzStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    copy_text(&msg, buf, len, needed)
}

/// A running simulation.
pub struct MzSimulation {
    sim: Simulation,
    blown_up: bool,
}

fn create(cfg: mzeuler::Result<RunConfig>, out: *mut *mut MzSimulation) -> MzStatus {
    if out.is_null() {
        set_error("null output handle");
        return MzStatus::NullPointer;
    }
    match cfg.and_then(Simulation::new) {
        Ok(sim) => {
            // SAFETY: checked non-null above.
            unsafe { *out = Box::into_raw(Box::new(MzSimulation { sim, blown_up: false })) };
            MzStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Creates a simulation from a named preset.
///
/// # Safety
/// `preset` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_new_preset(preset: *const c_char, out: *mut *mut MzSimulation) -> MzStatus {
    guard(|| match c_str(preset) {
        Ok(p) => create(RunConfig::preset(p), out),
        Err(s) => s,
    })
}

/// Creates a simulation from `key = value` configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_new_config(text: *const c_char, out: *mut *mut MzSimulation) -> MzStatus {
    guard(|| match c_str(text) {
        Ok(t) => create(RunConfig::from_kv_text(t), out),
        Err(s) => s,
    })
}

/// Releases a simulation; null is ignored.
///
/// # Safety
/// `sim` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_free(sim: *mut MzSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn with_sim(sim: *mut MzSimulation, f: impl FnOnce(&mut MzSimulation) -> MzStatus) -> MzStatus {
    if sim.is_null() {
        set_error("null simulation handle");
        return MzStatus::NullPointer;
    }
    let s = &mut *sim;
    guard(|| f(s))
}

/// Advances up to `steps` steps. Returns `BlowUp` if the run became
/// unstable; `done` receives the number of steps taken.
///
/// # Safety
/// `sim` must be a live handle; `done` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_step(sim: *mut MzSimulation, steps: u64, done: *mut u64) -> MzStatus {
    with_sim(sim, |s| {
        let mut taken = 0;
        let mut status = MzStatus::Ok;
        if s.blown_up {
            set_error("simulation already blew up");
            status = MzStatus::BlowUp;
        }
        while status == MzStatus::Ok && taken < steps {
            match s.sim.step() {
                Ok(None) => taken += 1,
                Ok(Some(b)) => {
                    s.blown_up = true;
                    set_error(format!("blow-up at t = {}: {}", b.t, b.reason));
                    status = MzStatus::BlowUp;
                }
                Err(e) => status = fail(e),
            }
        }
        if !done.is_null() {
            *done = taken;
        }
        status
    })
}

unsafe fn scalar(sim: *mut MzSimulation, out: *mut f64, f: impl FnOnce(&Simulation) -> f64) -> MzStatus {
    with_sim(sim, |s| {
        if out.is_null() {
            set_error("null output pointer");
            return MzStatus::NullPointer;
        }
        *out = f(&s.sim);
        MzStatus::Ok
    })
}

/// Current time.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_time(sim: *mut MzSimulation, out: *mut f64) -> MzStatus {
    scalar(sim, out, |s| s.state().t)
}

/// Energy of the evolved modes.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_energy(sim: *mut MzSimulation, out: *mut f64) -> MzStatus {
    scalar(sim, out, |s| s.energy())
}

/// `dE/dt` at the current state.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_energy_rate(sim: *mut MzSimulation, out: *mut f64) -> MzStatus {
    scalar(sim, out, |s| s.energy_rate())
}

/// Number of resolved modes; the state has `6 *` this many doubles.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_mode_count(sim: *mut MzSimulation, out: *mut usize) -> MzStatus {
    with_sim(sim, |s| {
        if out.is_null() {
            set_error("null output pointer");
            return MzStatus::NullPointer;
        }
        *out = s.sim.grid().count(s.sim.support());
        MzStatus::Ok
    })
}

/// Copies the velocity on the evolved modes as interleaved
/// `(re, im)` pairs per component, modes in FFT order; `wavevectors`
/// (optional, `3 *` mode count ints) receives each mode's wavevector.
///
/// # Safety
/// `values` must hold `len` doubles; `wavevectors` must be null or hold
/// `len / 2` ints.
#[no_mangle]
pub unsafe extern "C" fn mz_simulation_copy_state(
    sim: *mut MzSimulation,
    values: *mut f64,
    len: usize,
    wavevectors: *mut i32,
) -> MzStatus {
    with_sim(sim, |s| {
        let grid = s.sim.grid();
        let mask: RangeMask = s.sim.support();
        let need = 6 * grid.count(mask);
        if values.is_null() || len < need {
            set_error(format!("state needs {need} doubles, got {len}"));
            return MzStatus::BufferTooSmall;
        }
        let u = s.sim.state().u();
        for (n, i) in grid.indices(mask).enumerate() {
            for c in 0..3 {
                *values.add(6 * n + 2 * c) = u[i][c].re;
                *values.add(6 * n + 2 * c + 1) = u[i][c].im;
            }
            if !wavevectors.is_null() {
                let k = grid.wavevector(i);
                for (c, kc) in k.iter().enumerate() {
                    *wavevectors.add(3 * n + c) = *kc;
                }
            }
        }
        MzStatus::Ok
    })
}

/// Writes the listing of the generated `Z^n` sums into `buf`.
///
/// # Safety
/// `buf` must hold `len` bytes or be null; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mz_show_terms(n: u32, with_plan: bool, buf: *mut c_char, len: usize, needed: *mut usize) -> MzStatus {
    guard(|| match mzeuler::compiler::report::show_terms(n as usize, with_plan) {
        Ok(text) => write_text(&text, buf, len, needed),
        Err(e) => fail(e),
    })
}
