//! C ABI for `mcpgev`.
//!
//! Every fallible function returns an [`McpStatus`]; on failure the message is
//! available from [`mcp_last_error`] on the same thread. Instances are opaque
//! [`McpInstance`] handles released with [`mcp_instance_free`]. Location
//! indices are 0-based throughout.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;
use std::time::Duration;

use mcpgev::instances::{assign_nests, generate_euclidean, GeneratorParams};
use mcpgev::solver::{self, CoefMode, SolverConfig};
use mcpgev::{format, objective, AttractionVector, ChoiceModelSpec, Error, Instance, Zone};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Io = 4,
    Infeasible = 5,
    Unsupported = 6,
    Panic = 7,
}

/// Opaque problem instance.
pub struct McpInstance(Instance);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub enum McpCoefMode {
    Gradient = 0,
    Marginal = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McpSolverConfig {
    pub cardinality: usize,
    /// Even, at least 2.
    pub delta: usize,
    pub coef_mode: McpCoefMode,
    /// Wall-clock budget in seconds; zero or negative means unlimited.
    pub time_budget_s: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct McpRunReport {
    pub effective_delta: usize,
    pub phase_objectives: [f64; 3],
    pub subproblem_iterations: usize,
    pub subproblem_accepted: usize,
    pub exchange_iterations: usize,
    pub exchange_accepted: usize,
    pub wall_ms: [f64; 3],
    pub budget_exhausted: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McpGeneratorParams {
    pub zones: usize,
    pub locations: usize,
    pub competitors: usize,
    pub alpha: f64,
    pub beta: f64,
    pub plane_side: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> McpStatus {
    match e {
        Error::InvalidInput(_) | Error::GuardExceeded { .. } => McpStatus::InvalidInput,
        Error::Parse { .. } | Error::Version { .. } => McpStatus::Parse,
        Error::UnsupportedModel(_) => McpStatus::Unsupported,
        Error::Infeasible(_) => McpStatus::Infeasible,
        Error::Io { .. } => McpStatus::Io,
    }
}

struct Fail(McpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(McpStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic for [`mcp_last_error`].
fn guarded(f: impl FnOnce() -> Result<(), Fail>) -> McpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => McpStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            McpStatus::Panic
        }
    }
}

unsafe fn instance<'a>(p: *const McpInstance) -> Result<&'a Instance, Fail> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("instance"))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(McpStatus::InvalidInput, "path is not valid UTF-8".into()))
}

unsafe fn publish(out: *mut *mut McpInstance, inst: Instance) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(McpInstance(inst)));
    Ok(())
}

fn write_selection(selected: &[usize], out: &mut [usize]) -> Result<(), Fail> {
    if out.len() != selected.len() {
        return Err(Fail(
            McpStatus::InvalidInput,
            format!("output buffer holds {}, need {}", out.len(), selected.len()),
        ));
    }
    out.copy_from_slice(selected);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mcp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default solver settings for `cardinality`.
#[no_mangle]
pub extern "C" fn mcp_solver_config_default(cardinality: usize) -> McpSolverConfig {
    let cfg = SolverConfig::new(cardinality);
    McpSolverConfig {
        cardinality,
        delta: cfg.delta,
        coef_mode: McpCoefMode::Gradient,
        time_budget_s: cfg.time_budget.map_or(0.0, |d| d.as_secs_f64()),
    }
}

/// Default generator settings.
#[no_mangle]
pub extern "C" fn mcp_generator_params_default() -> McpGeneratorParams {
    let p = GeneratorParams::default();
    McpGeneratorParams {
        zones: p.zones,
        locations: p.locations,
        competitors: p.competitors,
        alpha: p.alpha,
        beta: p.beta,
        plane_side: p.plane_side,
        seed: p.seed,
    }
}

/// Builds an instance from dense data. `y` is row-major `zones x m`. Pass
/// `nest_of = NULL` for MNL; otherwise `nest_of[j]` is the 0-based nest of
/// location `j` and `mu` holds `nests` dissimilarity parameters.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn mcp_instance_new(
    m: usize,
    zones: usize,
    q: *const f64,
    y: *const f64,
    nest_of: *const usize,
    mu: *const f64,
    nests: usize,
    out: *mut *mut McpInstance,
) -> McpStatus {
    guarded(|| {
        let q = input(q, zones, "q")?;
        let cells = zones
            .checked_mul(m)
            .ok_or_else(|| Fail(McpStatus::InvalidInput, "zones * m overflows".into()))?;
        let y = input(y, cells, "y")?;
        let spec = if nest_of.is_null() {
            ChoiceModelSpec::Mnl
        } else {
            let nest_of = input(nest_of, m, "nest_of")?;
            let mu = input(mu, nests, "mu")?;
            ChoiceModelSpec::nested(nest_of.to_vec(), mu.to_vec())?
        };
        let rows = (0..zones)
            .map(|i| Zone::new(q[i], AttractionVector::new(y[i * m..(i + 1) * m].to_vec())?))
            .collect::<mcpgev::Result<Vec<_>>>()?;
        publish(out, Instance::new(m, rows, spec)?)
    })
}

/// Generates a Euclidean instance. With `mu = NULL` the model is MNL,
/// otherwise nested logit over `n_mu` contiguous nests.
///
/// # Safety
/// `params` and `out` must be valid; `mu` valid for `n_mu` reads.
#[no_mangle]
pub unsafe extern "C" fn mcp_instance_generate(
    params: *const McpGeneratorParams,
    mu: *const f64,
    n_mu: usize,
    out: *mut *mut McpInstance,
) -> McpStatus {
    guarded(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let gp = GeneratorParams {
            zones: p.zones,
            locations: p.locations,
            competitors: p.competitors,
            alpha: p.alpha,
            beta: p.beta,
            plane_side: p.plane_side,
            seed: p.seed,
        };
        let spec = if mu.is_null() {
            ChoiceModelSpec::Mnl
        } else {
            assign_nests(p.locations, input(mu, n_mu, "mu")?)?
        };
        publish(out, generate_euclidean(&gp, spec)?)
    })
}

/// Reads a `.mcp` file.
///
/// # Safety
/// `file` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mcp_instance_read(
    file: *const c_char,
    out: *mut *mut McpInstance,
) -> McpStatus {
    guarded(|| publish(out, format::read_instance(path(file)?)?))
}

/// Writes a `.mcp` file.
///
/// # Safety
/// `inst` must be a live handle; `file` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mcp_instance_write(
    inst: *const McpInstance,
    file: *const c_char,
) -> McpStatus {
    guarded(|| Ok(format::write_instance(instance(inst)?, path(file)?)?))
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `inst` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcp_instance_free(inst: *mut McpInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of candidate locations, or 0 for NULL.
///
/// # Safety
/// `inst` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcp_instance_locations(inst: *const McpInstance) -> usize {
    inst.as_ref().map_or(0, |h| h.0.locations())
}

/// Number of customer zones, or 0 for NULL.
///
/// # Safety
/// `inst` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcp_instance_zones(inst: *const McpInstance) -> usize {
    inst.as_ref().map_or(0, |h| h.0.zones().len())
}

/// Expected captured demand of the open set `selected[0..len]`.
///
/// # Safety
/// `inst` live, `selected` valid for `len` reads, `value` writable.
#[no_mangle]
pub unsafe extern "C" fn mcp_objective(
    inst: *const McpInstance,
    selected: *const usize,
    len: usize,
    value: *mut f64,
) -> McpStatus {
    guarded(|| {
        let inst = instance(inst)?;
        let s = input(selected, len, "selected")?;
        let f = objective::objective(inst, s)?;
        *value.as_mut().ok_or_else(|| null("value"))? = f;
        Ok(())
    })
}

/// Greedy heuristic. `selected` receives `cardinality` sorted indices.
///
/// # Safety
/// `inst` live, `selected` writable for `cardinality` entries, `value`
/// writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn mcp_greedy(
    inst: *const McpInstance,
    cardinality: usize,
    selected: *mut usize,
    value: *mut f64,
) -> McpStatus {
    guarded(|| {
        let sol = solver::greedy(instance(inst)?, cardinality)?;
        write_selection(&sol.selected, output(selected, cardinality, "selected")?)?;
        if let Some(v) = value.as_mut() {
            *v = sol.objective.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Full GGX run. `selected` receives `config.cardinality` sorted indices.
///
/// # Safety
/// `inst` and `config` valid, `selected` writable for `config.cardinality`
/// entries; `value` and `report` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn mcp_ggx(
    inst: *const McpInstance,
    config: *const McpSolverConfig,
    selected: *mut usize,
    value: *mut f64,
    report: *mut McpRunReport,
) -> McpStatus {
    guarded(|| {
        let inst = instance(inst)?;
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        let cfg = SolverConfig {
            cardinality: c.cardinality,
            delta: c.delta,
            coef_mode: match c.coef_mode {
                McpCoefMode::Gradient => CoefMode::Gradient,
                McpCoefMode::Marginal => CoefMode::Marginal,
            },
            time_budget: (c.time_budget_s > 0.0)
                .then(|| Duration::try_from_secs_f64(c.time_budget_s).ok())
                .flatten(),
            seed: 0,
        };
        let (sol, rep) = solver::ggx(inst, &cfg)?;
        write_selection(&sol.selected, output(selected, c.cardinality, "selected")?)?;
        if let Some(v) = value.as_mut() {
            *v = sol.objective.unwrap_or(f64::NAN);
        }
        if let Some(r) = report.as_mut() {
            *r = McpRunReport {
                effective_delta: rep.effective_delta,
                phase_objectives: rep.phase_objectives,
                subproblem_iterations: rep.subproblem_iterations,
                subproblem_accepted: rep.subproblem_accepted,
                exchange_iterations: rep.exchange_iterations,
                exchange_accepted: rep.exchange_accepted,
                wall_ms: rep.wall_ms,
                budget_exhausted: rep.budget_exhausted,
            };
        }
        Ok(())
    })
}

/// Maximizes `sum_{j in S} d_j` over `|S| = cardinality` within `delta`
/// flips of `s_bar`. `selected` receives `cardinality` sorted indices.
///
/// # Safety
/// `d` valid for `m` reads, `s_bar` for `cardinality` reads, `selected`
/// writable for `cardinality` entries.
#[no_mangle]
pub unsafe extern "C" fn mcp_solve_subproblem(
    d: *const f64,
    m: usize,
    s_bar: *const usize,
    cardinality: usize,
    delta: usize,
    selected: *mut usize,
) -> McpStatus {
    guarded(|| {
        let d = input(d, m, "d")?;
        let s_bar = input(s_bar, cardinality, "s_bar")?;
        let s = solver::solve_subproblem(d, s_bar, cardinality, delta)?;
        write_selection(&s, output(selected, cardinality, "selected")?)
    })
}
