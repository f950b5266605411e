//! C ABI over `roadcast-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns an [`RcStatus`]
//! and, on failure, leaves a message for [`rc_last_error`] on the calling
//! thread. Deployments cross the boundary as arrays of site indices in file
//! order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use roadcast::geometry::{parse_instance, partition_edges, Instance, PartitionIndex};
use roadcast::metrics::{Deployment, Objective, RateBasis};
use roadcast::paths::{parse_paths, MovementSet};
use roadcast::planner::{self, Context, GreedyOptions, PlanResult};
use roadcast::scenario::{mean_scenario, worst_case_overall, UncertaintyModel};
use roadcast::{Error, ErrorCode, SiteId};

/// Result of every fallible call. Error values match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    Usage = 2,
    Parse = 3,
    Infeasible = 4,
    CapExceeded = 5,
    Io = 6,
    Numeric = 7,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 8,
    /// The caller's buffer is too small; the needed length was written.
    BufferTooSmall = 9,
    /// The library panicked; the handle involved should not be reused.
    Internal = 10,
}

/// Per-path metric.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcMetric {
    /// Covered fraction of path length.
    Distance = 0,
    /// Covered fraction of travel time under the mean scenario.
    Time = 1,
    /// Average throughput under the mean scenario.
    Throughput = 2,
}

/// A parsed network with its candidate sites, coverage partition and paths.
pub struct RcInstance {
    inst: Instance,
    index: PartitionIndex,
    moves: MovementSet,
}

/// A planner result.
pub struct RcPlan {
    plan: PlanResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(code: ErrorCode) -> RcStatus {
    match code {
        ErrorCode::Usage => RcStatus::Usage,
        ErrorCode::Parse => RcStatus::Parse,
        ErrorCode::Infeasible => RcStatus::Infeasible,
        ErrorCode::CapExceeded => RcStatus::CapExceeded,
        ErrorCode::Io => RcStatus::Io,
        ErrorCode::Numeric => RcStatus::Numeric,
    }
}

struct Fail(RcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(e.code()), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(RcStatus::InvalidArgument, msg.to_string())
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            RcStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| invalid(&format!("{what} is null")))
}

unsafe fn deployment(inst: &RcInstance, sites: *const u32, len: usize) -> Result<Deployment, Fail> {
    if len == 0 {
        return Ok(Deployment::empty(&inst.inst.sites));
    }
    if sites.is_null() {
        return Err(invalid("sites is null"));
    }
    let ids = std::slice::from_raw_parts(sites, len).iter().map(|&i| SiteId(i));
    Ok(Deployment::new(ids, &inst.inst.sites)?)
}

fn objective(inst: &RcInstance, metric: RcMetric) -> Objective {
    let k = mean_scenario(&UncertaintyModel::from_instance(&inst.inst));
    match metric {
        RcMetric::Distance => Objective::Distance,
        RcMetric::Time => Objective::Time(k),
        RcMetric::Throughput => Objective::Throughput { scenario: k, basis: RateBasis::AllCandidates },
    }
}

fn ctx(inst: &RcInstance) -> Context<'_> {
    Context::new(&inst.inst, &inst.index, &inst.moves)
}

unsafe fn write_out<T: Copy>(values: &[T], out: *mut T, cap: usize, len: *mut usize) -> Result<(), Fail> {
    if len.is_null() {
        return Err(invalid("length pointer is null"));
    }
    *len = values.len();
    if values.len() > cap {
        return Err(Fail(RcStatus::BufferTooSmall, format!("need room for {} values, got {cap}", values.len())));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(invalid("output buffer is null"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status, such as `"INFEASIBLE"`.
#[no_mangle]
pub extern "C" fn rc_status_name(status: RcStatus) -> *const c_char {
    let s: &'static CStr = match status {
        RcStatus::Ok => c"OK",
        RcStatus::Usage => c"USAGE",
        RcStatus::Parse => c"PARSE",
        RcStatus::Infeasible => c"INFEASIBLE",
        RcStatus::CapExceeded => c"CAP_EXCEEDED",
        RcStatus::Io => c"IO",
        RcStatus::Numeric => c"NUMERIC",
        RcStatus::InvalidArgument => c"INVALID_ARGUMENT",
        RcStatus::BufferTooSmall => c"BUFFER_TOO_SMALL",
        RcStatus::Internal => c"INTERNAL",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn rc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a network file and, if `paths` is not null, a paths file.
///
/// # Safety
/// `network` and `paths` must be null or NUL-terminated strings; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rc_instance_parse(network: *const c_char, paths: *const c_char, out: *mut *mut RcInstance) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let inst = parse_instance(text(network, "network")?)?;
        let moves = if paths.is_null() { MovementSet::new(Vec::new()) } else { parse_paths(text(paths, "paths")?, &inst.network)? };
        let index = partition_edges(&inst.network, &inst.sites)?;
        *out = Box::into_raw(Box::new(RcInstance { inst, index, moves }));
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle from [`rc_instance_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_instance_free(inst: *mut RcInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_instance_site_count(inst: *const RcInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inst.sites.len())
}

/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_instance_path_count(inst: *const RcInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.moves.len())
}

/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_instance_subsegment_count(inst: *const RcInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.index.subsegments().len())
}

/// Index of the site labelled `label`, or `UINT32_MAX` when there is none.
///
/// # Safety
/// `inst` must be a live handle and `label` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rc_instance_site_index(inst: *const RcInstance, label: *const c_char) -> u32 {
    let (Some(i), Ok(l)) = (inst.as_ref(), text(label, "label")) else {
        return u32::MAX;
    };
    i.inst.site_by_label(l).map_or(u32::MAX, |a| a.0)
}

/// Per-path metric values of a deployment, written to `out` (capacity `cap`).
/// `*len` receives the path count.
///
/// # Safety
/// `sites` must hold `n_sites` indices; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn rc_evaluate(
    inst: *const RcInstance,
    sites: *const u32,
    n_sites: usize,
    metric: RcMetric,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> RcStatus {
    guard(|| {
        let i = handle(inst, "inst")?;
        let dep = deployment(i, sites, n_sites)?;
        let v = ctx(i).values(&objective(i, metric), &dep)?;
        write_out(&v, out, cap, len)
    })
}

/// Worst-case throughput over all paths and scenarios for a deployment, and
/// the path attaining it.
///
/// # Safety
/// `sites` must hold `n_sites` indices; `value` and `path` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rc_worst_case(
    inst: *const RcInstance,
    sites: *const u32,
    n_sites: usize,
    value: *mut f64,
    path: *mut u32,
) -> RcStatus {
    guard(|| {
        let i = handle(inst, "inst")?;
        if value.is_null() || path.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let dep = deployment(i, sites, n_sites)?;
        let model = UncertaintyModel::from_instance(&i.inst);
        let w = worst_case_overall(&i.index, &dep, &i.moves, &model, RateBasis::Deployment)
            .ok_or_else(|| Fail(RcStatus::Usage, "instance has no paths".into()))?;
        *value = w.value;
        *path = w.path.0;
        Ok(())
    })
}

unsafe fn plan_with(out: *mut *mut RcPlan, f: impl FnOnce() -> roadcast::Result<PlanResult>) -> Result<(), Fail> {
    if out.is_null() {
        return Err(invalid("out is null"));
    }
    *out = ptr::null_mut();
    let plan = f()?;
    *out = Box::into_raw(Box::new(RcPlan { plan }));
    Ok(())
}

/// Cheapest deployment found by greedy covering that reaches `lambda` on every path.
///
/// # Safety
/// `inst` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_mincost(inst: *const RcInstance, metric: RcMetric, lambda: f64, out: *mut *mut RcPlan) -> RcStatus {
    guard(|| {
        let i = handle(inst, "inst")?;
        plan_with(out, || planner::greedy_mincost(&ctx(i), &objective(i, metric), lambda, &GreedyOptions::default()))
    })
}

/// Best min-path value within `budget`, to a target resolution of `delta`.
///
/// # Safety
/// `inst` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_maxopp(
    inst: *const RcInstance,
    metric: RcMetric,
    budget: f64,
    delta: f64,
    out: *mut *mut RcPlan,
) -> RcStatus {
    guard(|| {
        let i = handle(inst, "inst")?;
        plan_with(out, || planner::maxopp_budget(&ctx(i), &objective(i, metric), budget, delta, &GreedyOptions::default()))
    })
}

/// Deployment whose worst-case throughput reaches `lambda`, planned on the
/// mean-speed scenario with the target raised in steps of `tau`.
///
/// # Safety
/// `inst` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_robust(inst: *const RcInstance, lambda: f64, tau: f64, out: *mut *mut RcPlan) -> RcStatus {
    guard(|| {
        let i = handle(inst, "inst")?;
        plan_with(out, || {
            planner::robust_mincost_meanspeed(&ctx(i), lambda, tau, RateBasis::AllCandidates, &GreedyOptions::default())
        })
    })
}

/// # Safety
/// `plan` must be null or a handle from an `rc_plan_*` call not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_free(plan: *mut RcPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_cost(plan: *const RcPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.plan.cost)
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_min_value(plan: *const RcPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.plan.min_value)
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_feasible(plan: *const RcPlan) -> bool {
    plan.as_ref().is_some_and(|p| p.plan.feasible)
}

/// Selected site indices in pick order.
///
/// # Safety
/// `plan` must be a live handle; `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_sites(plan: *const RcPlan, out: *mut u32, cap: usize, len: *mut usize) -> RcStatus {
    guard(|| {
        let p = handle(plan, "plan")?;
        let ids: Vec<u32> = p.plan.sites.iter().map(|a| a.0).collect();
        write_out(&ids, out, cap, len)
    })
}

/// Achieved per-path values.
///
/// # Safety
/// `plan` must be a live handle; `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn rc_plan_values(plan: *const RcPlan, out: *mut f64, cap: usize, len: *mut usize) -> RcStatus {
    guard(|| {
        let p = handle(plan, "plan")?;
        write_out(&p.plan.values, out, cap, len)
    })
}

/// The plan as JSON, or null on failure.
///
/// # Safety
/// `plan` must be a live handle; the caller frees the string with [`rc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rc_plan_to_json(plan: *const RcPlan) -> *mut c_char {
    match plan.as_ref().map(|p| serde_json::to_string(&p.plan)) {
        Some(Ok(s)) => CString::new(s).map_or(ptr::null_mut(), CString::into_raw),
        _ => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn rc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
