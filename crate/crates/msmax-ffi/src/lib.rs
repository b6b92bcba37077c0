//! C ABI for the `msmax` library.
//!
//! The surface follows the usual opaque-handle pattern: grid functions,
//! exponent profiles, and verification reports live behind pointers that C
//! callers create, query, and free through `extern "C"` entry points. Every
//! fallible call returns an `int` status (`MSMAX_OK` on success); the
//! accompanying message is retrievable via [`msmax_last_error`] until the
//! next call on the same thread. Strings returned as `char*` are allocated
//! here and must be released with [`msmax_string_free`]; handles have their
//! own `*_free` functions. All entry points catch panics, so no unwinding
//! crosses the boundary.
//!
//! The build script generates `include/msmax.h` from these declarations via
//! cbindgen.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use msmax::grid::GridFunction;
use msmax::harness::{self, Scenario, VerificationReport};
use msmax::maximal::{self, ExponentProfile, Family};
use msmax::weights::{self, WeightSpec, WeightVector};
use msmax::{fracint, Error};

/// Call completed successfully.
pub const MSMAX_OK: i32 = 0;
/// An internal invariant failed; the library state is still usable.
pub const MSMAX_ERR_INTERNAL: i32 = 1;
/// Operands live on different grids or have mismatched lengths.
pub const MSMAX_ERR_SHAPE: i32 = 2;
/// An index lies outside the grid.
pub const MSMAX_ERR_BOUNDS: i32 = 3;
/// An argument value is not acceptable (including null pointers).
pub const MSMAX_ERR_INVALID: i32 = 4;
/// A numeric domain constraint was violated.
pub const MSMAX_ERR_DOMAIN: i32 = 5;
/// A file could not be read.
pub const MSMAX_ERR_IO: i32 = 6;
/// Text failed to parse (weight spec, scenario, check id).
pub const MSMAX_ERR_PARSE: i32 = 7;

/// Piecewise-constant function on a uniform dyadic grid over the unit box.
pub struct MsmaxFunction(GridFunction);

/// Exponent profile `(n, alpha, p_1..p_m, q)` shared by the operators.
pub struct MsmaxProfile(ExponentProfile);

/// Rendered result of one verification scenario run.
pub struct MsmaxReport(VerificationReport);

/// Rectangle family over which suprema are taken.
#[repr(C)]
#[derive(Clone, Copy)]
pub enum MsmaxFamily {
    /// All cell-aligned rectangles.
    All = 0,
    /// Dyadic rectangles only.
    Dyadic = 1,
}

/// Operator selector for [`msmax_maximal`].
#[repr(C)]
#[derive(Clone, Copy)]
pub enum MsmaxOperator {
    /// Strong maximal operator over all cell-aligned rectangles.
    Strong = 0,
    /// Strong maximal operator over dyadic rectangles.
    StrongDyadic = 1,
    /// Strong maximal operator truncated at scale `2^truncation`.
    StrongTruncated = 2,
    /// Cube maximal operator (equal per-axis cell counts).
    Cube = 3,
    /// Dyadic cube maximal operator.
    CubeDyadic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

fn fail(code: i32, msg: &str) -> i32 {
    set_last_error(msg);
    code
}

fn fail_err(err: Error) -> i32 {
    let code = err.code();
    set_last_error(&err.to_string());
    code
}

/// Runs `body` with panic isolation and the error slot cleared first.
fn guarded(body: impl FnOnce() -> i32) -> i32 {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => fail(MSMAX_ERR_INTERNAL, "internal panic"),
    }
}

unsafe fn ref_from<'a, T>(ptr: *const T) -> Option<&'a T> {
    ptr.as_ref()
}

unsafe fn str_from<'a>(ptr: *const c_char) -> Result<&'a str, i32> {
    if ptr.is_null() {
        return Err(fail(MSMAX_ERR_INVALID, "string argument is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(MSMAX_ERR_INVALID, "string argument is not valid UTF-8"))
}

unsafe fn slice_from<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], i32> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(MSMAX_ERR_INVALID, &format!("{what} pointer is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Collects `m` borrowed function handles into owned grid functions.
unsafe fn functions_from(
    fs: *const *const MsmaxFunction,
    m: usize,
) -> Result<Vec<GridFunction>, i32> {
    let handles = slice_from(fs, m, "function array")?;
    let mut out = Vec::with_capacity(m);
    for (i, &h) in handles.iter().enumerate() {
        match ref_from(h) {
            Some(f) => out.push(f.0.clone()),
            None => return Err(fail(MSMAX_ERR_INVALID, &format!("function {i} is null"))),
        }
    }
    Ok(out)
}

fn write_out<T>(out: *mut T, value: T, what: &str) -> i32 {
    if out.is_null() {
        return fail(MSMAX_ERR_INVALID, &format!("{what} out-pointer is null"));
    }
    // SAFETY: Caller guarantees `out` is writable; checked non-null above.
    unsafe { out.write(value) };
    MSMAX_OK
}

fn export_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(std::ptr::null_mut(), CString::into_raw)
}

impl From<Family> for MsmaxFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::All => MsmaxFamily::All,
            Family::Dyadic => MsmaxFamily::Dyadic,
        }
    }
}

impl From<MsmaxFamily> for Family {
    fn from(f: MsmaxFamily) -> Self {
        match f {
            MsmaxFamily::All => Family::All,
            MsmaxFamily::Dyadic => Family::Dyadic,
        }
    }
}

/// Returns the crate version as a static string; never fails.
#[no_mangle]
pub extern "C" fn msmax_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns the message of the most recent failure on this thread, or an
/// empty string after a success. The pointer stays valid until the next
/// `msmax_*` call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn msmax_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by one of the `char*`-producing functions.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library's
/// string-producing functions ([`msmax_report_render`],
/// [`msmax_report_constants_tsv`]) and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn msmax_string_free(s: *mut c_char) {
    if s.is_null() {
        return;
    }
    // SAFETY: Caller guarantees `s` came from `CString::into_raw` here.
    let _ = CString::from_raw(s);
}

/// Creates a grid function from explicit per-axis depths and cell values.
///
/// `levels` holds `dims` per-axis dyadic depths (axis `j` has `2^levels[j]`
/// cells); `values` holds all `prod_j 2^levels[j]` cell values with axis 0
/// slowest. The function lives on the unit box anchored at the origin. On
/// success `*out` owns the new handle.
///
/// # Safety
/// `levels` must point to `dims` readable bytes, `values` to `value_count`
/// readable doubles, and `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_new(
    levels: *const u8,
    dims: usize,
    values: *const f64,
    value_count: usize,
    out: *mut *mut MsmaxFunction,
) -> i32 {
    guarded(|| {
        let levels = match slice_from(levels, dims, "levels") {
            Ok(l) => l,
            Err(code) => return code,
        };
        let values = match slice_from(values, value_count, "values") {
            Ok(v) => v.to_vec(),
            Err(code) => return code,
        };
        let origin = vec![0.0; levels.len()];
        match GridFunction::new(levels, &origin, values) {
            Ok(f) => write_out(out, Box::into_raw(Box::new(MsmaxFunction(f))), "function"),
            Err(e) => fail_err(e),
        }
    })
}

/// Creates the constant function `value` on the grid with the given depths.
///
/// # Safety
/// `levels` must point to `dims` readable bytes and `out` to a writable
/// pointer slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_constant(
    levels: *const u8,
    dims: usize,
    value: f64,
    out: *mut *mut MsmaxFunction,
) -> i32 {
    guarded(|| {
        let levels = match slice_from(levels, dims, "levels") {
            Ok(l) => l,
            Err(code) => return code,
        };
        match GridFunction::constant(levels, value) {
            Ok(f) => write_out(out, Box::into_raw(Box::new(MsmaxFunction(f))), "function"),
            Err(e) => fail_err(e),
        }
    })
}

/// Generates a weight from a textual spec such as `const:c=1`,
/// `power:a=0.5`, or `martingale:seed=5,depth=4,low=0.3,high=0.7`, realized
/// on the grid with the given depths.
///
/// # Safety
/// `spec` must be a NUL-terminated string, `levels` must point to `dims`
/// readable bytes, and `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_from_spec(
    spec: *const c_char,
    levels: *const u8,
    dims: usize,
    out: *mut *mut MsmaxFunction,
) -> i32 {
    guarded(|| {
        let spec = match str_from(spec) {
            Ok(s) => s,
            Err(code) => return code,
        };
        let levels = match slice_from(levels, dims, "levels") {
            Ok(l) => l,
            Err(code) => return code,
        };
        let origin = vec![0.0; levels.len()];
        let built = WeightSpec::parse(spec).and_then(|w| w.generate(levels, &origin));
        match built {
            Ok(f) => write_out(out, Box::into_raw(Box::new(MsmaxFunction(f))), "function"),
            Err(e) => fail_err(e),
        }
    })
}

/// Number of axes of the function's grid; 0 when `f` is null.
///
/// # Safety
/// `f` must be null or a valid function handle.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_dims(f: *const MsmaxFunction) -> usize {
    ref_from(f).map_or(0, |f| f.0.dims())
}

/// Total number of cells (= length of the value buffer); 0 when `f` is null.
///
/// # Safety
/// `f` must be null or a valid function handle.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_value_count(f: *const MsmaxFunction) -> usize {
    ref_from(f).map_or(0, |f| f.0.total_cells())
}

/// Copies the per-axis depths into `out`, which must hold `dims` bytes
/// (query with [`msmax_function_dims`]).
///
/// # Safety
/// `out` must point to `dims` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_levels(
    f: *const MsmaxFunction,
    out: *mut u8,
    dims: usize,
) -> i32 {
    guarded(|| {
        let Some(f) = ref_from(f) else {
            return fail(MSMAX_ERR_INVALID, "function handle is null");
        };
        if dims != f.0.dims() {
            return fail(
                MSMAX_ERR_SHAPE,
                &format!("buffer holds {dims} entries, function has {}", f.0.dims()),
            );
        }
        if out.is_null() {
            return fail(MSMAX_ERR_INVALID, "levels out-pointer is null");
        }
        std::ptr::copy_nonoverlapping(f.0.levels().as_ptr(), out, dims);
        MSMAX_OK
    })
}

/// Copies all cell values into `out`, which must hold `value_count` doubles
/// (query with [`msmax_function_value_count`]). Axis 0 varies slowest.
///
/// # Safety
/// `out` must point to `value_count` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_values(
    f: *const MsmaxFunction,
    out: *mut f64,
    value_count: usize,
) -> i32 {
    guarded(|| {
        let Some(f) = ref_from(f) else {
            return fail(MSMAX_ERR_INVALID, "function handle is null");
        };
        if value_count != f.0.total_cells() {
            return fail(
                MSMAX_ERR_SHAPE,
                &format!(
                    "buffer holds {value_count} entries, function has {}",
                    f.0.total_cells()
                ),
            );
        }
        if out.is_null() {
            return fail(MSMAX_ERR_INVALID, "values out-pointer is null");
        }
        std::ptr::copy_nonoverlapping(f.0.values().as_ptr(), out, value_count);
        MSMAX_OK
    })
}

/// Lebesgue integral of the function over the unit box.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_integral(f: *const MsmaxFunction, out: *mut f64) -> i32 {
    guarded(|| {
        let Some(f) = ref_from(f) else {
            return fail(MSMAX_ERR_INVALID, "function handle is null");
        };
        write_out(out, f.0.integral(), "integral")
    })
}

/// Releases a function handle; a null pointer is ignored.
///
/// # Safety
/// `f` must be null or a handle returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn msmax_function_free(f: *mut MsmaxFunction) {
    if f.is_null() {
        return;
    }
    // SAFETY: Caller guarantees `f` came from `Box::into_raw` here.
    let _ = Box::from_raw(f);
}

/// Creates an exponent profile with an explicit target exponent `q`.
///
/// `p` holds `m` per-slot exponents in `(1, inf)`; the profile validates
/// `0 <= alpha/n < m` and the usual exponent constraints.
///
/// # Safety
/// `p` must point to `m` readable doubles and `out` to a writable pointer
/// slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_profile_new(
    n: usize,
    alpha: f64,
    p: *const f64,
    m: usize,
    q: f64,
    out: *mut *mut MsmaxProfile,
) -> i32 {
    guarded(|| {
        let p = match slice_from(p, m, "exponents") {
            Ok(p) => p,
            Err(code) => return code,
        };
        match ExponentProfile::new(n, alpha, p, q) {
            Ok(prof) => write_out(out, Box::into_raw(Box::new(MsmaxProfile(prof))), "profile"),
            Err(e) => fail_err(e),
        }
    })
}

/// Creates a profile whose `q` is derived from the scaling relation
/// `1/q = 1/p - alpha/n` (requires `1/p > alpha/n`).
///
/// # Safety
/// `p` must point to `m` readable doubles and `out` to a writable pointer
/// slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_profile_one_weight(
    n: usize,
    alpha: f64,
    p: *const f64,
    m: usize,
    out: *mut *mut MsmaxProfile,
) -> i32 {
    guarded(|| {
        let p = match slice_from(p, m, "exponents") {
            Ok(p) => p,
            Err(code) => return code,
        };
        match ExponentProfile::one_weight(n, alpha, p) {
            Ok(prof) => write_out(out, Box::into_raw(Box::new(MsmaxProfile(prof))), "profile"),
            Err(e) => fail_err(e),
        }
    })
}

/// Target exponent `q` of the profile (derived for one-weight profiles).
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn msmax_profile_q(prof: *const MsmaxProfile, out: *mut f64) -> i32 {
    guarded(|| {
        let Some(prof) = ref_from(prof) else {
            return fail(MSMAX_ERR_INVALID, "profile handle is null");
        };
        write_out(out, prof.0.q(), "q")
    })
}

/// Releases a profile handle; a null pointer is ignored.
///
/// # Safety
/// `prof` must be null or a handle returned by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn msmax_profile_free(prof: *mut MsmaxProfile) {
    if prof.is_null() {
        return;
    }
    // SAFETY: Caller guarantees `prof` came from `Box::into_raw` here.
    let _ = Box::from_raw(prof);
}

/// Applies a maximal operator to an `m`-tuple of functions on one grid.
///
/// `truncation` is read only for `MSMAX_OPERATOR_STRONG_TRUNCATED`, where
/// per-axis side lengths are capped at `2^truncation` (negative values allowed;
/// caps below one cell yield the zero function). On success `*out` owns the
/// pointwise operator output on the same grid.
///
/// # Safety
/// `fs` must point to `m` readable non-null function handles, `prof` must be
/// a valid profile handle, and `out` must point to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_maximal(
    op: MsmaxOperator,
    truncation: i32,
    fs: *const *const MsmaxFunction,
    m: usize,
    prof: *const MsmaxProfile,
    out: *mut *mut MsmaxFunction,
) -> i32 {
    guarded(|| {
        let functions = match functions_from(fs, m) {
            Ok(v) => v,
            Err(code) => return code,
        };
        let Some(prof) = ref_from(prof) else {
            return fail(MSMAX_ERR_INVALID, "profile handle is null");
        };
        let result = match op {
            MsmaxOperator::Strong => maximal::strong_maximal(&functions, &prof.0),
            MsmaxOperator::StrongDyadic => maximal::strong_maximal_dyadic(&functions, &prof.0),
            MsmaxOperator::StrongTruncated => {
                maximal::strong_maximal_truncated(&functions, &prof.0, truncation)
            }
            MsmaxOperator::Cube => maximal::cube_maximal(&functions, &prof.0),
            MsmaxOperator::CubeDyadic => maximal::cube_maximal_dyadic(&functions, &prof.0),
        };
        match result {
            Ok(g) => write_out(out, Box::into_raw(Box::new(MsmaxFunction(g))), "result"),
            Err(e) => fail_err(e),
        }
    })
}

/// Multilinear fractional integral of an `m`-tuple by midpoint quadrature,
/// evaluated at every grid cell.
///
/// # Safety
/// `fs` must point to `m` readable non-null function handles, `prof` must be
/// a valid profile handle, and `out` must point to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_fractional_integral(
    fs: *const *const MsmaxFunction,
    m: usize,
    prof: *const MsmaxProfile,
    out: *mut *mut MsmaxFunction,
) -> i32 {
    guarded(|| {
        let functions = match functions_from(fs, m) {
            Ok(v) => v,
            Err(code) => return code,
        };
        let Some(prof) = ref_from(prof) else {
            return fail(MSMAX_ERR_INVALID, "profile handle is null");
        };
        match fracint::fractional_integral(&functions, &prof.0) {
            Ok(g) => write_out(out, Box::into_raw(Box::new(MsmaxFunction(g))), "result"),
            Err(e) => fail_err(e),
        }
    })
}

/// Weak `L^q(nu)` quasi-norm estimate of `g`: the supremum over positive
/// levels `t` of `t * nu({g > t})^{1/q}`.
///
/// # Safety
/// `g` and `nu` must be valid function handles and `out` must point to a
/// writable double.
#[no_mangle]
pub unsafe extern "C" fn msmax_weak_norm(
    g: *const MsmaxFunction,
    nu: *const MsmaxFunction,
    q: f64,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let (Some(g), Some(nu)) = (ref_from(g), ref_from(nu)) else {
            return fail(MSMAX_ERR_INVALID, "function handle is null");
        };
        match maximal::weak_norm_estimate(&g.0, &nu.0, q) {
            Ok(v) => write_out(out, v, "norm"),
            Err(e) => fail_err(e),
        }
    })
}

/// Hölder conjugate `p' = p / (p - 1)`.
#[no_mangle]
pub extern "C" fn msmax_conjugate(p: f64) -> f64 {
    maximal::conjugate(p)
}

/// Muckenhoupt-type constant of a single weight over the chosen rectangle
/// family.
///
/// # Safety
/// `w` must be a valid function handle and `out` must point to a writable
/// double.
#[no_mangle]
pub unsafe extern "C" fn msmax_a_p_constant(
    w: *const MsmaxFunction,
    p: f64,
    family: MsmaxFamily,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let Some(w) = ref_from(w) else {
            return fail(MSMAX_ERR_INVALID, "function handle is null");
        };
        match weights::a_p_rect_constant(&w.0, p, family.into()) {
            Ok(report) => write_out(out, report.value, "constant"),
            Err(e) => fail_err(e),
        }
    })
}

/// Joint Muckenhoupt-type constant of an `m`-tuple of weights under the
/// given profile, over the chosen rectangle family.
///
/// # Safety
/// `ws` must point to `m` readable non-null function handles, `prof` must be
/// a valid profile handle, and `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn msmax_a_pq_constant(
    ws: *const *const MsmaxFunction,
    m: usize,
    prof: *const MsmaxProfile,
    family: MsmaxFamily,
    out: *mut f64,
) -> i32 {
    guarded(|| {
        let weights_vec = match functions_from(ws, m) {
            Ok(v) => v,
            Err(code) => return code,
        };
        let Some(prof) = ref_from(prof) else {
            return fail(MSMAX_ERR_INVALID, "profile handle is null");
        };
        let result = WeightVector::new(weights_vec)
            .and_then(|wv| weights::a_pq_rect_constant(&wv, &prof.0, family.into()));
        match result {
            Ok(report) => write_out(out, report.value, "constant"),
            Err(e) => fail_err(e),
        }
    })
}

/// Smallest ratio `w(parent) / w(child)` over dyadic parent rectangles and
/// their children, a reverse-doubling diagnostic (equals `2^n` for constant
/// weights).
///
/// # Safety
/// `w` must be a valid function handle and `out` must point to a writable
/// double.
#[no_mangle]
pub unsafe extern "C" fn msmax_reverse_doubling(w: *const MsmaxFunction, out: *mut f64) -> i32 {
    guarded(|| {
        let Some(w) = ref_from(w) else {
            return fail(MSMAX_ERR_INVALID, "function handle is null");
        };
        match weights::reverse_doubling_constant(&w.0) {
            Ok(v) => write_out(out, v, "constant"),
            Err(e) => fail_err(e),
        }
    })
}

/// Predicted reverse-doubling constant for the dual of a weight whose
/// normalised rectangle constant is `k` (see the library docs for the
/// closed form).
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn msmax_rd_prediction(k: f64, p: f64, n: usize, out: *mut f64) -> i32 {
    guarded(|| match weights::rd_prediction(k, p, n) {
        Ok(v) => write_out(out, v, "prediction"),
        Err(e) => fail_err(e),
    })
}

/// Auxiliary exponents of a profile satisfying the scaling relation:
/// writes the joint exponent to `*r` and the `m` per-slot exponents to
/// `r_i`.
///
/// # Safety
/// `prof` must be a valid profile handle, `r` must point to a writable
/// double, and `r_i` must point to `m` writable doubles where `m` matches
/// the profile's slot count.
#[no_mangle]
pub unsafe extern "C" fn msmax_derived_exponents(
    prof: *const MsmaxProfile,
    r: *mut f64,
    r_i: *mut f64,
    m: usize,
) -> i32 {
    guarded(|| {
        let Some(prof) = ref_from(prof) else {
            return fail(MSMAX_ERR_INVALID, "profile handle is null");
        };
        if m != prof.0.m() {
            return fail(
                MSMAX_ERR_SHAPE,
                &format!("buffer holds {m} entries, profile has {}", prof.0.m()),
            );
        }
        if r.is_null() || r_i.is_null() {
            return fail(MSMAX_ERR_INVALID, "exponent out-pointer is null");
        }
        match weights::derived_exponents(&prof.0) {
            Ok(d) => {
                r.write(d.r);
                std::ptr::copy_nonoverlapping(d.r_i.as_ptr(), r_i, m);
                MSMAX_OK
            }
            Err(e) => fail_err(e),
        }
    })
}

/// Number of built-in verification checks.
#[no_mangle]
pub extern "C" fn msmax_check_count() -> usize {
    harness::CHECK_IDS.len()
}

/// Name of the built-in check at `index`, or null when out of range. The
/// pointer is static; do not free it.
#[no_mangle]
pub extern "C" fn msmax_check_id(index: usize) -> *const c_char {
    static IDS: OnceLock<Vec<CString>> = OnceLock::new();
    let ids = IDS.get_or_init(|| {
        harness::CHECK_IDS
            .iter()
            .map(|id| CString::new(*id).expect("check ids contain no NUL"))
            .collect()
    });
    ids.get(index).map_or(std::ptr::null(), |s| s.as_ptr())
}

fn run_and_box(scenario: &Scenario, out: *mut *mut MsmaxReport) -> i32 {
    match harness::run_scenario(scenario) {
        Ok(report) => write_out(out, Box::into_raw(Box::new(MsmaxReport(report))), "report"),
        Err(e) => fail_err(e),
    }
}

/// Runs one built-in check by name with its default scenario. `seed` may be
/// null to keep the scenario's own seed, or point to an override.
///
/// A successful return means the scenario executed; query the verdict with
/// [`msmax_report_passed`].
///
/// # Safety
/// `check` must be a NUL-terminated string, `seed` null or readable, and
/// `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_run_check(
    check: *const c_char,
    seed: *const u64,
    out: *mut *mut MsmaxReport,
) -> i32 {
    guarded(|| {
        let check = match str_from(check) {
            Ok(s) => s,
            Err(code) => return code,
        };
        let mut scenario = match Scenario::default_for(check) {
            Ok(s) => s,
            Err(e) => return fail_err(e),
        };
        if let Some(&s) = ref_from(seed) {
            scenario.seed = s;
        }
        run_and_box(&scenario, out)
    })
}

/// Parses scenario TOML text and runs it.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_run_scenario_text(
    text: *const c_char,
    out: *mut *mut MsmaxReport,
) -> i32 {
    guarded(|| {
        let text = match str_from(text) {
            Ok(s) => s,
            Err(code) => return code,
        };
        match Scenario::parse(text) {
            Ok(s) => run_and_box(&s, out),
            Err(e) => fail_err(e),
        }
    })
}

/// Loads a scenario TOML file and runs it.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn msmax_run_scenario_file(
    path: *const c_char,
    out: *mut *mut MsmaxReport,
) -> i32 {
    guarded(|| {
        let path = match str_from(path) {
            Ok(s) => s,
            Err(code) => return code,
        };
        match Scenario::load(std::path::Path::new(path)) {
            Ok(s) => run_and_box(&s, out),
            Err(e) => fail_err(e),
        }
    })
}

/// Whether every check line in the report passed; false for a null handle.
///
/// # Safety
/// `report` must be null or a valid report handle.
#[no_mangle]
pub unsafe extern "C" fn msmax_report_passed(report: *const MsmaxReport) -> bool {
    ref_from(report).is_some_and(|r| r.0.passed())
}

/// Renders the full line-oriented report. Returns a newly allocated string
/// (free with [`msmax_string_free`]) or null on failure.
///
/// # Safety
/// `report` must be null or a valid report handle.
#[no_mangle]
pub unsafe extern "C" fn msmax_report_render(report: *const MsmaxReport) -> *mut c_char {
    clear_last_error();
    let Some(report) = ref_from(report) else {
        set_last_error("report handle is null");
        return std::ptr::null_mut();
    };
    catch_unwind(AssertUnwindSafe(|| export_string(report.0.render()))).unwrap_or_else(|_| {
        set_last_error("internal panic");
        std::ptr::null_mut()
    })
}

/// Renders the report's named constants as tab-separated `name value
/// witness` rows. Returns a newly allocated string (free with
/// [`msmax_string_free`]) or null on failure.
///
/// # Safety
/// `report` must be null or a valid report handle.
#[no_mangle]
pub unsafe extern "C" fn msmax_report_constants_tsv(report: *const MsmaxReport) -> *mut c_char {
    clear_last_error();
    let Some(report) = ref_from(report) else {
        set_last_error("report handle is null");
        return std::ptr::null_mut();
    };
    catch_unwind(AssertUnwindSafe(|| export_string(report.0.constants_tsv()))).unwrap_or_else(
        |_| {
            set_last_error("internal panic");
            std::ptr::null_mut()
        },
    )
}

/// Releases a report handle; a null pointer is ignored.
///
/// # Safety
/// `report` must be null or a handle returned by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn msmax_report_free(report: *mut MsmaxReport) {
    if report.is_null() {
        return;
    }
    // SAFETY: Caller guarantees `report` came from `Box::into_raw` here.
    let _ = Box::from_raw(report);
}
