//! C ABI over the `mersp` library.
//!
//! Every fallible function returns a [`MerspStatus`]; on failure a message is
//! stored per thread and can be read with [`mersp_last_error`]. Handles are
//! opaque and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mersp::cli::{self, Orientation};
use mersp::diagscale::{self, ScalingOptions};
use mersp::instance::{self, PsiMode};
use mersp::linalg::SymMatrix;
use mersp::nlp::{self, NlpOptions, Strategy};
use mersp::simplex::SolveOptions;
use mersp::spectral::{self, SpectralOptions};
use mersp::{search, CovarianceInstance, MerspError, MerspInstance as CoreInstance};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MerspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    TooLarge = 5,
    NotPositiveDefinite = 6,
    DomainError = 7,
    DegenerateInstance = 8,
    IllPosed = 9,
    Infeasible = 10,
    NumericalFailure = 11,
    GenerationFailed = 12,
    Panic = 13,
}

impl From<&MerspError> for MerspStatus {
    fn from(e: &MerspError) -> Self {
        match e {
            MerspError::InvalidArgument(_) => MerspStatus::InvalidArgument,
            MerspError::Parse { .. } => MerspStatus::Parse,
            MerspError::Io(_) => MerspStatus::Io,
            MerspError::TooLarge { .. } => MerspStatus::TooLarge,
            MerspError::NotPositiveDefinite(_) => MerspStatus::NotPositiveDefinite,
            MerspError::DomainError(_) => MerspStatus::DomainError,
            MerspError::DegenerateInstance(_) => MerspStatus::DegenerateInstance,
            MerspError::IllPosed(_) => MerspStatus::IllPosed,
            MerspError::Infeasible => MerspStatus::Infeasible,
            MerspError::NumericalFailure(_) => MerspStatus::NumericalFailure,
            MerspError::GenerationFailed(_) => MerspStatus::GenerationFailed,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MerspStrategy {
    Identity = 0,
    Diagonal = 1,
    Trace = 2,
}

impl From<MerspStrategy> for Strategy {
    fn from(s: MerspStrategy) -> Self {
        match s {
            MerspStrategy::Identity => Strategy::Identity,
            MerspStrategy::Diagonal => Strategy::Diagonal,
            MerspStrategy::Trace => Strategy::Trace,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MerspOrientation {
    /// Complementary when the covariance is positive definite.
    Auto = 0,
    Original = 1,
    Complementary = 2,
}

impl From<MerspOrientation> for Orientation {
    fn from(o: MerspOrientation) -> Self {
        match o {
            MerspOrientation::Auto => Orientation::Auto,
            MerspOrientation::Original => Orientation::Original,
            MerspOrientation::Complementary => Orientation::Complementary,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MerspPsiMode {
    Original = 0,
    Complementary = 1,
}

/// Solver settings for the NLP bounds.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MerspNlpOptions {
    pub gamma_grid: usize,
    pub gap_tol: f64,
    pub max_iter: usize,
}

/// Joint covariance of the observable and target variables.
pub struct MerspCovariance(CovarianceInstance);

/// A subset-selection instance `(C1, C2, s)` with its offset.
pub struct MerspInstance(CoreInstance);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), MerspStatus>) -> MerspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MerspStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".into());
            MerspStatus::Panic
        }
    }
}

fn fail(e: MerspError) -> MerspStatus {
    let status = MerspStatus::from(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> MerspStatus {
    set_error(format!("{what} is null"));
    MerspStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, MerspStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), MerspStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mersp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Defaults: 50 γ values, gap tolerance 1e-6, 5000 iterations.
#[no_mangle]
pub extern "C" fn mersp_nlp_options_default() -> MerspNlpOptions {
    MerspNlpOptions { gamma_grid: 50, gap_tol: 1e-6, max_iter: 5000 }
}

impl MerspNlpOptions {
    fn to_options(self) -> Result<NlpOptions, MerspStatus> {
        if self.gamma_grid == 0 || !self.gap_tol.is_finite() || self.gap_tol <= 0.0 || self.max_iter == 0 {
            return Err(fail(MerspError::InvalidArgument("options must be positive".into())));
        }
        Ok(NlpOptions {
            gamma_grid: self.gamma_grid,
            solve: SolveOptions { gap_tol: self.gap_tol, max_iter: self.max_iter, ..SolveOptions::default() },
        })
    }
}

/// Builds a covariance handle from a row-major `(n + t) × (n + t)` matrix
/// whose last `t` rows and columns are the targets.
///
/// # Safety
/// `data` must point to `(n + t)²` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mersp_covariance_new(
    data: *const f64,
    n: usize,
    t: usize,
    out: *mut *mut MerspCovariance,
) -> MerspStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let order = n.checked_add(t).filter(|o| o.checked_mul(*o).is_some());
        let order = order.ok_or_else(|| fail(MerspError::InvalidArgument("size overflow".into())))?;
        let values = std::slice::from_raw_parts(data, order * order);
        let rows: Vec<Vec<f64>> = values.chunks(order.max(1)).map(<[f64]>::to_vec).collect();
        let cov = SymMatrix::from_rows(&rows).and_then(|c| CovarianceInstance::new(c, n, t)).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(MerspCovariance(cov))), "out")
    })
}

/// Reads a covariance file in the command-line text format.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mersp_covariance_read(path: *const c_char, out: *mut *mut MerspCovariance) -> MerspStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(MerspError::InvalidArgument("path is not UTF-8".into())))?;
        let cov = cli::read_covariance(std::path::Path::new(path)).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(MerspCovariance(cov))), "out")
    })
}

/// # Safety
/// `cov` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mersp_covariance_free(cov: *mut MerspCovariance) {
    if !cov.is_null() {
        drop(Box::from_raw(cov));
    }
}

/// Whether condition (7) holds.
///
/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mersp_covariance_condition7(cov: *const MerspCovariance, out: *mut bool) -> MerspStatus {
    guard(|| {
        let cov = deref(cov, "cov")?;
        write_out(out, instance::check_condition7(&cov.0), "out")
    })
}

/// Optimal augmentation factor ψ* in the given orientation.
///
/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mersp_covariance_psi_star(
    cov: *const MerspCovariance,
    mode: MerspPsiMode,
    out: *mut f64,
) -> MerspStatus {
    guard(|| {
        let cov = deref(cov, "cov")?;
        let mode = match mode {
            MerspPsiMode::Original => PsiMode::Original,
            MerspPsiMode::Complementary => PsiMode::Complementary,
        };
        let p = instance::psi_star(&cov.0, mode).map_err(fail)?;
        write_out(out, p.value, "out")
    })
}

/// Builds the size-`s` selection instance in the requested orientation.
///
/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mersp_instance_new(
    cov: *const MerspCovariance,
    s: usize,
    orientation: MerspOrientation,
    out: *mut *mut MerspInstance,
) -> MerspStatus {
    guard(|| {
        let cov = deref(cov, "cov")?;
        let inst = Orientation::from(orientation).resolve(&cov.0, s).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(MerspInstance(inst))), "out")
    })
}

/// # Safety
/// `inst` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mersp_instance_free(inst: *mut MerspInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// The complementary instance `(C1⁻¹, C2⁻¹, n − s)`.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mersp_instance_complement(
    inst: *const MerspInstance,
    out: *mut *mut MerspInstance,
) -> MerspStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        let comp = inst.0.complement().map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(MerspInstance(comp))), "out")
    })
}

/// Number of candidate indices `n`.
///
/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mersp_instance_n(inst: *const MerspInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.n())
}

/// Subset size `s`.
///
/// # Safety
/// `inst` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mersp_instance_s(inst: *const MerspInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.s())
}

/// Objective of a subset given as `len` zero-based indices.
///
/// # Safety
/// `subset` must point to `len` readable indices; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mersp_instance_objective(
    inst: *const MerspInstance,
    subset: *const usize,
    len: usize,
    out: *mut f64,
) -> MerspStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        if subset.is_null() && len > 0 {
            return Err(null("subset"));
        }
        let idx = if len == 0 { &[][..] } else { std::slice::from_raw_parts(subset, len) };
        write_out(out, inst.0.objective(idx).map_err(fail)?, "out")
    })
}

/// Certified NLP upper bound. When `x_hat` is non-null it receives the
/// relaxation maximizer (`n` doubles).
///
/// # Safety
/// `inst` must be a live handle; `value` must be writable; `x_hat` must be
/// null or point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mersp_nlp_bound(
    inst: *const MerspInstance,
    strategy: MerspStrategy,
    augment: bool,
    options: MerspNlpOptions,
    value: *mut f64,
    x_hat: *mut f64,
) -> MerspStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        let opts = options.to_options()?;
        let b = nlp::nlp_bound(&inst.0, strategy.into(), augment, &opts).map_err(fail)?;
        if !x_hat.is_null() {
            ptr::copy_nonoverlapping(b.x_hat.as_ptr(), x_hat, b.x_hat.len());
        }
        write_out(value, b.value, "value")
    })
}

/// Best NLP bound over the three diagonal-scaling starts; the Identity
/// strategy also optimizes the scaling. `psi_vec` may be null or receive `n`
/// doubles.
///
/// # Safety
/// As for [`mersp_nlp_bound`].
#[no_mangle]
pub unsafe extern "C" fn mersp_scaled_bound(
    inst: *const MerspInstance,
    strategy: MerspStrategy,
    augment: bool,
    options: MerspNlpOptions,
    value: *mut f64,
    psi_vec: *mut f64,
) -> MerspStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        let nlp_opts = options.to_options()?;
        let psi = nlp::augmentation_psi(&inst.0, augment).map_err(fail)?;
        let sopts = ScalingOptions { nlp: nlp_opts, ..ScalingOptions::default() };
        let (scaling, b) = diagscale::best_of_three(&inst.0, strategy.into(), psi, &sopts).map_err(fail)?;
        if !psi_vec.is_null() {
            ptr::copy_nonoverlapping(scaling.psi_vec.as_ptr(), psi_vec, scaling.psi_vec.len());
        }
        write_out(value, b.value, "value")
    })
}

/// Spectral upper bound.
///
/// # Safety
/// `inst` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mersp_spectral_bound(inst: *const MerspInstance, value: *mut f64) -> MerspStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        let r = spectral::minimize_spectral(&inst.0, &SpectralOptions::default()).map_err(fail)?;
        write_out(value, r.value, "value")
    })
}

unsafe fn write_subset(sol: &search::SubsetSolution, subset: *mut usize, value: *mut f64) -> Result<(), MerspStatus> {
    if !subset.is_null() {
        ptr::copy_nonoverlapping(sol.subset.as_ptr(), subset, sol.subset.len());
    }
    write_out(value, sol.value, "value")
}

/// Greedy plus local-search lower bound. `subset` may be null or receive `s`
/// indices.
///
/// # Safety
/// `inst` must be a live handle; `value` must be writable; `subset` must be
/// null or point to `s` writable slots.
#[no_mangle]
pub unsafe extern "C" fn mersp_lower_bound(
    inst: *const MerspInstance,
    subset: *mut usize,
    value: *mut f64,
) -> MerspStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        write_subset(&search::heuristic(&inst.0).map_err(fail)?, subset, value)
    })
}

/// Exact optimum by enumeration; fails with `TooLarge` beyond 10⁶ subsets.
///
/// # Safety
/// As for [`mersp_lower_bound`].
#[no_mangle]
pub unsafe extern "C" fn mersp_exact(inst: *const MerspInstance, subset: *mut usize, value: *mut f64) -> MerspStatus {
    guard(|| {
        let inst = deref(inst, "inst")?;
        write_subset(&search::brute_force(&inst.0).map_err(fail)?, subset, value)
    })
}
