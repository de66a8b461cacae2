//! C ABI over the `bellnoise` simulator.
//!
//! Every fallible entry point returns a [`BnStatus`]; on failure a message is
//! available from [`bn_last_error_message`] on the same thread. Objects are
//! handed out as opaque pointers and must be released with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bellnoise::bell::{optimize_psi, Binarize, ChEvaluation, ChExperiment, ChSettings, NoiseModel, Source};
use bellnoise::measurement::{exact_joint_distribution, spin_joint_distribution, GridSpec, JointIntegerDistribution};
use bellnoise::states::{SchmidtState, SpinPairState};
use bellnoise::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    InvalidConfig = 3,
    WindowOverflow = 4,
    Unsupported = 5,
    MassDeficit = 6,
    DegenerateDenominator = 7,
    NonMonotone = 8,
    CutoffNotBracketed = 9,
    CutoffMass = 10,
    Panic = 99,
}

impl From<&Error> for BnStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain { .. } => BnStatus::Domain,
            Error::InvalidConfig(_) => BnStatus::InvalidConfig,
            Error::WindowOverflow { .. } => BnStatus::WindowOverflow,
            Error::Unsupported(_) => BnStatus::Unsupported,
            Error::MassDeficit { .. } => BnStatus::MassDeficit,
            Error::DegenerateDenominator(_) => BnStatus::DegenerateDenominator,
            Error::NonMonotone { .. } => BnStatus::NonMonotone,
            Error::CutoffNotBracketed(_) => BnStatus::CutoffNotBracketed,
            Error::CutoffMass(_) => BnStatus::CutoffMass,
        }
    }
}

/// Analyzer angles in radians.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnSettings {
    pub theta: f64,
    pub phi: f64,
    pub theta_prime: f64,
    pub phi_prime: f64,
}

/// `p_pp` is ordered `(θ,φ), (θ,φ′), (θ′,φ), (θ′,φ′)`; `p_a` is `P₊^A(θ′)`,
/// `p_b` is `P₊^B(φ)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BnChEvaluation {
    pub sigma: f64,
    pub p_pp: [f64; 4],
    pub p_a: f64,
    pub p_b: f64,
    pub s: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BnSigmaCutoff {
    pub sigma_c: f64,
    pub s_at_zero: f64,
    pub violated: bool,
}

/// Four prepared distributions for one source and set of angles.
pub struct BnExperiment(ChExperiment);

/// Joint distribution of integer outcome pairs.
pub struct BnDistribution(JointIntegerDistribution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, converting errors and panics to status codes.
fn guard<F>(f: F) -> BnStatus
where
    F: FnOnce() -> Result<(), (BnStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            BnStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&msg);
            BnStatus::Panic
        }
    }
}

fn lift<T>(r: bellnoise::Result<T>) -> Result<T, (BnStatus, String)> {
    r.map_err(|e| (BnStatus::from(&e), e.to_string()))
}

fn null(name: &str) -> (BnStatus, String) {
    (BnStatus::NullPointer, format!("{name} is NULL"))
}

fn settings_from(s: BnSettings) -> Result<ChSettings, (BnStatus, String)> {
    lift(ChSettings::new(s.theta, s.phi, s.theta_prime, s.phi_prime))
}

fn evaluation_to_c(e: &ChEvaluation) -> BnChEvaluation {
    BnChEvaluation {
        sigma: e.sigma,
        p_pp: e.p_pp,
        p_a: e.p_a,
        p_b: e.p_b,
        s: e.s,
    }
}

/// # Safety
/// `out` must be NULL or a valid pointer to writable storage for one handle.
unsafe fn store_experiment(out: *mut *mut BnExperiment, exp: ChExperiment) {
    *out = Box::into_raw(Box::new(BnExperiment(exp)));
}

/// Default pair-coherent settings `(0, −π/4, π/2, −3π/4)`.
#[no_mangle]
pub extern "C" fn bn_settings_pair_coherent_default() -> BnSettings {
    let s = ChSettings::pair_coherent_default();
    BnSettings {
        theta: s.theta,
        phi: s.phi,
        theta_prime: s.theta_prime,
        phi_prime: s.phi_prime,
    }
}

/// Pair-coherent source in the large-oscillator limit on the standard grid.
/// Noise passed to later calls is in quadrature units.
///
/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_experiment_new_quadrature(
    r0: f64,
    tail_tol: f64,
    settings: BnSettings,
    eta: f64,
    out: *mut *mut BnExperiment,
) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let state = lift(SchmidtState::pair_coherent(r0, 1.0, 1.0, tail_tol))?;
        let source = Source::Quadrature {
            state,
            grid: GridSpec::standard(),
        };
        let exp = lift(ChExperiment::prepare(&source, settings_from(settings)?, eta))?;
        store_experiment(out, exp);
        Ok(())
    })
}

/// Pair-coherent source with finite oscillators `α = β = alpha` (at most 12).
///
/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_experiment_new_exact(
    r0: f64,
    alpha: f64,
    tail_tol: f64,
    settings: BnSettings,
    out: *mut *mut BnExperiment,
) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let state = lift(SchmidtState::pair_coherent(r0, alpha, alpha, tail_tol))?;
        let exp = lift(ChExperiment::prepare(&Source::Exact(state), settings_from(settings)?, 1.0))?;
        store_experiment(out, exp);
        Ok(())
    })
}

/// Spin-pair source with `n` photons per side.
///
/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_experiment_new_spin(n: u32, settings: BnSettings, out: *mut *mut BnExperiment) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let state = lift(SpinPairState::new(n))?;
        let exp = lift(ChExperiment::prepare(&Source::Spin(state), settings_from(settings)?, 1.0))?;
        store_experiment(out, exp);
        Ok(())
    })
}

/// # Safety
/// `exp` must be a live handle from a `bn_experiment_new_*` call and `out`
/// must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bn_experiment_evaluate(
    exp: *const BnExperiment,
    sigma: f64,
    out: *mut BnChEvaluation,
) -> BnStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = lift(exp.0.evaluate(sigma))?;
        *out = evaluation_to_c(&e);
        Ok(())
    })
}

/// Largest noise width with `S > 1`; `tol` is relative to the noise scale
/// and must lie in `(0, 1e-3]`.
///
/// # Safety
/// `exp` must be a live handle and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bn_experiment_sigma_cutoff(
    exp: *const BnExperiment,
    tol: f64,
    out: *mut BnSigmaCutoff,
) -> BnStatus {
    guard(|| {
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = lift(exp.0.sigma_cutoff(tol))?;
        *out = BnSigmaCutoff {
            sigma_c: c.sigma_c,
            s_at_zero: c.s_at_zero,
            violated: c.violated,
        };
        Ok(())
    })
}

/// # Safety
/// `exp` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bn_experiment_free(exp: *mut BnExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Maximizes `S` over settings `(0, ψ, 2ψ, 3ψ)` for the spin-pair state.
///
/// # Safety
/// `psi_out` and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bn_spin_optimize_psi(
    n: u32,
    sigma: f64,
    psi_out: *mut f64,
    out: *mut BnChEvaluation,
) -> BnStatus {
    guard(|| {
        if psi_out.is_null() || out.is_null() {
            return Err(null("output pointer"));
        }
        let state = lift(SpinPairState::new(n))?;
        let best = lift(optimize_psi(&state, &lift(NoiseModel::readout(sigma))?))?;
        *psi_out = best.psi;
        *out = evaluation_to_c(&best.evaluation);
        Ok(())
    })
}

/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_distribution_exact(
    r0: f64,
    alpha: f64,
    tail_tol: f64,
    theta: f64,
    phi: f64,
    out: *mut *mut BnDistribution,
) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let state = lift(SchmidtState::pair_coherent(r0, alpha, alpha, tail_tol))?;
        let d = lift(exact_joint_distribution(&state, theta, phi))?;
        *out = Box::into_raw(Box::new(BnDistribution(d)));
        Ok(())
    })
}

/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn bn_distribution_spin(n: u32, theta: f64, phi: f64, out: *mut *mut BnDistribution) -> BnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = lift(spin_joint_distribution(&lift(SpinPairState::new(n))?, theta, phi))?;
        *out = Box::into_raw(Box::new(BnDistribution(d)));
        Ok(())
    })
}

/// Outcome window `i_min..=i_max`, `j_min..=j_max`.
///
/// # Safety
/// `dist` must be a live handle; the four outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn bn_distribution_window(
    dist: *const BnDistribution,
    i_min: *mut i64,
    i_max: *mut i64,
    j_min: *mut i64,
    j_max: *mut i64,
) -> BnStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("distribution"))?;
        if i_min.is_null() || i_max.is_null() || j_min.is_null() || j_max.is_null() {
            return Err(null("output pointer"));
        }
        let w = d.0.window();
        *i_min = w.0;
        *i_max = w.1;
        *j_min = w.2;
        *j_max = w.3;
        Ok(())
    })
}

/// Probability of `(i, j)`; 0 outside the window or for a NULL handle.
///
/// # Safety
/// `dist` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bn_distribution_get(dist: *const BnDistribution, i: i64, j: i64) -> f64 {
    dist.as_ref().map_or(0.0, |d| d.0.get(i, j))
}

/// # Safety
/// `dist` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn bn_distribution_binarize(
    dist: *const BnDistribution,
    sigma: f64,
    p_pp: *mut f64,
    p_a: *mut f64,
    p_b: *mut f64,
) -> BnStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("distribution"))?;
        if p_pp.is_null() || p_a.is_null() || p_b.is_null() {
            return Err(null("output pointer"));
        }
        let noise = lift(NoiseModel::readout(sigma))?;
        let b = d.0.binarize(noise.sigma());
        *p_pp = b.p_pp;
        *p_a = b.p_a;
        *p_b = b.p_b;
        Ok(())
    })
}

/// # Safety
/// `dist` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bn_distribution_free(dist: *mut BnDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Message for the most recent failure on this thread, empty after success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn bn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bn_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
