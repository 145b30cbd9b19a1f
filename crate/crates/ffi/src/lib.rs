//! C ABI over the debtor-strategy engine.
//!
//! Every function returns a [`DsStatus`]. On failure the message is kept in
//! a thread-local buffer readable through [`ds_last_error`]. Policies are
//! opaque handles created by [`ds_policy_new`] or [`ds_policy_from_json`]
//! and released with [`ds_policy_free`]; a handle may be shared between
//! threads, calls on it are serialized. Strings returned through `out`
//! parameters are owned by the caller and released with [`ds_string_free`].
//!
//! Typologies cross the boundary as four-letter labels ("WAOR"), actions as
//! arm indices in `0..DS_ARM_COUNT` (see [`ds_arm_name`]).

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;

use debtor_strategy::policy::{Action, Channel, Outcome, PolicyConfig, PolicySnapshot, PolicyState, RewardMode, ARMS};
use debtor_strategy::rng::{stream, Stream};
use debtor_strategy::scoring::Typology;
use debtor_strategy::stats::{chi_square, ContingencyTable};
use debtor_strategy::{Error, ErrorClass};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid configuration: bad prior or reward mode, empty eligible set, bad snapshot.
    Config = 2,
    /// Malformed input: bad typology label, arm index or channel, zero table marginal.
    Input = 3,
    /// Internal invariant violated.
    Internal = 4,
    /// A panic was caught at the boundary; the handle should be discarded.
    Panic = 5,
}

pub const DS_ARM_COUNT: u32 = 25;
const _: () = assert!(DS_ARM_COUNT as usize == ARMS);
pub const DS_LABEL_LEN: usize = 5;

pub const DS_CHANNEL_EMAIL: u32 = 0;
pub const DS_CHANNEL_LETTER: u32 = 1;

pub const DS_REWARD_REACTION: u32 = 0;
pub const DS_REWARD_PAYMENT: u32 = 1;

/// Opaque policy handle.
pub struct DsPolicy {
    inner: Mutex<PolicySnapshot>,
}

/// Pearson chi-square result.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DsChiSquare {
    pub statistic: f64,
    pub df: u64,
    pub n: u64,
    pub p_value: f64,
    /// Nonzero when some expected count is below five.
    pub low_expected: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(DsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.class() {
            ErrorClass::Config => DsStatus::Config,
            ErrorClass::Input => DsStatus::Input,
            ErrorClass::Internal => DsStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic in debtor-strategy");
            DsStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(DsStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DsStatus::Input, format!("`{name}` is not UTF-8")))
}

unsafe fn typology_arg(p: *const c_char) -> Result<Typology, Failure> {
    Ok(str_arg(p, "typology")?.parse()?)
}

fn arm_arg(arm: u32) -> Result<Action, Failure> {
    Action::from_arm_index(arm as usize)
        .ok_or_else(|| Failure(DsStatus::Input, format!("arm index {arm} out of range 0..{DS_ARM_COUNT}")))
}

unsafe fn policy_arg<'a>(p: *const DsPolicy) -> Result<&'a DsPolicy, Failure> {
    p.as_ref().ok_or_else(|| null("policy"))
}

fn lock(p: &DsPolicy) -> Result<std::sync::MutexGuard<'_, PolicySnapshot>, Failure> {
    p.inner
        .lock()
        .map_err(|_| Failure(DsStatus::Internal, "policy lock poisoned".into()))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(DsStatus::Internal, "string contains NUL".into()))
}

/// Message of the last failed call on this thread. Empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Create a policy with a Beta(prior_alpha, prior_beta) prior on every arm.
/// The random stream is derived from `seed` the same way the simulator does.
#[no_mangle]
pub unsafe extern "C" fn ds_policy_new(
    epsilon: f64,
    prior_alpha: f64,
    prior_beta: f64,
    reward: u32,
    seed: u64,
    out: *mut *mut DsPolicy,
) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let reward = match reward {
            DS_REWARD_REACTION => RewardMode::Reaction,
            DS_REWARD_PAYMENT => RewardMode::Payment,
            other => return Err(Failure(DsStatus::Config, format!("unknown reward mode {other}"))),
        };
        let state = PolicyState::new(PolicyConfig {
            epsilon,
            prior_alpha,
            prior_beta,
            reward,
            seed,
        })?;
        let handle = Box::new(DsPolicy {
            inner: Mutex::new(PolicySnapshot {
                state,
                rng: stream(seed, Stream::Policy),
            }),
        });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// Release a policy. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ds_policy_free(policy: *mut DsPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Choose an arm for a debtor of `typology` on `channel`. `eligible` may be
/// null (all arms of the channel) or point to `n_eligible` arm indices.
#[no_mangle]
pub unsafe extern "C" fn ds_policy_select(
    policy: *mut DsPolicy,
    typology: *const c_char,
    channel: u32,
    eligible: *const u32,
    n_eligible: usize,
    out_arm: *mut u32,
) -> DsStatus {
    guard(|| {
        let p = policy_arg(policy)?;
        let t = typology_arg(typology)?;
        let channel = match channel {
            DS_CHANNEL_EMAIL => Channel::Email,
            DS_CHANNEL_LETTER => Channel::Letter,
            other => return Err(Failure(DsStatus::Input, format!("unknown channel {other}"))),
        };
        let allowed = if eligible.is_null() {
            None
        } else {
            let raw = std::slice::from_raw_parts(eligible, n_eligible);
            Some(raw.iter().map(|&a| arm_arg(a)).collect::<Result<Vec<_>, _>>()?)
        };
        let mut guard = lock(p)?;
        let snap = &mut *guard;
        let action = snap.state.select_action(t, channel, allowed.as_deref(), &mut snap.rng)?;
        write_out(out_arm, action.arm_index() as u32, "out_arm")
    })
}

/// Record the outcome of one message.
#[no_mangle]
pub unsafe extern "C" fn ds_policy_update(
    policy: *mut DsPolicy,
    typology: *const c_char,
    arm: u32,
    reacted: bool,
    paid: bool,
) -> DsStatus {
    guard(|| {
        let p = policy_arg(policy)?;
        let t = typology_arg(typology)?;
        let action = arm_arg(arm)?;
        lock(p)?.state.observe(t, action, Outcome { reacted, paid })?;
        Ok(())
    })
}

/// Beta posterior parameters of one arm.
#[no_mangle]
pub unsafe extern "C" fn ds_policy_posterior(
    policy: *const DsPolicy,
    typology: *const c_char,
    arm: u32,
    out_alpha: *mut f64,
    out_beta: *mut f64,
) -> DsStatus {
    guard(|| {
        let p = policy_arg(policy)?;
        let t = typology_arg(typology)?;
        let (a, b) = lock(p)?.state.posterior(t, arm_arg(arm)?)?;
        write_out(out_alpha, a, "out_alpha")?;
        write_out(out_beta, b, "out_beta")
    })
}

/// Serialize the policy and its random stream. Restoring the JSON with
/// [`ds_policy_from_json`] continues the same sequence of selections.
#[no_mangle]
pub unsafe extern "C" fn ds_policy_to_json(policy: *const DsPolicy, out_json: *mut *mut c_char) -> DsStatus {
    guard(|| {
        let p = policy_arg(policy)?;
        let json = lock(p)?.to_json()?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        write_out(out_json, into_c_string(json)?, "out_json")
    })
}

#[no_mangle]
pub unsafe extern "C" fn ds_policy_from_json(json: *const c_char, out: *mut *mut DsPolicy) -> DsStatus {
    guard(|| {
        let snap = PolicySnapshot::from_json(str_arg(json, "json")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let handle = Box::new(DsPolicy { inner: Mutex::new(snap) });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// Name of an arm: "cooperative@12:00" for email, the bare tonality for letters.
#[no_mangle]
pub unsafe extern "C" fn ds_arm_name(arm: u32, out_name: *mut *mut c_char) -> DsStatus {
    guard(|| {
        let key = arm_arg(arm)?.key();
        if out_name.is_null() {
            return Err(null("out_name"));
        }
        write_out(out_name, into_c_string(key)?, "out_name")
    })
}

/// Inverse of [`ds_arm_name`].
#[no_mangle]
pub unsafe extern "C" fn ds_arm_parse(name: *const c_char, out_arm: *mut u32) -> DsStatus {
    guard(|| {
        let action: Action = str_arg(name, "name")?.parse()?;
        write_out(out_arm, action.arm_index() as u32, "out_arm")
    })
}

/// Label four normalized scores (willingness, ability, organization,
/// rationality). A score of exactly 0.5 counts as high. `out_label` must
/// hold at least `DS_LABEL_LEN` bytes and receives a NUL-terminated label.
#[no_mangle]
pub unsafe extern "C" fn ds_classify(scores: *const f64, out_label: *mut c_char) -> DsStatus {
    guard(|| {
        if scores.is_null() {
            return Err(null("scores"));
        }
        if out_label.is_null() {
            return Err(null("out_label"));
        }
        let s: [f64; 4] = std::slice::from_raw_parts(scores, 4).try_into().unwrap();
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Failure(DsStatus::Input, "scores must be finite".into()));
        }
        let label = Typology::classify(s).label();
        let bytes = CString::new(label).unwrap();
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), out_label, DS_LABEL_LEN);
        Ok(())
    })
}

/// Pearson chi-square test of independence (no continuity correction) on
/// a row-major `rows` x `cols` table of counts.
#[no_mangle]
pub unsafe extern "C" fn ds_chi_square(
    counts: *const u64,
    rows: usize,
    cols: usize,
    out: *mut DsChiSquare,
) -> DsStatus {
    guard(|| {
        if counts.is_null() {
            return Err(null("counts"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(DsStatus::Input, "table too large".into()))?;
        let flat = std::slice::from_raw_parts(counts, len);
        let table: Vec<Vec<u64>> = if cols == 0 { Vec::new() } else { flat.chunks(cols).map(<[u64]>::to_vec).collect() };
        let r = chi_square(&ContingencyTable::from_counts(table)?)?;
        write_out(
            out,
            DsChiSquare {
                statistic: r.statistic,
                df: r.df,
                n: r.n,
                p_value: r.p_value,
                low_expected: u8::from(r.low_expected),
            },
            "out",
        )
    })
}
