//! C ABI for the C-Score engine.
//!
//! Every fallible function returns a [`CsStatus`]; on failure the message is
//! available from [`cs_last_error`] on the same thread until the next call.
//! Heatmap sets are opaque and must be released with [`cs_heatmap_set_free`].

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use cscore::engine::{class_cscore, form_gold_list, soft_iou};
use cscore::tensor::{Heatmap, Tensor2D, Tensor3D};
use cscore::{ActivationBundle, CamMethod, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFinite = 3,
    MissingInput = 4,
    NotFound = 5,
    Io = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsMethod {
    GradCam = 0,
    GradCamPp = 1,
    LayerCam = 2,
    EigenCam = 3,
    ScoreCam = 4,
}

impl From<CsMethod> for CamMethod {
    fn from(m: CsMethod) -> Self {
        match m {
            CsMethod::GradCam => CamMethod::GradCam,
            CsMethod::GradCamPp => CamMethod::GradCamPp,
            CsMethod::LayerCam => CamMethod::LayerCam,
            CsMethod::EigenCam => CamMethod::EigenCam,
            CsMethod::ScoreCam => CamMethod::ScoreCam,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CsClassScore {
    pub cscore: f64,
    pub gold_size: usize,
    pub degenerate_pairs: usize,
    pub empty_gold: bool,
    pub singleton_gold: bool,
}

/// Heatmaps of one checkpoint with their labels and confidences.
pub struct CsHeatmapSet {
    height: usize,
    width: usize,
    ids: Vec<String>,
    labels: Vec<usize>,
    confidences: Vec<f64>,
    maps: Vec<Heatmap>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CsStatus {
    match e {
        Error::Parameter { .. } | Error::Validation(_) => CsStatus::InvalidArgument,
        Error::NonFinite { .. } => CsStatus::NonFinite,
        Error::MethodRequirements { .. } => CsStatus::MissingInput,
        Error::Lookup(_) => CsStatus::NotFound,
        Error::Load { .. } | Error::Parse { .. } | Error::Io { .. } => CsStatus::Io,
        Error::Serialize(_) => CsStatus::Internal,
    }
}

struct Fail(CsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CsStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(CsStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside cscore".into());
            CsStatus::Panic
        }
    }
}

unsafe fn floats<'a>(p: *const f32, len: usize, what: &str) -> Result<&'a [f32], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// Last error message on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn cs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Soft-IoU of two `len`-element heatmaps with values in [0, 1].
///
/// # Safety
/// `a` and `b` must point to `len` floats; `out` and `degenerate` must be
/// valid for writes (`degenerate` may be null).
#[no_mangle]
pub unsafe extern "C" fn cs_soft_iou(
    a: *const f32,
    b: *const f32,
    len: usize,
    out: *mut f64,
    degenerate: *mut bool,
) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = Heatmap::from_unit(Tensor2D::new(1, len, floats(a, len, "a")?.to_vec())?)?;
        let b = Heatmap::from_unit(Tensor2D::new(1, len, floats(b, len, "b")?.to_vec())?)?;
        let s = soft_iou(&a, &b)?;
        *out = s.value;
        if !degenerate.is_null() {
            *degenerate = s.degenerate;
        }
        Ok(())
    })
}

/// Compose a single-layer CAM from channel-last `height x width x channels`
/// activations into `out` (`height * width` floats).
///
/// `gradients` is required by the gradient methods and `channel_scores`
/// (`channels` doubles) by ScoreCAM; either may be null otherwise.
///
/// # Safety
/// Non-null pointers must reference buffers of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn cs_compose(
    method: CsMethod,
    height: usize,
    width: usize,
    channels: usize,
    activations: *const f32,
    gradients: *const f32,
    channel_scores: *const f64,
    out: *mut f32,
    degenerate: *mut bool,
) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = height
            .checked_mul(width)
            .and_then(|s| s.checked_mul(channels))
            .ok_or_else(|| invalid("activation size overflows"))?;
        let acts = Tensor3D::new(height, width, channels, floats(activations, n, "activations")?.to_vec())?;
        let mut bundle = ActivationBundle::new("ffi", "ffi", 0, acts);
        if !gradients.is_null() {
            let g = Tensor3D::new(height, width, channels, floats(gradients, n, "gradients")?.to_vec())?;
            bundle = bundle.with_gradients(g)?;
        }
        if !channel_scores.is_null() {
            let s = slice::from_raw_parts(channel_scores, channels).to_vec();
            bundle = bundle.with_channel_scores(s)?;
        }
        let h = cscore::cam::compose(method.into(), &bundle)?;
        slice::from_raw_parts_mut(out, height * width).copy_from_slice(h.data());
        if !degenerate.is_null() {
            *degenerate = h.is_degenerate();
        }
        Ok(())
    })
}

/// New empty set of `height x width` heatmaps, written to `*out`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cs_heatmap_set_new(height: usize, width: usize, out: *mut *mut CsHeatmapSet) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if height == 0 || width == 0 {
            return Err(invalid(format!("heatmap shape {height}x{width} is empty")));
        }
        let set = CsHeatmapSet {
            height,
            width,
            ids: Vec::new(),
            labels: Vec::new(),
            confidences: Vec::new(),
            maps: Vec::new(),
        };
        *out = Box::into_raw(Box::new(set));
        Ok(())
    })
}

/// Add one image: its id, true label, predicted probability of that label
/// and its heatmap (`height * width` floats in [0, 1]).
///
/// # Safety
/// `set` must come from [`cs_heatmap_set_new`]; `image_id` must be a
/// NUL-terminated UTF-8 string; `data` must hold `height * width` floats.
#[no_mangle]
pub unsafe extern "C" fn cs_heatmap_set_push(
    set: *mut CsHeatmapSet,
    image_id: *const c_char,
    true_label: usize,
    confidence: f64,
    data: *const f32,
) -> CsStatus {
    guard(|| {
        let set = set.as_mut().ok_or_else(|| null("set"))?;
        if image_id.is_null() {
            return Err(null("image_id"));
        }
        let id = CStr::from_ptr(image_id)
            .to_str()
            .map_err(|_| invalid("image_id is not UTF-8"))?
            .to_owned();
        if set.ids.contains(&id) {
            return Err(invalid(format!("duplicate image_id `{id}`")));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(invalid(format!("confidence {confidence} outside [0, 1]")));
        }
        let n = set.height * set.width;
        let map = Tensor2D::new(set.height, set.width, floats(data, n, "data")?.to_vec())?;
        set.maps.push(Heatmap::from_unit(map)?);
        set.ids.push(id);
        set.labels.push(true_label);
        set.confidences.push(confidence);
        Ok(())
    })
}

/// Number of images in the set (0 for a null set).
///
/// # Safety
/// `set` must be null or come from [`cs_heatmap_set_new`].
#[no_mangle]
pub unsafe extern "C" fn cs_heatmap_set_len(set: *const CsHeatmapSet) -> usize {
    set.as_ref().map_or(0, |s| s.maps.len())
}

/// C-Score of `class_id`: gold list of correctly labelled images with
/// confidence >= `tau`, maps emphasized by `alpha`.
///
/// # Safety
/// `set` must come from [`cs_heatmap_set_new`]; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cs_heatmap_set_class_score(
    set: *const CsHeatmapSet,
    method: CsMethod,
    class_id: usize,
    tau: f64,
    alpha: f64,
    out: *mut CsClassScore,
) -> CsStatus {
    guard(|| {
        let set = set.as_ref().ok_or_else(|| null("set"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(invalid(format!("tau must lie in (0, 1), got {tau}")));
        }
        let gold = form_gold_list(&set.ids, &set.labels, &set.confidences, class_id, tau, "ffi")?;
        let index: HashMap<&str, usize> = set.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let maps: Vec<Heatmap> = gold
            .members()
            .iter()
            .map(|m| set.maps[index[m.image_id.as_str()]].clone())
            .collect();
        let r = class_cscore(method.into(), &maps, &gold, alpha)?;
        *out = CsClassScore {
            cscore: r.cscore,
            gold_size: r.gold_size,
            degenerate_pairs: r.degenerate_pairs,
            empty_gold: r.empty_gold,
            singleton_gold: r.singleton_gold,
        };
        Ok(())
    })
}

/// Release a set. Null is a no-op.
///
/// # Safety
/// `set` must be null or come from [`cs_heatmap_set_new`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_heatmap_set_free(set: *mut CsHeatmapSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}
