use std::ffi::{CStr, CString};
use std::ptr;

use cscore_ffi::*;

fn last_error() -> String {
    let p = cs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_set(h: usize, w: usize) -> *mut CsHeatmapSet {
    let mut set = ptr::null_mut();
    assert_eq!(unsafe { cs_heatmap_set_new(h, w, &mut set) }, CsStatus::Ok);
    set
}

fn push(set: *mut CsHeatmapSet, id: &str, label: usize, conf: f64, data: &[f32]) -> CsStatus {
    let id = CString::new(id).unwrap();
    unsafe { cs_heatmap_set_push(set, id.as_ptr(), label, conf, data.as_ptr()) }
}

#[test]
fn soft_iou_roundtrip() {
    let a = [1.0f32, 0.0, 0.0, 0.0];
    let b = [0.5f32, 0.5, 0.0, 0.0];
    let mut v = 0.0;
    let mut deg = true;
    assert_eq!(unsafe { cs_soft_iou(a.as_ptr(), b.as_ptr(), 4, &mut v, &mut deg) }, CsStatus::Ok);
    assert!((v - 0.5 / 1.5).abs() < 1e-15);
    assert!(!deg);
    assert!(cs_last_error().is_null());

    let z = [0.0f32; 4];
    assert_eq!(unsafe { cs_soft_iou(z.as_ptr(), z.as_ptr(), 4, &mut v, ptr::null_mut()) }, CsStatus::Ok);
    assert_eq!(v, 0.0);
}

#[test]
fn soft_iou_errors() {
    let a = [1.5f32, 0.0];
    let mut v = 0.0;
    assert_eq!(
        unsafe { cs_soft_iou(a.as_ptr(), a.as_ptr(), 2, &mut v, ptr::null_mut()) },
        CsStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    let n = [f32::NAN, 0.0];
    assert_eq!(unsafe { cs_soft_iou(n.as_ptr(), n.as_ptr(), 2, &mut v, ptr::null_mut()) }, CsStatus::NonFinite);
    assert_eq!(unsafe { cs_soft_iou(ptr::null(), a.as_ptr(), 2, &mut v, ptr::null_mut()) }, CsStatus::NullPointer);
    assert!(last_error().contains('a'));
}

#[test]
fn class_score_through_handle() {
    let set = new_set(1, 2);
    let m = [1.0f32, 0.2];
    assert_eq!(push(set, "b", 1, 0.9, &m), CsStatus::Ok);
    assert_eq!(push(set, "a", 1, 0.6, &m), CsStatus::Ok);
    assert_eq!(push(set, "c", 1, 0.4, &[0.0, 1.0]), CsStatus::Ok);
    assert_eq!(push(set, "d", 0, 0.99, &[0.0, 1.0]), CsStatus::Ok);
    assert_eq!(push(set, "a", 0, 0.7, &m), CsStatus::InvalidArgument);
    assert_eq!(unsafe { cs_heatmap_set_len(set) }, 4);

    let mut r = CsClassScore::default();
    let st = unsafe { cs_heatmap_set_class_score(set, CsMethod::GradCam, 1, 0.5, 2.0, &mut r) };
    assert_eq!(st, CsStatus::Ok);
    assert_eq!(r.gold_size, 2);
    assert_eq!(r.cscore, 1.0);

    let st = unsafe { cs_heatmap_set_class_score(set, CsMethod::GradCam, 0, 0.5, 2.0, &mut r) };
    assert_eq!(st, CsStatus::Ok);
    assert!(r.singleton_gold && r.cscore == 0.0);

    let st = unsafe { cs_heatmap_set_class_score(set, CsMethod::GradCam, 0, 1.5, 2.0, &mut r) };
    assert_eq!(st, CsStatus::InvalidArgument);
    assert!(last_error().contains("tau"));

    unsafe { cs_heatmap_set_free(set) };
    unsafe { cs_heatmap_set_free(ptr::null_mut()) };
}

#[test]
fn compose_gradcam_and_requirements() {
    // 1x2 spatial, 2 channels, channel-last
    let acts = [1.0f32, 0.0, 3.0, 1.0];
    let grads = [1.0f32, 0.0, 1.0, 0.0];
    let mut out = [0.0f32; 2];
    let mut deg = true;
    let st = unsafe {
        cs_compose(CsMethod::GradCam, 1, 2, 2, acts.as_ptr(), grads.as_ptr(), ptr::null(), out.as_mut_ptr(), &mut deg)
    };
    assert_eq!(st, CsStatus::Ok);
    assert_eq!(out, [0.0, 1.0]);
    assert!(!deg);

    let st = unsafe {
        cs_compose(CsMethod::GradCam, 1, 2, 2, acts.as_ptr(), ptr::null(), ptr::null(), out.as_mut_ptr(), ptr::null_mut())
    };
    assert_eq!(st, CsStatus::MissingInput);

    let st = unsafe {
        cs_compose(CsMethod::EigenCam, 1, 2, 2, acts.as_ptr(), ptr::null(), ptr::null(), out.as_mut_ptr(), ptr::null_mut())
    };
    assert_eq!(st, CsStatus::Ok);
}

#[test]
fn null_handles() {
    let mut r = CsClassScore::default();
    let st = unsafe { cs_heatmap_set_class_score(ptr::null(), CsMethod::GradCam, 0, 0.5, 2.0, &mut r) };
    assert_eq!(st, CsStatus::NullPointer);
    assert_eq!(unsafe { cs_heatmap_set_len(ptr::null()) }, 0);
    let mut set = ptr::null_mut();
    assert_eq!(unsafe { cs_heatmap_set_new(0, 3, &mut set) }, CsStatus::InvalidArgument);
    assert!(set.is_null());
}
