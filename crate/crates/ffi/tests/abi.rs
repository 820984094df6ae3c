use std::ffi::{CStr, CString};
use std::ptr;

use ris_eem_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ris_last_error_message()) }.to_string_lossy().into_owned()
}

fn small_config() -> *mut RisConfig {
    let json = CString::new(r#"{"n_bs": 2, "antennas_per_bs": 2, "n_users": 2, "n_ris": 1, "elements_per_ris": 4}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ris_config_from_json(json.as_ptr(), &mut cfg) }, RisStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn full_round_trip() {
    unsafe {
        let cfg = small_config();
        let mut ch = ptr::null_mut();
        assert_eq!(ris_channels_generate(cfg, 3, &mut ch), RisStatus::Ok);
        let mut rep = ptr::null_mut();
        assert_eq!(ris_eem_run(cfg, ch, 3, &mut rep), RisStatus::Ok);

        let mut eta = 0.0;
        let mut iters = 0usize;
        let mut rate = 0.0;
        assert_eq!(ris_report_eta(rep, &mut eta), RisStatus::Ok);
        assert_eq!(ris_report_iterations(rep, &mut iters), RisStatus::Ok);
        assert_eq!(ris_report_sum_rate(rep, &mut rate), RisStatus::Ok);
        assert!(eta > 0.0 && rate > 0.0 && iters >= 1);

        let mut len = 0usize;
        assert_eq!(ris_report_copy_trace(rep, ptr::null_mut(), 0, &mut len), RisStatus::Ok);
        assert_eq!(len, iters);
        let mut buf = vec![0.0; len];
        assert_eq!(ris_report_copy_trace(rep, buf.as_mut_ptr(), len, &mut len), RisStatus::Ok);
        assert_eq!(*buf.last().unwrap(), eta);

        let mut json = ptr::null_mut();
        assert_eq!(ris_report_to_json(rep, &mut json), RisStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap();
        let value: serde_json::Value = serde_json::from_str(text).unwrap();
        assert_eq!(value["final_eta"].as_f64().unwrap(), eta);
        ris_string_free(json);

        ris_report_free(rep);
        ris_channels_free(ch);
        ris_config_free(cfg);
    }
}

#[test]
fn matches_library() {
    unsafe {
        let cfg = small_config();
        let mut via_ffi = 0.0;
        let scheme = CString::new("proposed_ris").unwrap();
        assert_eq!(ris_benchmark_eta(cfg, scheme.as_ptr(), 5, &mut via_ffi), RisStatus::Ok);
        let lib_cfg = ris_eem::config::load_config(r#"{"n_bs": 2, "antennas_per_bs": 2, "n_users": 2, "n_ris": 1, "elements_per_ris": 4}"#).unwrap();
        let direct = ris_eem::harness::run_scheme(ris_eem::harness::Scheme::ProposedRis, &lib_cfg, 5).unwrap();
        assert_eq!(via_ffi, direct.final_eta);
        ris_config_free(cfg);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let bad = CString::new("{\"n_bs\": \n \"four\"}").unwrap();
        assert_eq!(ris_config_from_json(bad.as_ptr(), &mut cfg), RisStatus::InvalidConfig);
        assert!(cfg.is_null());
        assert!(last_error().contains("line 2"), "{}", last_error());

        assert_eq!(ris_config_default(ptr::null_mut()), RisStatus::NullPointer);
        let mut eta = 0.0;
        assert_eq!(ris_report_eta(ptr::null(), &mut eta), RisStatus::NullPointer);

        assert_eq!(ris_config_default(&mut cfg), RisStatus::Ok);
        assert!(last_error().is_empty());
        let scheme = CString::new("mystery").unwrap();
        assert_eq!(ris_benchmark_eta(cfg, scheme.as_ptr(), 0, &mut eta), RisStatus::InvalidConfig);
        assert_eq!(ris_config_set_pt_dbm(cfg, f64::NAN), RisStatus::InvalidConfig);
        ris_config_free(cfg);
        ris_config_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ris_eem.h")).unwrap();
    for name in [
        "typedef struct RisConfig RisConfig;",
        "RIS_STATUS_OK = 0",
        "ris_config_from_json",
        "ris_eem_run",
        "ris_report_copy_trace",
        "ris_last_error_message",
        "ris_benchmark_eta",
    ] {
        assert!(header.contains(name), "{name} missing");
    }
}
