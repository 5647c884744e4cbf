//! Exercises the C surface end to end from Rust: handle lifecycle, error
//! classes, determinism, and the committed header.

use std::ffi::{CStr, CString};

use meshmac_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn set(cfg: *mut MeshmacConfig, key: &str, value: &str) {
    let (k, v) = (cstr(key), cstr(value));
    let status = meshmac_config_set(cfg, k.as_ptr(), v.as_ptr());
    assert_eq!(status, MeshmacStatus::Ok, "setting {key}={value}");
}

unsafe fn small_config() -> *mut MeshmacConfig {
    let cfg = meshmac_config_new();
    assert!(!cfg.is_null());
    set(cfg, "scenario", "ffi-unit");
    set(cfg, "protocol", "tsc_m2mac");
    set(cfg, "channels", "2");
    set(cfg, "duration_s", "0.5");
    set(cfg, "topology.kind", "chain");
    set(cfg, "topology.nodes", "3");
    set(cfg, "topology.radios", "2");
    set(cfg, "topology.spacing_m", "200");
    set(cfg, "flows.count", "1");
    set(cfg, "flows.to_gateway", "1");
    set(cfg, "flows.rate_bps", "100000");
    set(cfg, "flows.pkt_bytes", "210");
    set(cfg, "sink.enabled", "false");
    cfg
}

#[test]
fn config_run_record_round_trip() {
    unsafe {
        let cfg = small_config();
        meshmac_config_seed(cfg, 9);

        let mut status = MeshmacStatus::Invariant;
        let rec = meshmac_run(cfg, &mut status);
        assert_eq!(status, MeshmacStatus::Ok);
        assert!(!rec.is_null());

        assert!(meshmac_record_throughput_bps(rec) > 0.0);
        assert!(meshmac_record_offered_bps(rec) >= meshmac_record_throughput_bps(rec));
        assert!((0.0..=1.0).contains(&meshmac_record_loss_rate(rec)));
        assert!(meshmac_record_energy_j(rec) > 0.0);
        assert!(meshmac_record_delivered(rec) > 0);
        assert!(meshmac_record_generated(rec) >= meshmac_record_delivered(rec));
        assert!(meshmac_record_delay_s(rec) > 0.0);

        let row = meshmac_record_csv_row(rec);
        assert!(!row.is_null());
        let text = CStr::from_ptr(row).to_str().unwrap().to_string();
        assert!(text.starts_with("ffi-unit,tsc_m2mac,2,9,210,1,"), "{text}");
        let header = CStr::from_ptr(meshmac_csv_header()).to_str().unwrap();
        assert_eq!(text.split(',').count(), header.split(',').count());
        meshmac_string_free(row);

        meshmac_record_free(rec);
        meshmac_config_free(cfg);
    }
}

#[test]
fn identical_seeds_produce_identical_rows() {
    unsafe {
        let row_for_seed = |seed: u64| {
            let cfg = small_config();
            meshmac_config_seed(cfg, seed);
            let rec = meshmac_run(cfg, std::ptr::null_mut());
            assert!(!rec.is_null());
            let row = meshmac_record_csv_row(rec);
            let text = CStr::from_ptr(row).to_str().unwrap().to_string();
            meshmac_string_free(row);
            meshmac_record_free(rec);
            meshmac_config_free(cfg);
            text
        };
        assert_eq!(row_for_seed(5), row_for_seed(5));
        assert_ne!(row_for_seed(5), row_for_seed(6), "the seed must matter");
    }
}

#[test]
fn config_errors_report_class_and_message() {
    unsafe {
        let cfg = meshmac_config_new();
        let (k, v) = (cstr("no.such.key"), cstr("1"));
        assert_eq!(meshmac_config_set(cfg, k.as_ptr(), v.as_ptr()), MeshmacStatus::Config);
        let msg = CStr::from_ptr(meshmac_last_error()).to_str().unwrap();
        assert!(msg.contains("no.such.key"), "message names the key: {msg}");

        assert_eq!(
            meshmac_config_set(cfg, std::ptr::null(), v.as_ptr()),
            MeshmacStatus::Argument
        );
        meshmac_config_free(cfg);

        let missing = cstr("/nonexistent/meshmac.cfg");
        assert!(meshmac_config_load(missing.as_ptr()).is_null());
        let msg = CStr::from_ptr(meshmac_last_error()).to_str().unwrap();
        assert!(msg.contains("/nonexistent/meshmac.cfg"), "message names the path: {msg}");
    }
}

#[test]
fn run_failures_classify_topology_problems() {
    unsafe {
        let cfg = small_config();
        // Push the chain links beyond decode range: disconnected topology.
        set(cfg, "topology.spacing_m", "900");
        let mut status = MeshmacStatus::Ok;
        let rec = meshmac_run(cfg, &mut status);
        assert!(rec.is_null());
        assert_eq!(status, MeshmacStatus::Topology);
        let msg = CStr::from_ptr(meshmac_last_error()).to_str().unwrap();
        assert!(!msg.is_empty());
        meshmac_config_free(cfg);

        let rec = meshmac_run(std::ptr::null(), &mut status);
        assert!(rec.is_null());
        assert_eq!(status, MeshmacStatus::Argument);
    }
}

#[test]
fn invalid_utf8_is_an_argument_error() {
    unsafe {
        let cfg = meshmac_config_new();
        let bad = [0xFFu8, 0xFE, 0x00];
        let v = cstr("1");
        let status =
            meshmac_config_set(cfg, bad.as_ptr() as *const std::ffi::c_char, v.as_ptr());
        assert_eq!(status, MeshmacStatus::Argument);
        meshmac_config_free(cfg);
    }
}

#[test]
fn null_record_getters_return_sentinels() {
    unsafe {
        let null = std::ptr::null();
        assert!(meshmac_record_throughput_bps(null).is_nan());
        assert!(meshmac_record_delay_s(null).is_nan());
        assert!(meshmac_record_cna_final_s(null).is_nan());
        assert_eq!(meshmac_record_delivered(null), 0);
        assert!(meshmac_record_csv_row(null).is_null());
    }
}

#[test]
fn probe_fills_the_out_struct() {
    unsafe {
        let mut out = MeshmacProbe::default();
        let status = meshmac_contention_probe(5, 1, 2, &mut out);
        assert_eq!(status, MeshmacStatus::Ok);
        assert_eq!(out.pairs, 5);
        assert!(out.intervals > 0);
        assert_eq!(out.missing_reservations, 0);
        assert!(out.mean_contention_s > 0.0);
        assert!(out.mean_makespan_s >= out.mean_contention_s);

        assert_eq!(
            meshmac_contention_probe(0, 1, 2, &mut out),
            MeshmacStatus::Argument
        );
        assert_eq!(
            meshmac_contention_probe(1, 1, 2, std::ptr::null_mut()),
            MeshmacStatus::Argument
        );
    }
}

#[test]
fn committed_header_declares_the_full_surface() {
    let header_path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("meshmac.h");
    let header = std::fs::read_to_string(&header_path)
        .expect("include/meshmac.h must be committed alongside the crate");
    assert!(header.contains("#ifndef MESHMAC_H"));
    for symbol in [
        "meshmac_version",
        "meshmac_csv_header",
        "meshmac_last_error",
        "meshmac_string_free",
        "meshmac_config_new",
        "meshmac_config_load",
        "meshmac_config_set",
        "meshmac_config_seed",
        "meshmac_config_free",
        "meshmac_run",
        "meshmac_record_offered_bps",
        "meshmac_record_throughput_bps",
        "meshmac_record_loss_rate",
        "meshmac_record_fairness",
        "meshmac_record_energy_j",
        "meshmac_record_delay_s",
        "meshmac_record_cna_final_s",
        "meshmac_record_generated",
        "meshmac_record_delivered",
        "meshmac_record_dropped",
        "meshmac_record_csv_row",
        "meshmac_record_free",
        "meshmac_contention_probe",
        "MeshmacStatus",
        "MeshmacProbe",
        "MESHMAC_STATUS_TOPOLOGY",
    ] {
        assert!(header.contains(symbol), "header is missing `{symbol}`");
    }
}
