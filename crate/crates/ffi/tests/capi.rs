use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use fairalloc_ffi::*;

const SMALL: &str = "2 3\n5 5 5\n0: 0 1 2\n1: 0 1 2\n";

fn parse(text: &str) -> *mut FaInstance {
    let c = CString::new(text).unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { fa_instance_parse(c.as_ptr(), &mut inst) },
        FaStatus::Ok
    );
    assert!(!inst.is_null());
    inst
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fa_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn solve_round_trip() {
    let inst = parse(SMALL);
    unsafe {
        assert_eq!(fa_instance_num_players(inst), 2);
        assert_eq!(fa_instance_num_resources(inst), 3);
        let mut report = ptr::null_mut();
        assert_eq!(fa_solve(inst, ptr::null(), &mut report), FaStatus::Ok);
        assert!(fa_report_tau_star(report) >= 5);
        assert!(fa_report_min_value(report) >= 1);
        assert!(fa_report_num_probes(report) >= 1);
        let (mut num, mut den) = (0, 0);
        assert_eq!(
            fa_report_guaranteed(report, &mut num, &mut den),
            FaStatus::Ok
        );
        assert_eq!(den, 13);
        assert_eq!(num, fa_report_tau_star(report));

        let mut total = 0;
        for p in 0..2 {
            let len = fa_report_bundle_len(report, p);
            let mut buf = vec![usize::MAX; len];
            assert_eq!(fa_report_bundle(report, p, buf.as_mut_ptr(), len), len);
            assert!(buf.iter().all(|&r| r < 3));
            total += len;
        }
        assert!(total >= 2);
        assert_eq!(fa_report_bundle_len(report, 99), 0);

        let text = fa_report_allocation_text(report);
        let mut ok = false;
        assert_eq!(fa_verify(inst, text, 1, 1, &mut ok), FaStatus::Ok);
        assert!(ok);
        assert_eq!(fa_verify(inst, text, 100, 1, &mut ok), FaStatus::Ok);
        assert!(!ok);
        fa_string_free(text);
        fa_report_free(report);
        fa_instance_free(inst);
    }
}

#[test]
fn tau_probe_and_abort() {
    let inst = parse(SMALL);
    unsafe {
        let opts = fa_options_default();
        let mut report = ptr::null_mut();
        assert_eq!(fa_solve_for_tau(inst, 5, &opts, &mut report), FaStatus::Ok);
        assert_eq!(fa_report_tau_star(report), 5);
        fa_report_free(report);
        // Every resource is thin at 200 and the pool is worth 15.
        assert_eq!(
            fa_solve_for_tau(inst, 200, &opts, &mut report),
            FaStatus::Aborted
        );
        assert!(report.is_null());
        assert!(last_error().contains("abort"));
        fa_instance_free(inst);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let bad = CString::new("2 1\n-1\n0: 0\n1:\n").unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(
            fa_instance_parse(bad.as_ptr(), &mut inst),
            FaStatus::ParseError
        );
        assert!(inst.is_null());
        assert!(last_error().contains("negative value"));
        assert_eq!(
            fa_instance_parse(ptr::null(), &mut inst),
            FaStatus::NullArgument
        );

        let big = parse("1 15\n1 1 1 1 1 1 1 1 1 1 1 1 1 1 1\n0: 0\n");
        let mut v = 0;
        assert_eq!(fa_brute_force_opt(big, &mut v), FaStatus::SizeGuard);
        fa_instance_free(big);

        let inst = parse(SMALL);
        assert_eq!(fa_brute_force_opt(inst, &mut v), FaStatus::Ok);
        assert_eq!(v, 5);
        let mut opts = fa_options_default();
        opts.beta_den = 0;
        let mut report = ptr::null_mut();
        assert_eq!(fa_solve(inst, &opts, &mut report), FaStatus::InvalidParams);
        // beta = 3 violates the parameter inequalities.
        opts.beta_num = 3;
        opts.beta_den = 1;
        assert_eq!(fa_solve(inst, &opts, &mut report), FaStatus::InvalidParams);
        let tampered = CString::new("0: 0 1\n1: 1 2\n").unwrap();
        let mut ok = true;
        assert_eq!(
            fa_verify(inst, tampered.as_ptr(), 1, 1, &mut ok),
            FaStatus::Ok
        );
        assert!(!ok);
        fa_instance_free(inst);
        fa_instance_free(ptr::null_mut());
        fa_report_free(ptr::null_mut());
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fairalloc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "fa_instance_parse",
        "fa_solve",
        "fa_solve_for_tau",
        "fa_verify",
        "fa_last_error_message",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let src = format!(
        "#include \"{}\"\nint main(void) {{ return FA_STATUS_OK; }}\n",
        header.display()
    );
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("probe.c");
    std::fs::write(&file, src).unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg(&file)
        .status()
    {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found, skipping syntax check"),
    }
}
