use std::ffi::{CStr, CString};
use std::ptr;

use asst_ffi::*;

fn last_error() -> String {
    let p = asst_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn two_chirp_round_trip_through_the_c_api() {
    unsafe {
        let mut sig = ptr::null_mut();
        assert_eq!(asst_signal_builtin(0, 256, &mut sig), AsstStatus::Ok);
        assert_eq!(asst_signal_len(sig), 256);

        let opts = asst_estimation_options_default();
        assert_eq!((opts.sigma_min, opts.sigma_max, opts.sigma_step, opts.smooth_len), (0.5, 10.0, 0.05, 5));
        let mut sigma = vec![0.0; 256];
        assert_eq!(asst_estimate_sigma(sig, &opts, sigma.as_mut_ptr(), sigma.len()), AsstStatus::Ok);
        assert!(sigma.iter().all(|s| (0.5..=10.0).contains(s)));

        let sopts = asst_sst_options_default();
        let mut tf = ptr::null_mut();
        assert_eq!(asst_sst(sig, sigma.as_ptr(), sigma.len(), &sopts, &mut tf), AsstStatus::Ok);
        let (bins, times) = (asst_tf_bins(tf), asst_tf_times(tf));
        assert_eq!((bins, times), (128, 256));
        assert_eq!(asst_tf_bin_width(tf), 1.0);
        let mut re = vec![0.0; bins * times];
        let mut im = vec![0.0; bins * times];
        assert_eq!(asst_tf_data(tf, re.as_mut_ptr(), im.as_mut_ptr(), re.len()), AsstStatus::Ok);
        assert!(re.iter().any(|&v| v != 0.0));

        let mut cre = vec![0.0; 2 * times];
        let mut cim = vec![0.0; 2 * times];
        let mut hz = vec![0.0; 2 * times];
        let mut found = 0usize;
        let st = asst_separate(tf, 2, 2, 1, cre.as_mut_ptr(), cim.as_mut_ptr(), hz.as_mut_ptr(), cre.len(), &mut found);
        assert_eq!(st, AsstStatus::Ok);
        assert_eq!(found, 2);
        // ridges ordered by mean frequency, near 12 + 50 t and 34 + 64 t at t = 0.5
        assert!((hz[128] - 37.0).abs() < 2.0, "{}", hz[128]);
        assert!((hz[times + 128] - 66.0).abs() < 2.0, "{}", hz[times + 128]);

        asst_tf_free(tf);
        asst_signal_free(sig);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut sig = ptr::null_mut();
        assert_eq!(asst_signal_builtin(9, 64, &mut sig), AsstStatus::InvalidArgument);
        assert!(last_error().contains("unknown signal"));
        assert!(sig.is_null());

        assert_eq!(asst_signal_from_real(ptr::null(), 4, 8.0, &mut sig), AsstStatus::NullPointer);

        let x = [0.0, 1.0, 0.0, -1.0];
        assert_eq!(asst_signal_from_real(x.as_ptr(), 4, 4.0, &mut sig), AsstStatus::Ok);
        let mut small = [0.0; 2];
        let opts = asst_estimation_options_default();
        assert_eq!(asst_estimate_sigma(sig, &opts, small.as_mut_ptr(), 2), AsstStatus::BufferTooSmall);
        assert!(last_error().contains("need 4"));

        let mut tf = ptr::null_mut();
        let sopts = asst_sst_options_default();
        let bad = [0.1; 4];
        assert_eq!(asst_sst(sig, bad.as_ptr(), 4, &sopts, &mut tf), AsstStatus::InvalidArgument);
        asst_signal_free(sig);

        let path = CString::new("/no/such/file.csv").unwrap();
        assert_eq!(asst_signal_load_csv(path.as_ptr(), 100.0, &mut sig), AsstStatus::Io);

        assert_eq!(asst_signal_len(ptr::null()), 0);
        asst_signal_free(ptr::null_mut());
        asst_tf_free(ptr::null_mut());
    }
}

#[test]
fn sigma2_matches_library() {
    let (c, r) = ([12.0, 34.0], [50.0, 64.0]);
    let mut s = 0.0;
    let st = unsafe { asst_sigma2(c.as_ptr(), r.as_ptr(), 2, 0.0, 1.0, 0.2, &mut s) };
    assert_eq!(st, AsstStatus::Ok);
    assert!((s - 0.98259).abs() < 1e-4, "{s}");
    let (c, r) = ([30.0, 31.0], [0.0, 0.0]);
    let st = unsafe { asst_sigma2(c.as_ptr(), r.as_ptr(), 2, 0.0, 1.0, 0.2, &mut s) };
    assert_eq!(st, AsstStatus::Ok);
    let (c, r) = ([30.0, 31.0], [400.0, 400.0]);
    let st = unsafe { asst_sigma2(c.as_ptr(), r.as_ptr(), 2, 0.0, 1.0, 0.2, &mut s) };
    assert_eq!(st, AsstStatus::Unseparable);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/asst.h")).unwrap();
    for name in [
        "typedef struct AsstSignal AsstSignal",
        "typedef struct AsstTimeFreq AsstTimeFreq",
        "ASST_STATUS_OK = 0",
        "ASST_STATUS_UNSEPARABLE",
        "asst_last_error",
        "asst_signal_from_real",
        "asst_signal_builtin",
        "asst_estimate_sigma",
        "asst_sst(",
        "asst_tf_data",
        "asst_separate",
        "asst_sigma2",
        "AsstSstOptions asst_sst_options_default(void)",
    ] {
        assert!(header.contains(name), "header lacks `{name}`");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"asst.h\"\nint main(void) { AsstSstOptions o = asst_sst_options_default(); return (int)o.order; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
