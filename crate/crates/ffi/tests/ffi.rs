use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use citefit_ffi::*;

fn last_error() -> String {
    let p = cf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn sampled(model: CfModel, p0: f64, p1: f64, n: usize, seed: u64) -> Vec<u64> {
    let mut buf = vec![0u64; n];
    let st = unsafe { cf_sample(model, p0, p1, n, seed, buf.as_mut_ptr()) };
    assert_eq!(st, CfStatus::Ok);
    buf
}

unsafe fn fitted(model: CfModel, ds: *const CfDataset) -> *mut CfFit {
    let mut f = ptr::null_mut();
    assert_eq!(cf_fit(model, ds, ptr::null(), &mut f), CfStatus::Ok);
    f
}

#[test]
fn hooked_probability_at_one() {
    let mut p = 0.0;
    let st = unsafe { cf_probability(CfModel::Hooked, 2.0, 0.0, 0, &mut p) };
    assert_eq!(st, CfStatus::Ok);
    assert!((p - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-12);
}

#[test]
fn invalid_parameters_set_status_and_message() {
    let mut p = 0.0;
    let st = unsafe { cf_probability(CfModel::Dlnorm, 0.0, -1.0, 0, &mut p) };
    assert_eq!(st, CfStatus::InvalidArgument);
    assert!(last_error().contains("sigma"), "{}", last_error());
    let st = unsafe { cf_probability(CfModel::Dlnorm, 0.0, 1.0, 0, ptr::null_mut()) };
    assert_eq!(st, CfStatus::NullPointer);
    assert!(last_error().contains("out_p"));
}

#[test]
fn fit_compare_and_free() {
    let counts = sampled(CfModel::Hooked, 3.0, 5.0, 20_000, 7);
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(cf_dataset_new(counts.as_ptr(), counts.len(), &mut ds), CfStatus::Ok);
        assert_eq!(cf_dataset_len(ds), counts.len());

        let hooked = fitted(CfModel::Hooked, ds);
        let dlnorm = fitted(CfModel::Dlnorm, ds);
        let mut params = [0.0; 2];
        assert_eq!(cf_fit_params(hooked, params.as_mut_ptr()), CfStatus::Ok);
        assert!((params[0] - 3.0).abs() < 0.3, "{params:?}");
        assert!(cf_fit_converged(hooked));
        assert_eq!(cf_fit_n(hooked), counts.len());

        let mut ll = 0.0;
        assert_eq!(cf_fit_log_likelihood(hooked, &mut ll), CfStatus::Ok);
        let mut direct = 0.0;
        let st = cf_log_likelihood(CfModel::Hooked, params[0], params[1], counts.as_ptr(), counts.len(), &mut direct);
        assert_eq!(st, CfStatus::Ok);
        assert!((ll - direct).abs() < 1e-8 * ll.abs());

        let mut cmp = CfComparison {
            statistic: 0.0,
            p_value: 0.0,
            winner: CfWinner::Indistinguishable,
            significant: false,
        };
        assert_eq!(cf_vuong(hooked, dlnorm, 0.05, &mut cmp), CfStatus::Ok);
        assert_eq!(cmp.winner, CfWinner::A);
        assert!(cmp.statistic > 0.0);

        let normal = fitted(CfModel::NormalLog, ds);
        assert_eq!(cf_vuong(hooked, normal, 0.05, &mut cmp), CfStatus::MixedMeasures);

        cf_fit_free(normal);
        cf_fit_free(dlnorm);
        cf_fit_free(hooked);
        cf_dataset_free(ds);
        cf_dataset_free(ptr::null_mut());
        cf_fit_free(ptr::null_mut());
    }
}

#[test]
fn empty_dataset_reports_status() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(cf_dataset_new(ptr::null(), 0, &mut ds), CfStatus::Ok);
        let mut f = ptr::null_mut();
        assert_eq!(cf_fit(CfModel::Dlnorm, ds, ptr::null(), &mut f), CfStatus::EmptyData);
        assert!(f.is_null());
        cf_dataset_free(ds);
    }
}

#[test]
fn options_reach_the_fit() {
    let counts = [0u64, 0, 1, 3, 4, 9, 2, 1];
    unsafe {
        let mut ds = ptr::null_mut();
        cf_dataset_new(counts.as_ptr(), counts.len(), &mut ds);
        let mut opts = cf_fit_options_default();
        assert_eq!(opts.offset, 1);
        opts.exclude_uncited = true;
        let mut f = ptr::null_mut();
        assert_eq!(cf_fit(CfModel::NormalLog, ds, &opts, &mut f), CfStatus::Ok);
        assert_eq!(cf_fit_n(f), 6);
        cf_fit_free(f);
        cf_dataset_free(ds);
    }
}

#[test]
fn pointwise_and_spearman() {
    let counts = [0u64, 4, 0];
    let mut pw = [0.0; 3];
    let st = unsafe { cf_pointwise_log_likelihood(CfModel::Dlnorm, 1.0, 1.0, counts.as_ptr(), 3, pw.as_mut_ptr()) };
    assert_eq!(st, CfStatus::Ok);
    assert_eq!(pw[0], pw[2]);
    assert!(pw[1] < 0.0);

    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [10.0, 20.0, 25.0, 100.0];
    let mut r = 0.0;
    assert_eq!(unsafe { cf_spearman(x.as_ptr(), y.as_ptr(), 4, &mut r) }, CfStatus::Ok);
    assert_eq!(r, 1.0);
    assert_eq!(unsafe { cf_spearman(x.as_ptr(), y.as_ptr(), 2, &mut r) }, CfStatus::InsufficientData);
}

#[test]
fn sampling_is_seeded() {
    assert_eq!(sampled(CfModel::Dlnorm, 1.2, 1.1, 500, 3), sampled(CfModel::Dlnorm, 1.2, 1.1, 500, 3));
    assert_ne!(sampled(CfModel::Dlnorm, 1.2, 1.1, 500, 3), sampled(CfModel::Dlnorm, 1.2, 1.1, 500, 4));
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(cf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(root.join("include/citefit.h")).unwrap();
    let src = std::fs::read_to_string(root.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["CfStatus", "CfModel", "CfWinner", "CfFitOptions", "CfComparison", "CfDataset", "CfFit"] {
        assert!(header.contains(&format!("typedef struct {ty}")) || header.contains(&format!("typedef enum {ty}")));
    }
}

#[test]
fn header_compiles_as_c() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let probe = dir.path().join("probe.c");
    std::fs::write(
        &probe,
        "#include \"citefit.h\"\nint main(void) { CfStatus s = CF_STATUS_OK; CfFit *f = 0; cf_fit_free(f); return (int)s; }\n",
    )
    .unwrap();
    let status = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(root.join("include"))
        .arg(&probe)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler on PATH, skipping");
            return;
        }
    };
    assert!(status.success());
}
