use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use ssdbcodi_ffi::*;

fn last_error() -> String {
    let p = ssdbcodi_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Two 1-D groups of five plus one far outlier.
fn sample_dataset() -> *mut SsdbcodiDataset {
    let mut values: Vec<f64> = (0..5).map(|i| i as f64 * 0.1).collect();
    values.extend((0..5).map(|i| 10.0 + i as f64 * 0.1));
    values.push(50.0);
    let mut truth = vec![0i64; 5];
    truth.extend([1; 5]);
    truth.push(-1);
    let mut ds = ptr::null_mut();
    let status = unsafe { ssdbcodi_dataset_new(values.as_ptr(), 11, 1, truth.as_ptr(), &mut ds) };
    assert_eq!(status, SsdbcodiStatus::Ok);
    ds
}

#[test]
fn run_through_handles() {
    unsafe {
        let ds = sample_dataset();
        assert_eq!(ssdbcodi_dataset_len(ds), 11);
        assert_eq!(ssdbcodi_dataset_dim(ds), 1);
        assert_eq!(ssdbcodi_dataset_outlier_count(ds), 1);
        assert_eq!(ssdbcodi_dataset_cluster_count(ds), 2);

        let normal = [0usize, 1, 5, 6];
        let clusters = [0u32, 0, 1, 1];
        let mut labels = ptr::null_mut();
        let status = ssdbcodi_labels_new(
            11,
            normal.as_ptr(),
            clusters.as_ptr(),
            4,
            ptr::null(),
            0,
            &mut labels,
        );
        assert_eq!(status, SsdbcodiStatus::Ok);
        assert_eq!(ssdbcodi_labels_len(labels), 4);

        let mut params = ssdbcodi_params_default();
        assert_eq!(
            (
                params.alpha,
                params.beta,
                params.min_pts,
                params.k_reliable,
                params.knn_k
            ),
            (0.4, 0.3, 3, -1, 5)
        );
        params.k_reliable = 1;
        params.knn_k = 1;
        let mut res = ptr::null_mut();
        assert_eq!(
            ssdbcodi_run(ds, labels, &params, &mut res),
            SsdbcodiStatus::Ok
        );
        assert_eq!(ssdbcodi_result_len(res), 11);
        assert_eq!(ssdbcodi_result_reliable_outliers(res), 1);

        let mut cluster = 0i64;
        for i in 0..5 {
            assert_eq!(
                ssdbcodi_result_cluster(res, i, &mut cluster),
                SsdbcodiStatus::Ok
            );
            assert_eq!(cluster, 0);
            assert_eq!(
                ssdbcodi_result_cluster(res, i + 5, &mut cluster),
                SsdbcodiStatus::Ok
            );
            assert_eq!(cluster, 1);
        }
        assert_eq!(
            ssdbcodi_result_cluster(res, 10, &mut cluster),
            SsdbcodiStatus::Ok
        );
        assert_eq!(cluster, -1);
        let mut score = 0.0;
        assert_eq!(
            ssdbcodi_result_outlier_score(res, 10, &mut score),
            SsdbcodiStatus::Ok
        );
        assert_eq!(score, 1.0);

        let mut scores = vec![f64::NAN; 11];
        assert_eq!(
            ssdbcodi_result_copy_scores(res, scores.as_mut_ptr(), 11),
            SsdbcodiStatus::Ok
        );
        assert_eq!(scores[10], 1.0);
        assert!(scores[..10].iter().all(|&s| s == 0.0));
        assert_eq!(
            ssdbcodi_result_copy_scores(res, scores.as_mut_ptr(), 3),
            SsdbcodiStatus::InvalidArgument
        );
        assert_eq!(
            ssdbcodi_result_cluster(res, 11, &mut cluster),
            SsdbcodiStatus::IndexOutOfRange
        );
        assert!(last_error().contains("11"));

        let positive: Vec<u8> = (0..11).map(|i| u8::from(i == 10)).collect();
        let mut auc = 0.0;
        assert_eq!(
            ssdbcodi_auc(scores.as_ptr(), positive.as_ptr(), 11, &mut auc),
            SsdbcodiStatus::Ok
        );
        assert_eq!(auc, 1.0);

        ssdbcodi_result_free(res);
        ssdbcodi_labels_free(labels);
        ssdbcodi_dataset_free(ds);
    }
}

#[test]
fn sampled_labels_and_default_params() {
    unsafe {
        let ds = sample_dataset();
        let mut labels = ptr::null_mut();
        assert_eq!(
            ssdbcodi_labels_sample(ds, 0.5, 3, &mut labels),
            SsdbcodiStatus::Ok
        );
        assert_eq!(ssdbcodi_labels_len(labels), 6);
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        let p = ssdbcodi_params_default();
        assert_eq!(
            ssdbcodi_run(ds, labels, ptr::null(), &mut a),
            SsdbcodiStatus::Ok
        );
        assert_eq!(ssdbcodi_run(ds, labels, &p, &mut b), SsdbcodiStatus::Ok);
        let mut sa = vec![0.0; 11];
        let mut sb = vec![0.0; 11];
        ssdbcodi_result_copy_scores(a, sa.as_mut_ptr(), 11);
        ssdbcodi_result_copy_scores(b, sb.as_mut_ptr(), 11);
        assert_eq!(sa, sb);
        ssdbcodi_result_free(a);
        ssdbcodi_result_free(b);
        ssdbcodi_labels_free(labels);
        ssdbcodi_dataset_free(ds);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            ssdbcodi_dataset_load_csv(ptr::null(), ptr::null(), ptr::null(), &mut ds),
            SsdbcodiStatus::NullPointer
        );
        let missing = CString::new("/nonexistent/x.csv").unwrap();
        assert_eq!(
            ssdbcodi_dataset_load_csv(missing.as_ptr(), ptr::null(), ptr::null(), &mut ds),
            SsdbcodiStatus::Io
        );
        assert!(last_error().contains("/nonexistent/x.csv"));
        assert!(ds.is_null());

        let values = [0.0, 1.0];
        let truth = [0i64, 0];
        assert_eq!(
            ssdbcodi_dataset_new(values.as_ptr(), 2, 1, truth.as_ptr(), ptr::null_mut()),
            SsdbcodiStatus::NullPointer
        );

        let ds = sample_dataset();
        let mut labels = ptr::null_mut();
        let outliers = [3usize];
        assert_eq!(
            ssdbcodi_labels_new(
                11,
                ptr::null(),
                ptr::null(),
                0,
                outliers.as_ptr(),
                1,
                &mut labels
            ),
            SsdbcodiStatus::Ok
        );
        let mut res = ptr::null_mut();
        assert_eq!(
            ssdbcodi_run(ds, labels, ptr::null(), &mut res),
            SsdbcodiStatus::Precondition
        );
        assert!(res.is_null());

        let mut bad = ssdbcodi_params_default();
        bad.alpha = 2.0;
        assert_eq!(
            ssdbcodi_run(ds, labels, &bad, &mut res),
            SsdbcodiStatus::InvalidArgument
        );
        assert!(last_error().contains("alpha"));

        let out_of_range = [20usize];
        let cluster = [0u32];
        let mut l2 = ptr::null_mut();
        assert_eq!(
            ssdbcodi_labels_new(
                11,
                out_of_range.as_ptr(),
                cluster.as_ptr(),
                1,
                ptr::null(),
                0,
                &mut l2
            ),
            SsdbcodiStatus::IndexOutOfRange
        );

        assert_eq!(ssdbcodi_dataset_len(ptr::null()), 0);
        ssdbcodi_dataset_free(ptr::null_mut());
        ssdbcodi_labels_free(labels);
        ssdbcodi_dataset_free(ds);
    }
}

#[test]
fn csv_loading_uses_defaults_for_null_names() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "a,b,label\n0,0,x\n1,1,x\n5,5,o\n").unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            ssdbcodi_dataset_load_csv(cpath.as_ptr(), ptr::null(), ptr::null(), &mut ds),
            SsdbcodiStatus::Ok
        );
        assert_eq!(ssdbcodi_dataset_len(ds), 3);
        assert_eq!(ssdbcodi_dataset_dim(ds), 2);
        assert_eq!(ssdbcodi_dataset_outlier_count(ds), 1);
        ssdbcodi_dataset_free(ds);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(ssdbcodi_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ssdbcodi.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for f in exports {
        assert!(text.contains(&format!("{f}(")), "{f} missing from header");
    }
    for t in [
        "SsdbcodiDataset",
        "SsdbcodiLabels",
        "SsdbcodiResult",
        "SSDBCODI_STATUS_OK",
    ] {
        assert!(text.contains(t));
    }
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|c| {
        Command::new(c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

/// Compiles and runs a C program against the static library when a C
/// compiler is available.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    if !lib_dir.join("libssdbcodi_ffi.a").exists() {
        eprintln!(
            "static library not found in {}; skipping",
            lib_dir.display()
        );
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let c_src = dir.path().join("main.c");
    std::fs::write(
        &c_src,
        r#"
#include <stdio.h>
#include "ssdbcodi.h"

int main(void) {
    double values[] = {0.0, 0.1, 0.2, 10.0, 10.1, 10.2, 50.0};
    int64_t truth[] = {0, 0, 0, 1, 1, 1, -1};
    SsdbcodiDataset *ds = NULL;
    if (ssdbcodi_dataset_new(values, 7, 1, truth, &ds) != SSDBCODI_STATUS_OK) return 1;
    size_t normal[] = {0, 3};
    uint32_t clusters[] = {0, 1};
    SsdbcodiLabels *labels = NULL;
    if (ssdbcodi_labels_new(7, normal, clusters, 2, NULL, 0, &labels) != SSDBCODI_STATUS_OK) return 2;
    SsdbcodiParams p = ssdbcodi_params_default();
    p.min_pts = 1;
    p.k_reliable = 1;
    p.knn_k = 1;
    SsdbcodiResult *res = NULL;
    if (ssdbcodi_run(ds, labels, &p, &res) != SSDBCODI_STATUS_OK) {
        fprintf(stderr, "%s\n", ssdbcodi_last_error());
        return 3;
    }
    int64_t c = 0;
    ssdbcodi_result_cluster(res, 6, &c);
    printf("%lld\n", (long long)c);
    if (ssdbcodi_result_cluster(res, 99, &c) != SSDBCODI_STATUS_INDEX_OUT_OF_RANGE) return 4;
    ssdbcodi_result_free(res);
    ssdbcodi_labels_free(labels);
    ssdbcodi_dataset_free(ds);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = Command::new(cc)
        .arg(&c_src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(lib_dir.join("libssdbcodi_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "-1");
}
