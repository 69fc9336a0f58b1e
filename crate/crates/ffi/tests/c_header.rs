//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is on the path.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "apk.h"

int main(void) {
    ApkMoments m;
    if (apk_baseline_wor(50, 25, 5, &m) != APK_STATUS_OK) return 1;
    if (fabs(m.mean - 0.36139455782312924) > 1e-12) return 2;

    const uint8_t rel[] = {1, 0, 1};
    double ap = 0.0;
    if (apk_ap_at_k(rel, 3, 3, APK_NORM_BY_MIN, &ap) != APK_STATUS_OK) return 3;
    if (fabs(ap - (1.0 + 2.0 / 3.0) / 2.0) > 1e-15) return 4;

    ApkDistribution *dist = NULL;
    if (apk_exact_wr(0.5, 3, APK_NORM_BY_K, &dist) != APK_STATUS_OK) return 5;
    double total = 0.0;
    for (size_t i = 0; i < apk_distribution_len(dist); i++) {
        double v, w;
        if (apk_distribution_get(dist, i, &v, &w) != APK_STATUS_OK) return 6;
        total += w;
    }
    apk_distribution_free(dist);
    if (fabs(total - 1.0) > 1e-12) return 7;

    if (apk_baseline_wr(2.0, 3, &m) != APK_STATUS_INVALID_ARGUMENT) return 8;
    printf("%s\n", apk_last_error_message());
    return 0;
}
"#;

fn compiler() -> Option<String> {
    ["cc", "clang", "gcc"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .map(str::to_owned)
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

/// `target/<profile>`, where cargo also places the static library.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_is_valid_c() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let header = include_dir().join("apk.h");
    assert!(header.exists(), "header not generated");
    for std in ["-std=c99", "-std=c11"] {
        let out = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", std, "-x", "c"])
            .arg(&header)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = artifact_dir().join("libapk_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("probability"));
}
