//! Compiles and runs a small C program against the generated header and the
//! built cdylib — the whole FFI round trip as a real consumer would use it.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "haptic_arm_lab.h"

int main(void) {
    HalModel *model = NULL;
    if (hal_model_builtin("planar2", &model) != HalStatus_Ok) {
        fprintf(stderr, "builtin failed: %s\n", hal_last_error_message());
        return 1;
    }
    if (hal_model_dof(model) != 2) return 2;

    double q[2] = {0.0, 0.0};
    double pose[7];
    if (hal_model_forward_kinematics(model, q, 2, pose) != HalStatus_Ok) return 3;
    if (fabs(pose[0] - 2.0) > 1e-12 || fabs(pose[1]) > 1e-12) return 4;

    /* Dimension mismatch must be reported, not crash. */
    double bad[3] = {0, 0, 0};
    if (hal_model_forward_kinematics(model, bad, 3, pose) != HalStatus_DimensionMismatch)
        return 5;

    double coulomb[2] = {0.1, 0.1};
    double viscous[2] = {0.05, 0.05};
    HalSim *sim = NULL;
    if (hal_sim_create(model, coulomb, viscous, q, 2, 1e-3, 1, &sim) != HalStatus_Ok)
        return 6;
    double tau_m[2] = {0.5, -0.2};
    double tau_ext[2] = {0.0, 0.0};
    for (int i = 0; i < 100; i++) {
        if (hal_sim_step(sim, tau_m, tau_ext, 2) != HalStatus_Ok) return 7;
    }
    double out_q[2];
    if (hal_sim_state(sim, out_q, NULL, NULL, NULL, 2) != HalStatus_Ok) return 8;
    if (fabs(hal_sim_time(sim) - 0.1) > 1e-12) return 9;
    /* Referenced energy may be negative (gravity below the start posture);
       it just has to be finite. */
    double energy = 0.0 / 0.0;
    if (hal_sim_stored_energy(sim, &energy) != HalStatus_Ok || !isfinite(energy)) return 10;

    hal_sim_free(sim);
    hal_model_free(model);
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn c_program_builds_and_runs() {
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let Some(cc) = cc else {
        eprintln!("no C compiler found; skipping C smoke test");
        return;
    };

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    // target/debug, derived from this test binary's own location.
    let lib_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let so = lib_dir.join("libhaptic_arm_lab_ffi.so");
    if !so.exists() {
        // The cdylib is built alongside the test rlib; if this target was
        // invoked in a mode that skipped it, there is nothing to link.
        eprintln!("cdylib not present at {}; skipping", so.display());
        return;
    }

    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_smoke");
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = work.join("smoke");

    let compile = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lhaptic_arm_lab_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "C smoke test exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
