use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let header = PathBuf::from(&crate_dir).join("include/haptic_arm_lab.h");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("HAPTIC_ARM_LAB_H".to_string()),
        cpp_compat: true,
        documentation: true,
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            ..Default::default()
        },
        header: Some(
            "/* C interface to the haptic-arm-lab simulation toolkit.\n * Regenerated by the crate's build script (cbindgen); do not edit by hand. */"
                .to_string(),
        ),
        ..Default::default()
    };

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen header generation failed")
        .write_to_file(header);

    println!("cargo:rerun-if-changed=src/lib.rs");
}
