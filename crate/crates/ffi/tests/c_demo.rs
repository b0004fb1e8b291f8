//! Compiles the bundled C demo against the generated header and the
//! staticlib, runs it, and checks its output. This is the proof that the
//! header is valid C and the ABI actually links.

use std::path::{Path, PathBuf};
use std::process::Command;

fn workspace_target() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target")
}

#[test]
fn c_demo_compiles_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };

    // `cargo test` links tests against the rlib and can leave the staticlib
    // artifact stale, so rebuild it explicitly before compiling the demo.
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut build = Command::new(cargo);
    build.args(["build", "-p", "foi-ffi"]).current_dir(manifest);
    if profile == "release" {
        build.arg("--release");
    }
    let built = build.output().expect("cargo is available");
    assert!(
        built.status.success(),
        "cargo build -p foi-ffi failed: {}",
        String::from_utf8_lossy(&built.stderr)
    );

    let staticlib = workspace_target().join(profile).join("libfoi_ffi.a");
    assert!(
        staticlib.exists(),
        "staticlib missing at {}",
        staticlib.display()
    );

    let out_dir = std::env::temp_dir().join(format!("foi-c-demo-{}", std::process::id()));
    std::fs::create_dir_all(&out_dir).unwrap();
    let binary = out_dir.join("demo");
    let compile = Command::new("cc")
        .arg(manifest.join("examples/demo.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().expect("demo runs");
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "demo failed: {stdout}");
    assert!(stdout.contains("crane vehicle"), "{stdout}");
    assert!(stdout.contains("entered alerts: 1"), "{stdout}");
    std::fs::remove_dir_all(&out_dir).ok();
}
