use std::path::Path;
use std::process::Command;

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bethe_loops.h"),
    )
    .unwrap();
    for name in [
        "bl_last_error",
        "bl_graph_generate",
        "bl_graph_from_alist",
        "bl_graph_free",
        "bl_graph_sizes",
        "bl_graph_rank",
        "bl_half_llr",
        "bl_bp_solve",
        "bl_messages_get",
        "bl_messages_free",
        "bl_bethe_free_energy",
        "bl_log_partition",
        "bl_loop_series_sum",
        "bl_solve_lambda0",
        "bl_exponent_c",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(dir.join("include/bethe_loops.h"))
        .status()
    else {
        eprintln!("no C compiler available; skipped");
        return;
    };
    assert!(status.success());
}
