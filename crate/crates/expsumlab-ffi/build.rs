fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    #[cfg(feature = "generate-header")]
    regenerate_header();
}

/// Rewrite include/expsumlab.h from the Rust source. Failure downgrades to
/// a warning: the committed header stays authoritative, and builds must not
/// depend on header generation succeeding.
#[cfg(feature = "generate-header")]
fn regenerate_header() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(format!("{crate_dir}/include/expsumlab.h"));
        }
        Err(e) => println!("cargo:warning=header generation failed: {e}"),
    }
}
