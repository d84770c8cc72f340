fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(format!("{crate_dir}/include/tfwf.h"));
        }
        Err(err) => {
            // Keep the checked-in header usable when header generation is
            // unavailable in the build environment.
            println!("cargo:warning=cbindgen failed, keeping existing header: {err}");
        }
    }
}
