//! Regenerates the committed C header from the crate's public surface.

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    let header = std::path::Path::new(&crate_dir).join("include").join("meshmac.h");
    match cbindgen::generate(&crate_dir) {
        // write_to_file leaves the file untouched when nothing changed, so
        // incremental builds stay clean.
        Ok(bindings) => {
            bindings.write_to_file(header);
        }
        // Header generation failing on a syntactically broken tree would
        // mask the real compile error; let rustc report it instead.
        Err(cbindgen::Error::ParseSyntaxError { .. }) => {}
        Err(e) => panic!("generating meshmac.h: {e}"),
    }
}
