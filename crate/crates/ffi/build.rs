use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let header = crate_dir.join("include").join("pathlasso.h");

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(header);
        }
        // A parse failure should fail the build loudly; anything else (e.g.
        // cbindgen missing on an exotic platform) falls back to the committed
        // header.
        Err(cbindgen::Error::ParseSyntaxError { .. }) => panic!("cbindgen parse error"),
        Err(err) => println!("cargo:warning=header not regenerated: {}", err),
    }
}
