use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let header = PathBuf::from(&crate_dir).join("include").join("visnir.h");
    std::fs::create_dir_all(header.parent().unwrap()).ok();

    let mut config = cbindgen::Config::default();
    config.language = cbindgen::Language::C;
    config.include_guard = Some("VISNIR_H".into());
    config.sys_includes = vec!["stdint.h".into(), "stdbool.h".into(), "stddef.h".into()];
    config.documentation = true;
    config.enumeration.prefix_with_name = true;
    config.no_includes = true;

    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(&header);
        }
        Err(e) => {
            // header generation failing should not break local cargo builds
            println!("cargo:warning=cbindgen failed: {e}");
        }
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
