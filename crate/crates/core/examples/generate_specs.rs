//! Regenerates the bundled spec files under `specs/` from the built-in
//! preset domains.  Run from the workspace root:
//!
//! ```text
//! cargo run -p nonlocal-feller --example generate_specs
//! ```

use nonlocal_feller::geometry::specfile::save_spec;
use nonlocal_feller::presets;
use std::path::Path;

fn main() {
    let dir = Path::new("specs");
    std::fs::create_dir_all(dir).expect("create specs/");
    let entries = [
        ("square_dirichlet.json", presets::square_dirichlet()),
        ("square_nonlocal.json", presets::square_nonlocal()),
        ("square_variable.json", presets::square_variable()),
        ("lshape_dirichlet.json", presets::lshape_dirichlet()),
        ("lshape_nonlocal.json", presets::lshape_nonlocal()),
        ("disk_polygon_256.json", presets::disk_polygon(256)),
    ];
    for (name, spec) in entries {
        let path = dir.join(name);
        save_spec(&spec, &path).expect("write spec");
        println!("wrote {}", path.display());
    }
}
