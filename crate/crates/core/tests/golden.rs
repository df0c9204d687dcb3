//! Frozen renderings of the default configuration. `VARAPPS_BLESS=1`
//! rewrites the files under `tests/golden/`.

use std::path::PathBuf;

use varapps::config::{default_config, init_state, Catalog};
use varapps::layout::{render, Viewport};
use varapps::state::{canonicalize, Route};

fn check(name: &str, fresh: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var("VARAPPS_BLESS").is_ok_and(|v| v == "1") {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, fresh).unwrap();
    }
    let stored = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; bless with VARAPPS_BLESS=1", path.display()));
    assert!(stored == fresh, "{name} changed; rerun with VARAPPS_BLESS=1 if intended");
}

const PAGES: [Route; 8] =
    [Route::Home, Route::Calendar, Route::Todo, Route::Messenger, Route::Maps, Route::CodeEditor, Route::Shop, Route::Cart];

#[test]
fn initial_state() {
    let s0 = canonicalize(&init_state(&default_config()));
    check("initial_state.yaml", &format!("# {}\n{}", s0.digest(), s0.to_yaml()));
}

#[test]
fn default_ax_trees() {
    let cfg = default_config();
    let s0 = init_state(&cfg);
    let mut out = String::new();
    for route in PAGES {
        let mut s = s0.clone();
        s.nav.route = route.clone();
        let obs = render(&s, &cfg, Viewport::HD);
        out.push_str(&format!("== {} height {}\n{}", obs.url, obs.page_height, obs.ax_tree));
    }
    check("ax_trees_hd.txt", &out);
}

#[test]
fn variation_digests() {
    let base = default_config();
    let catalog = Catalog::all();
    let mut out = format!("default\t{}\n", base.digest());
    for v in &catalog.variations {
        let cfg = catalog.apply_ids(&base, &[v.id.as_str()]).unwrap();
        let s0 = canonicalize(&init_state(&cfg));
        out.push_str(&format!("{}\t{}\t{}\n", v.id, cfg.digest(), s0.digest()));
    }
    check("variation_digests.tsv", &out);
}
