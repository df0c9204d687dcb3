use proptest::prelude::*;
use varapps::config::{apply_variation, compose_variations, default_config, init_state, load_config, Catalog};
use varapps::layout::{render, Viewport};
use varapps::state::canonicalize;

fn catalog_len() -> usize {
    Catalog::all().variations.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_order_free_when_it_succeeds(picks in proptest::collection::vec(0..catalog_len(), 1..4)) {
        let catalog = Catalog::all();
        let base = default_config();
        let vs: Vec<_> = picks.iter().map(|&i| &catalog.variations[i]).collect();
        let mut rev = vs.clone();
        rev.reverse();
        match (compose_variations(&base, &vs), compose_variations(&base, &rev)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.digest(), b.digest()),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn composed_configs_round_trip(picks in proptest::collection::vec(0..catalog_len(), 0..3)) {
        let catalog = Catalog::all();
        let vs: Vec<_> = picks.iter().map(|&i| &catalog.variations[i]).collect();
        if let Ok(cfg) = compose_variations(&default_config(), &vs) {
            let again = load_config(&cfg.to_yaml()).unwrap();
            prop_assert_eq!(again.digest(), cfg.digest());
            prop_assert_eq!(canonicalize(&init_state(&again)).digest(), canonicalize(&init_state(&cfg)).digest());
        }
    }
}

#[test]
fn applying_twice_changes_nothing() {
    let base = default_config();
    for v in &Catalog::all().variations {
        let once = apply_variation(&base, v).unwrap();
        assert_eq!(apply_variation(&once, v).unwrap().digest(), once.digest(), "{}", v.id);
    }
}

#[test]
fn rendering_is_deterministic() {
    let catalog = Catalog::shipped();
    for id in catalog.ids() {
        let cfg = catalog.apply_ids(&default_config(), &[id]).unwrap();
        let s = init_state(&cfg);
        for vp in [Viewport::FHD, Viewport::HVGA] {
            assert_eq!(render(&s, &cfg, vp), render(&s, &cfg, vp));
        }
    }
}
