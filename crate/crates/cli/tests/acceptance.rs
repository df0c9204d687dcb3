//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Goldens live in `tests/golden/`; set `VARAPPS_BLESS=1` to rewrite them.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use varapps::action::{parse_action, signature, split_concatenated_calls, ActionProfile, ArgType};
use varapps::analytics::{count_loops, mad, reliability, RewardSample, StdConvention};
use varapps::config::{
    apply_variation, compose_variations, default_config, enumerate_variants, init_state, load_config, Catalog,
    EnumerateLimits, VariationKind,
};
use varapps::harness::{
    builtin_agent, read_trajectories, replay, run_matrix, run_one, Backend, InProcess, MatrixOptions, RunSpec,
    TrajectoryRecord,
};
use varapps::layout::{render, resolve, Observation, Viewport};
use varapps::state::{AppId, Route};
use varapps::tasks::{evaluate, side_effects, TaskCatalog};
use varapps_cli::server::{spawn_background, AppState};

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            grow(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            if new_size >= layout.size() {
                grow(new_size - layout.size());
            } else {
                CURRENT.fetch_sub(layout.size() - new_size, Ordering::Relaxed);
            }
        }
        p
    }
}

fn grow(by: usize) {
    let now = CURRENT.fetch_add(by, Ordering::Relaxed) + by;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

#[global_allocator]
static ALLOC: Counting = Counting;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn blessing() -> bool {
    std::env::var("VARAPPS_BLESS").is_ok_and(|v| v == "1")
}

const SHIPPED: [&str; 8] = [
    "default",
    "black_and_white",
    "challenging_font",
    "dark_theme",
    "german",
    "long_descriptions",
    "misleading_descriptions",
    "adversarial_descriptions",
];

// Task ids as printed in the reward-by-task table.
const TABLE_TASKS: [&str; 15] = [
    "Add2CartASingleItemTask",
    "AddEventTask",
    "AddFiles2CodeEditorTask",
    "AddItem2ToDoListTask",
    "DuplicateEventTask",
    "ForwardMessageTask",
    "MarkItemAsDoneTask",
    "MessageXTask",
    "NavigateToPageTask",
    "RemoveEventTask",
    "RemoveFromCodeEditorTask",
    "RemoveItemFromToDoListTask",
    "RemoveItemsFromCartTask",
    "RemoveSavedPlace",
    "SavePlace",
];

fn manifest() -> Result<String, String> {
    ensure(AppId::ALL.len() == 6, || format!("{} apps", AppId::ALL.len()))?;
    let tasks = TaskCatalog::shipped();
    let ids: BTreeSet<&str> = tasks.single_goal().map(|t| t.id.as_str()).collect();
    let want: BTreeSet<&str> = TABLE_TASKS.into_iter().collect();
    ensure(ids == want, || format!("single-goal tasks {ids:?}"))?;
    for t in tasks.single_goal() {
        ensure(t.goal_prompts.len() >= 2, || format!("{} has {} prompts", t.id, t.goal_prompts.len()))?;
    }
    let shipped = Catalog::shipped();
    ensure(shipped.ids() == SHIPPED, || format!("shipped variations {:?}", shipped.ids()))?;
    let web = Catalog::popular_web();
    let fonts: BTreeSet<String> = web
        .variations
        .iter()
        .filter(|v| v.axis.as_deref() == Some("font"))
        .flat_map(|v| v.patches.values().filter_map(|x| x.as_str().map(String::from)).collect::<Vec<_>>())
        .collect();
    for f in ["Inter", "Roboto", "Open Sans"] {
        ensure(fonts.contains(f), || format!("popular-web catalog lacks font {f}"))?;
    }
    Ok(format!(
        "6 apps, 15 tasks, 8 shipped variations, {} popular-web variations",
        web.variations.len()
    ))
}

fn oracle_matrix() -> Result<String, String> {
    let catalog = Catalog::all();
    let tasks = TaskCatalog::shipped();
    let t0 = Instant::now();
    let mut worst = 0usize;
    let mut runs = 0;
    for task in TABLE_TASKS {
        for v in SHIPPED {
            for seed in 0..3 {
                let spec = RunSpec::new("oracle", task, &[v], seed);
                let base = CURRENT.load(Ordering::Relaxed);
                PEAK.store(base, Ordering::Relaxed);
                let rec = {
                    let mut backend = InProcess::new(catalog.clone(), tasks.clone());
                    run_one(runs, &spec, &mut backend, &|s: &RunSpec| builtin_agent(s, &catalog, &tasks))
                };
                worst = worst.max(PEAK.load(Ordering::Relaxed).saturating_sub(base));
                ensure(rec.reward() == 1.0, || {
                    format!("{task} / {v} / seed {seed}: reward {} error {:?}", rec.reward(), rec.error)
                })?;
                runs += 1;
            }
        }
    }
    let wall = t0.elapsed();
    let mb = worst as f64 / (1024.0 * 1024.0);
    let detail = format!("{runs} runs in {:.1}s, peak session memory {mb:.2} MiB", wall.as_secs_f64());
    ensure(runs == 360, || detail.clone())?;
    ensure(wall <= Duration::from_secs(300), || format!("too slow: {detail}"))?;
    ensure(worst < 10 * 1024 * 1024, || format!("too much memory: {detail}"))?;
    Ok(detail)
}

fn side_effect_injection() -> Result<String, String> {
    let catalog = Catalog::shipped();
    let tasks = TaskCatalog::shipped();
    let base = default_config();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut injected = 0;
    for task in tasks.single_goal() {
        for v in SHIPPED {
            let cfg = catalog.apply_ids(&base, &[v]).map_err(|e| e.to_string())?;
            let s0 = init_state(&cfg);
            let target = task.target_state(&s0).map_err(|e| format!("{}: {e}", task.id))?;
            let ok = evaluate(&s0, &target, task).map_err(|e| e.to_string())?;
            ensure(ok.reward == 1.0, || format!("{} / {v}: target state not rewarded", task.id))?;
            for _ in 0..3 {
                let salt: String = (0..8).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
                for bad in side_effects(&target, &salt) {
                    let r = evaluate(&s0, &bad, task).map_err(|e| e.to_string())?;
                    ensure(r.reward == 0.0, || format!("{} / {v}: side effect `{salt}` still rewarded", task.id))?;
                    injected += 1;
                }
            }
        }
    }
    ensure(injected >= 1000, || format!("only {injected} injections"))?;
    Ok(format!("{injected} injections, all rewarded 0"))
}

fn samples(cells: &[(&str, &[f64])]) -> Vec<RewardSample> {
    cells
        .iter()
        .flat_map(|(v, rs)| {
            rs.iter().enumerate().map(move |(i, r)| RewardSample {
                agent: "a".into(),
                task: "t".into(),
                variation: v.to_string(),
                seed: i as u64,
                reward: *r,
            })
        })
        .collect()
}

fn metrics() -> Result<String, String> {
    ensure(mad(&[1.0, 0.0, 1.0, 0.0]) == Some(0.5), || format!("MAD {:?}", mad(&[1.0, 0.0, 1.0, 0.0])))?;
    let nine = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let rep = reliability(&samples(&[("default", &nine)]), StdConvention::Sample).map_err(|e| e.to_string())?;
    let cell = &rep.rows[0].cells[0];
    let std = cell.std.ok_or("std absent")?;
    ensure((cell.pass_at_1 - 0.5556).abs() <= 1e-4, || format!("pass@1 {}", cell.pass_at_1))?;
    ensure((std - 0.527).abs() <= 1e-3, || format!("std {std}"))?;
    ensure(format!("{:.2} / {:.2}", cell.pass_at_1, std) == "0.56 / 0.53", || "rounding".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..12);
        let rs: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { rng.gen() } else { rng.gen_range(0..2u8) as f64 }).collect();
        for conv in [StdConvention::Sample, StdConvention::Population] {
            let rep = reliability(&samples(&[("only", &rs)]), conv).map_err(|e| e.to_string())?;
            let row = &rep.rows[0];
            for (a, b) in [(row.fixed_std, row.overall_std), (row.fixed_mad, row.overall_mad)] {
                let (a, b) = (a.ok_or("absent")?, b.ok_or("absent")?);
                worst = worst.max((a - b).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("d=1 identity off by {worst:e}"))?;
    Ok(format!("MAD 0.5, pass@1 {:.4}, std {std:.4}, d=1 max gap {worst:e}", cell.pass_at_1))
}

fn loops_brute(xs: &[String]) -> usize {
    let n = xs.len();
    let mut runs = Vec::new();
    for unit in 1..=n / 2 {
        for start in 0..n {
            if start + 2 * unit > n {
                break;
            }
            let w = &xs[start..start + unit];
            if start >= unit && &xs[start - unit..start] == w {
                continue;
            }
            let mut k = 1;
            while start + (k + 1) * unit <= n && &xs[start + k * unit..start + (k + 1) * unit] == w {
                k += 1;
            }
            if k >= 2 {
                runs.push((start, unit, start + k * unit));
            }
        }
    }
    runs.sort();
    let (mut pos, mut count) = (0, 0);
    for (s, _, e) in runs {
        if s >= pos {
            count += 1;
            pos = e;
        }
    }
    count
}

fn loops() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alphabet = ["click('1')", "click('2')", "scroll(0, 100)", "go_back()"];
    for i in 0..1000 {
        let len = rng.gen_range(0..=30);
        let xs: Vec<String> = (0..len).map(|_| alphabet[rng.gen_range(0..4)].to_string()).collect();
        let (a, b) = (count_loops(&xs), loops_brute(&xs));
        ensure(a == b, || format!("sequence {i}: detector {a}, enumerator {b}: {xs:?}"))?;
    }
    let verbatim = [
        "click(47)".repeat(7),
        "click(17)".repeat(20),
        "keyboard_press(key='ctrl a')keyboard_press(key='ctrl a')".to_string(),
    ];
    for raw in &verbatim {
        let steps = split_concatenated_calls(raw);
        let c = count_loops(&steps);
        ensure(c == 1, || format!("{raw}: {c} loops"))?;
    }
    Ok("1000 random sequences agree, verbatim loops count 1".into())
}

const FULL_ACTIONS: &str = "click, fill, dblclick, clear, select_option,
drag_and_drop, hover, go_back, go_forward,goto,
scroll, mouse_click, mouse_dblclick, mouse_move,
mouse_down, mouse_up, mouse_click, mouse_dblclick,
mouse_drag_and_drop, mouse_upload_file, keyboard_down,
keyboard_up, keyboard_press, keyboard_type, keyboard_insert_text. ";

const VISUAL_ACTIONS: &str = "go_back,go_forward,goto,mouse_click
mouse_dblclick,scroll,mouse_move,mouse_down,
mouse_up,mouse_click,mouse_dblclick,
mouse_drag_and_drop,mouse_upload_file,keyboard_down,
keyboard_up,keyboard_press,keyboard_type,
keyboard_insert_text.";

fn listing(text: &str) -> Vec<&str> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .map(|s| s.trim_end_matches('.'))
        .filter(|s| !s.is_empty())
        .collect()
}

fn invalid_corpus() -> Vec<(ActionProfile, &'static str)> {
    use ActionProfile::*;
    vec![
        (Full, "click(23)"),
        (Full, "noop"),
        (Full, "check_ax_tree()"),
        (Full, "mouse_click(x=612 y)"),
        (Full, "click(bid)\\n```"),
        (Full, "click(bid)\\n<\\action>"),
        (Full, "click(bid)\\n<\\action> \\n```python\\npyautogui.click(x=0.523, y=0.466)\\n```"),
        (Full, "click(bid)\\n```\\n```python\\npyautogui.click(x=0.000, y=0.000) \\n```"),
        (Full, "click(bid)\\n```python\\npyautogui.click(x=0.000, y=0.000)\\n```"),
        (Full, "remove_item(water plants)"),
        (Full, "duplicate(17)"),
        (Full, "click([67] link 'main-page'"),
        (Full, "enter(searchInput, Bockelwitz, Germany)"),
        (Full, "no-op"),
        (Full, "go_to('https://www.example.com/maps')"),
        (Full, "type(OWYN - 100% Vegan Plant-Based Protein Shakes | Cold Brew Coffee, 12 Fl Oz )"),
        (VisualOnly, "finished()"),
        (VisualOnly, "wait()"),
        (VisualOnly, "scroll(direction='down', point='(966,546)')"),
        (VisualOnly, "finished"),
        (VisualOnly, "None"),
    ]
}

fn call(name: &str, drop_last: bool) -> String {
    let sig = signature(name).expect("listed name has a signature");
    let mut args: Vec<&str> = sig
        .params
        .iter()
        .filter(|p| p.required)
        .map(|p| match p.ty {
            ArgType::Number => "3",
            _ => "'4'",
        })
        .collect();
    if drop_last {
        args.pop();
    }
    format!("{name}({})", args.join(", "))
}

fn parser_corpus() -> Result<String, String> {
    let mut cats: BTreeMap<String, usize> = BTreeMap::new();
    for (profile, raw) in invalid_corpus() {
        match parse_action(raw, profile) {
            Ok(a) => return Err(format!("`{raw}` parsed as {a}")),
            Err(e) => *cats.entry(e.category.to_string()).or_default() += 1,
        }
    }
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for (profile, text, expected) in [(ActionProfile::Full, FULL_ACTIONS, 25), (ActionProfile::VisualOnly, VISUAL_ACTIONS, 19)] {
        let names = listing(text);
        for name in &names {
            let good = call(name, false);
            if let Err(e) = parse_action(&good, profile) {
                failures.push(format!("{good}: {e}"));
            }
            if signature(name).is_some_and(|s| s.params.iter().any(|p| p.required)) {
                let short = call(name, true);
                if parse_action(&short, profile).is_ok() {
                    failures.push(format!("{short} accepted with a missing argument"));
                }
            }
        }
        let distinct: BTreeSet<&&str> = names.iter().collect();
        counts.push(format!("{profile} {} names ({} distinct)", names.len(), distinct.len()));
        if names.len() != expected {
            failures.push(format!("{profile} listing has {} names, expected {expected}", names.len()));
        }
    }
    let summary = format!("{} invalid strings {cats:?}; {}", invalid_corpus().len(), counts.join(", "));
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", failures.join("; ")))
    }
}

fn determinism_specs() -> Vec<RunSpec> {
    let mut specs = Vec::new();
    for agent in ["oracle", "random"] {
        for task in &TABLE_TASKS[..8] {
            for v in ["default", "german"] {
                for seed in 0..2 {
                    specs.push(RunSpec::new(agent, task, &[v], seed));
                }
            }
        }
    }
    specs
}

fn run_specs(specs: &[RunSpec], parallelism: usize) -> Result<Vec<TrajectoryRecord>, String> {
    let catalog = Catalog::all();
    let tasks = TaskCatalog::shipped();
    let (c, t) = (catalog.clone(), tasks.clone());
    let opts = MatrixOptions { parallelism, out_dir: None };
    run_matrix(
        specs,
        &opts,
        &move || Box::new(InProcess::new(c.clone(), t.clone())) as Box<dyn Backend>,
        &|s: &RunSpec| builtin_agent(s, &catalog, &tasks),
    )
    .map_err(|e| e.to_string())
}

fn frozen_lines(records: &[TrajectoryRecord]) -> String {
    records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.duration_ms = 0;
            r.to_line() + "\n"
        })
        .collect()
}

fn determinism() -> Result<String, String> {
    let specs = determinism_specs();
    let serial = run_specs(&specs, 1)?;
    let parallel = run_specs(&specs, 8)?;
    ensure(serial.len() == 64 && parallel.len() == 64, || "run count".into())?;
    for (a, b) in serial.iter().zip(&parallel) {
        ensure(a.error.is_none(), || format!("run {}: {:?}", a.index, a.error))?;
        ensure(a.digest_chain() == b.digest_chain(), || format!("run {} differs across parallelism", a.index))?;
    }
    let path = golden("determinism.traj.ndjson");
    let fresh = frozen_lines(&serial);
    if blessing() {
        std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        std::fs::write(&path, &fresh).map_err(|e| e.to_string())?;
    }
    let stored = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e} (bless with VARAPPS_BLESS=1)", path.display()))?;
    ensure(stored == fresh, || "fresh runs differ from the committed trajectories".into())?;
    let recorded = read_trajectories(&path).map_err(|e| e.to_string())?;
    let mut steps = 0;
    for r in &recorded {
        let mut backend = InProcess::new(Catalog::all(), TaskCatalog::shipped());
        let v = replay(r, &mut backend).map_err(|e| e.to_string())?;
        ensure(v.is_exact(), || format!("run {} diverged: {:?}", r.index, v.first_divergence))?;
        steps += v.steps_checked;
    }
    Ok(format!("64 runs identical at parallelism 1 and 8; committed file replays exactly ({steps} steps)"))
}

fn page_interface(obs: &Observation) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> =
        obs.nodes().iter().map(|n| (n.role.as_str().to_string(), n.label.clone())).collect();
    out.sort();
    out
}

fn pages() -> Vec<Route> {
    vec![
        Route::Home,
        Route::Calendar,
        Route::Todo,
        Route::Messenger,
        Route::Maps,
        Route::CodeEditor,
        Route::Shop,
        Route::Cart,
    ]
}

fn variation_algebra() -> Result<String, String> {
    let base = default_config();
    let catalog = Catalog::all();
    for v in &catalog.variations {
        let once = apply_variation(&base, v).map_err(|e| format!("{}: {e}", v.id))?;
        let twice = apply_variation(&once, v).map_err(|e| format!("{}: {e}", v.id))?;
        ensure(once.digest() == twice.digest(), || format!("{} is not idempotent", v.id))?;
    }
    let (mut commuting, mut conflicting) = (0, 0);
    for a in &catalog.variations {
        for b in &catalog.variations {
            match (compose_variations(&base, &[a, b]), compose_variations(&base, &[b, a])) {
                (Ok(x), Ok(y)) => {
                    ensure(x.digest() == y.digest(), || format!("{} and {} do not commute", a.id, b.id))?;
                    commuting += 1;
                }
                (Err(_), Err(_)) => conflicting += 1,
                _ => return Err(format!("{} and {} compose in one order only", a.id, b.id)),
            }
        }
    }
    let s_base = init_state(&base);
    for v in catalog.variations.iter().filter(|v| v.kind == VariationKind::Appearance) {
        let cfg = apply_variation(&base, v).map_err(|e| e.to_string())?;
        let s = init_state(&cfg);
        for route in pages() {
            let (mut a, mut b) = (s_base.clone(), s.clone());
            a.nav.route = route.clone();
            b.nav.route = route.clone();
            let ia = page_interface(&render(&a, &base, Viewport::HD));
            let ib = page_interface(&render(&b, &cfg, Viewport::HD));
            ensure(ia == ib, || format!("{} changes the interface of {route}", v.id))?;
        }
    }
    let limits = EnumerateLimits { limit: Some(1000), per_app: true };
    let mut digests = BTreeSet::new();
    let mut times = Vec::new();
    for variant in enumerate_variants(&base, &catalog, limits).map_err(|e| e.to_string())? {
        let yaml = variant.config.to_yaml();
        // best of three, so a preempted sample does not count as load cost
        let mut best = Duration::MAX;
        let mut loaded = None;
        for _ in 0..3 {
            let t0 = Instant::now();
            let cfg = load_config(&yaml).map_err(|e| format!("{}: {e}", variant.id))?;
            let _state = init_state(&cfg);
            best = best.min(t0.elapsed());
            loaded = Some(cfg);
        }
        let loaded = loaded.expect("loaded at least once");
        times.push(best);
        ensure(loaded.digest() == variant.digest, || format!("{} does not round-trip", variant.id))?;
        digests.insert(variant.digest);
    }
    times.sort();
    let slowest = times.last().copied().unwrap_or_default();
    let ms = |d: Duration| d.as_secs_f64() * 1000.0;
    let detail = format!(
        "{} variations idempotent, {commuting} pairs commute, {conflicting} conflict both ways, {} distinct variants, load median {:.2} ms, slowest {:.2} ms",
        catalog.variations.len(),
        digests.len(),
        ms(times.get(times.len() / 2).copied().unwrap_or_default()),
        ms(slowest)
    );
    ensure(digests.len() >= 1000, || detail.clone())?;
    ensure(slowest < Duration::from_millis(10), || format!("too slow: {detail}"))?;
    Ok(detail)
}

fn hit_test() -> Result<String, String> {
    let base = default_config();
    let catalog = Catalog::shipped();
    let (mut checked, mut mismatches) = (0, Vec::new());
    for v in SHIPPED {
        let cfg = catalog.apply_ids(&base, &[v]).map_err(|e| e.to_string())?;
        let s0 = init_state(&cfg);
        for route in pages() {
            for vp in [Viewport::FHD, Viewport::HD, Viewport::HVGA] {
                let mut s = s0.clone();
                s.nav.route = route.clone();
                let obs = render(&s, &cfg, vp);
                for node in obs.interactive() {
                    let by_bid = parse_action(&format!("click('{}')", node.bid), ActionProfile::Full).unwrap();
                    let expected = resolve(&obs, &s.nav, &by_bid);
                    let mut scrolled = s.clone();
                    scrolled.nav.scroll_offset = obs.scroll_to_show(node);
                    let view = render(&scrolled, &cfg, vp);
                    let moved = view.find(&node.bid).ok_or_else(|| format!("bid {} vanished after scrolling", node.bid))?;
                    let (cx, cy) = moved.bbox.center();
                    let text = format!("mouse_click({cx}, {})", cy as i64 - view.scroll_offset as i64);
                    let by_point = parse_action(&text, ActionProfile::Full).unwrap();
                    let got = resolve(&view, &scrolled.nav, &by_point);
                    checked += 1;
                    if expected.as_ref().ok() != got.as_ref().ok() || expected.is_err() {
                        mismatches.push(format!("{v} {route} {vp} bid {} `{}`: {expected:?} vs {got:?}", node.bid, node.label));
                    }
                }
            }
        }
    }
    ensure(mismatches.is_empty(), || format!("{} of {checked} disagree; first: {}", mismatches.len(), mismatches[0]))?;
    Ok(format!("{checked} elements agree across 8 pages x 8 variations x 3 viewports"))
}

const SESSION: &str = "{session}";

struct Exchange {
    method: String,
    path: String,
    body: Option<String>,
}

fn send(client: &reqwest::blocking::Client, base: &str, ex: &Exchange, id: &str) -> Result<Value, String> {
    let url = format!("{base}{}", ex.path.replace(SESSION, id));
    let req = match ex.method.as_str() {
        "GET" => client.get(url),
        "POST" => client.post(url),
        "DELETE" => client.delete(url),
        m => return Err(format!("method {m}")),
    };
    let req = match &ex.body {
        Some(b) => req.header("content-type", "application/json").body(b.replace(SESSION, id)),
        None => req,
    };
    let resp = req.send().map_err(|e| e.to_string())?;
    let status = resp.status().as_u16();
    let ctype = resp
        .headers()
        .get("content-type")
        .and_then(|h| h.to_str().ok())
        .unwrap_or("")
        .to_string();
    let text = resp.text().map_err(|e| e.to_string())?;
    let text = if id.is_empty() { text } else { text.replace(id, SESSION) };
    Ok(json!({
        "request": {"method": ex.method, "path": ex.path, "body": ex.body},
        "response": {"status": status, "content_type": ctype, "body": text},
    }))
}

fn script() -> Vec<Exchange> {
    let task = "AddEventTask";
    let catalog = Catalog::all();
    let tasks = TaskCatalog::shipped();
    let spec = RunSpec::new("oracle", task, &["dark_theme"], 1);
    let mut backend = InProcess::new(catalog.clone(), tasks.clone());
    let rec = run_one(0, &spec, &mut backend, &|s: &RunSpec| builtin_agent(s, &catalog, &tasks));
    let mut actions: Vec<String> = rec.action_texts().iter().take(5).map(|s| s.to_string()).collect();
    while actions.len() < 5 {
        actions.push("scroll(0, 100)".into());
    }
    let mut out = vec![
        Exchange {
            method: "POST".into(),
            path: "/sessions".into(),
            body: Some(json!({"protocol_version": 1, "task": task, "variations": ["dark_theme"], "seed": 1}).to_string()),
        },
        Exchange { method: "GET".into(), path: format!("/sessions/{SESSION}/observation?mode=axtree"), body: None },
    ];
    for a in actions {
        out.push(Exchange {
            method: "POST".into(),
            path: format!("/sessions/{SESSION}/actions"),
            body: Some(json!({"protocol_version": 1, "action": a}).to_string()),
        });
    }
    out.push(Exchange { method: "GET".into(), path: format!("/sessions/{SESSION}/state"), body: None });
    out.push(Exchange { method: "GET".into(), path: format!("/sessions/{SESSION}/result"), body: None });
    out
}

fn transcript_lines(base: &str, exchanges: &[Exchange]) -> Result<String, String> {
    let client = reqwest::blocking::Client::new();
    let mut id = String::new();
    let mut out = String::new();
    for ex in exchanges {
        let mut line = send(&client, base, ex, &id)?;
        if id.is_empty() {
            let body = line["response"]["body"].as_str().unwrap_or("");
            let created: Value = serde_json::from_str(body).map_err(|e| format!("create: {e}: {body}"))?;
            id = created["session_id"].as_str().ok_or("no session id")?.to_string();
            let masked = body.replace(&id, SESSION);
            line["response"]["body"] = masked.into();
        }
        out.push_str(&line.to_string());
        out.push('\n');
    }
    Ok(out)
}

fn http_transcript() -> Result<String, String> {
    let srv = spawn_background(AppState::default()).map_err(|e| e.to_string())?;
    let base = srv.url();
    let path = golden("http_transcript.ndjson");
    if blessing() {
        let text = transcript_lines(&base, &script())?;
        std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
    }
    let stored = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e} (bless with VARAPPS_BLESS=1)", path.display()))?;
    let mut exchanges = Vec::new();
    for line in stored.lines() {
        let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let r = &v["request"];
        exchanges.push(Exchange {
            method: r["method"].as_str().unwrap_or("").into(),
            path: r["path"].as_str().unwrap_or("").into(),
            body: r["body"].as_str().map(String::from),
        });
    }
    let replayed = transcript_lines(&base, &exchanges)?;
    for (i, (a, b)) in stored.lines().zip(replayed.lines()).enumerate() {
        ensure(a == b, || format!("exchange {} differs:\n  committed {a}\n  replayed  {b}", i + 1))?;
    }
    ensure(stored.lines().count() == replayed.lines().count(), || "exchange count".into())?;
    ensure(exchanges.len() == 9, || format!("{} exchanges", exchanges.len()))?;
    Ok(format!("{} exchanges replay byte-identically", exchanges.len()))
}

fn main() {
    let checks: [(&str, Check); 10] = [
        ("structural fidelity", manifest),
        ("oracle solvability matrix", oracle_matrix),
        ("reward anti-hacking", side_effect_injection),
        ("metric exactness", metrics),
        ("loop detector oracle", loops),
        ("parser corpus", parser_corpus),
        ("determinism and isolation", determinism),
        ("variation algebra", variation_algebra),
        ("hit-test and bid agreement", hit_test),
        ("protocol golden transcript", http_transcript),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {n:>2} {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {n:>2} {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
