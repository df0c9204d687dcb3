use criterion::{black_box, criterion_group, criterion_main, Criterion};
use varapps::action::{parse_action, ActionProfile};
use varapps::analytics::count_loops;
use varapps::config::{default_config, enumerate_variants, init_state, Catalog, EnumerateLimits};
use varapps::harness::{builtin_agent, run_one, InProcess, RunSpec};
use varapps::state::canonicalize;
use varapps::tasks::TaskCatalog;

fn parsing(c: &mut Criterion) {
    let inputs = [
        "click('a12')",
        "fill('b3', 'Buy milk')",
        "mouse_click(612, 340)",
        "keyboard_press('ControlOrMeta+a')",
        "scroll(0, 200)",
        "mouse_click(x=612 y)",
    ];
    c.bench_function("parse_action", |b| {
        b.iter(|| {
            for s in inputs {
                let _ = black_box(parse_action(black_box(s), ActionProfile::Full));
            }
        })
    });
}

fn state(c: &mut Criterion) {
    let s = init_state(&default_config());
    c.bench_function("canonical_digest", |b| b.iter(|| black_box(canonicalize(black_box(&s)).digest())));
    let catalog = Catalog::all();
    c.bench_function("enumerate_100_variants", |b| {
        b.iter(|| {
            let base = default_config();
            let stream = enumerate_variants(&base, &catalog, EnumerateLimits { limit: Some(100), per_app: false }).unwrap();
            black_box(stream.count())
        })
    });
}

fn episodes(c: &mut Criterion) {
    let catalog = Catalog::all();
    let tasks = TaskCatalog::shipped();
    let agents = |s: &RunSpec| builtin_agent(s, &catalog, &tasks);
    for agent in ["oracle", "oracle-visual"] {
        let spec = RunSpec::new(agent, "AddEventTask", &["dark_theme"], 0);
        c.bench_function(&format!("episode_{agent}_add_event"), |b| {
            b.iter(|| {
                let mut backend = InProcess::new(catalog.clone(), tasks.clone());
                black_box(run_one(0, &spec, &mut backend, &agents))
            })
        });
    }
}

fn loops(c: &mut Criterion) {
    let seq: Vec<String> = (0..30).map(|i| format!("click('{}')", (i * 7) % 4)).collect();
    c.bench_function("count_loops_30", |b| b.iter(|| black_box(count_loops(black_box(&seq)))));
}

criterion_group!(benches, parsing, state, episodes, loops);
criterion_main!(benches);
