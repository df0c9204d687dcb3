use super::*;
use crate::harness::{run_one, Agent, AgentView, InProcess, RunSpec};
use crate::tasks::TaskCatalog;
use proptest::prelude::*;

/// Enumerate every maximal run, then resolve overlaps by (start, unit).
fn loops_brute(actions: &[&str]) -> usize {
    let a: Vec<&str> = actions.iter().map(|s| s.trim()).collect();
    let n = a.len();
    let mut runs = Vec::new();
    for start in 0..n {
        for unit in 1..=n {
            for k in 2..=n {
                let end = start + k * unit;
                if end > n {
                    break;
                }
                let w = &a[start..start + unit];
                if !(0..k).all(|j| &a[start + j * unit..start + (j + 1) * unit] == w) {
                    continue;
                }
                let left = start >= unit && &a[start - unit..start] == w;
                let right = end + unit <= n && &a[end..end + unit] == w;
                if !left && !right {
                    runs.push((start, unit, end));
                }
            }
        }
    }
    runs.sort();
    let mut taken = 0;
    let mut free_from = 0;
    for (start, _, end) in runs {
        if start >= free_from {
            taken += 1;
            free_from = end;
        }
    }
    taken
}

#[test]
fn loop_examples() {
    assert_eq!(count_loops(&["click(47)"; 7]), 1);
    assert_eq!(count_loops(&["keyboard_press(key='ctrl a')"; 2]), 1);
    assert_eq!(count_loops(&["a", "b", "c"]), 0);
    assert_eq!(count_loops::<&str>(&[]), 0);
    assert_eq!(count_loops(&["a", "b", "a", "b", "a", "b"]), 1);
    assert_eq!(count_loops(&["a", "a", "b", "b"]), 2);
    assert_eq!(count_loops(&[" click(1)", "click(1) "]), 1);
    assert_eq!(count_loops(&["x", "a", "b", "a", "b", "a", "b"]), 1);
}

struct Script(Vec<&'static str>, usize);

impl Agent for Script {
    fn act(&mut self, _: &AgentView<'_>) -> Result<String, String> {
        self.1 += 1;
        Ok(self.0.get(self.1 - 1).copied().unwrap_or("scroll(0, 0)").to_string())
    }
}

fn scripted(task: &str, actions: Vec<&'static str>) -> TrajectoryRecord {
    let mut spec = RunSpec::new("script", task, &[], 0);
    spec.horizon = actions.len();
    let agents = move |_: &RunSpec| -> Result<Box<dyn Agent>, String> { Ok(Box::new(Script(actions.clone(), 0))) };
    run_one(0, &spec, &mut InProcess::default(), &agents)
}

#[test]
fn invalid_action_counts() {
    let r = scripted("AddEventTask", vec!["click(23)", "noop", "check_ax_tree()", "mouse_click(x=612 y)"]);
    assert!(r.error.is_none());
    assert_eq!(count_invalid(&r), 4);
    let r = scripted("AddEventTask", vec!["scroll(0, 100)", "go_back()"]);
    assert_eq!(count_invalid(&r), 0);
}

#[test]
fn intent_examples() {
    let tasks = TaskCatalog::shipped();
    let add = tasks.get("AddEventTask").unwrap();
    let r = scripted("AddEventTask", vec!["goto('/calendar')", "scroll(0, 10)"]);
    assert!(!intent_misunderstood(&r, add).unwrap());
    let r = scripted("AddEventTask", vec!["goto('/shop')"]);
    assert!(intent_misunderstood(&r, add).unwrap());
    let r = scripted("AddEventTask", vec!["goto('https://leafletjs.com/')"]);
    assert!(intent_misunderstood(&r, add).unwrap());
    let nav = tasks.get(NAVIGATION_TASK).unwrap();
    assert!(matches!(intent_misunderstood(&r, nav), Err(AnalyticsError::NavigationTask(_))));
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

#[test]
fn metric_examples() {
    let rep = reliability(&samples(&[("default", &[1.0, 0.0, 1.0, 0.0])]), StdConvention::Sample).unwrap();
    let c = &rep.rows[0].cells[0];
    assert_eq!(c.mad, Some(0.5));
    assert_eq!(c.pass_at_1, 0.5);

    let nine = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let rep = reliability(&samples(&[("default", &nine)]), StdConvention::Sample).unwrap();
    let c = &rep.rows[0].cells[0];
    // closed form: sum of squares is 5*(4/9)^2 + 4*(5/9)^2 = 20/9, over 8
    let expect = (20.0f64 / 9.0 / 8.0).sqrt();
    assert!((c.pass_at_1 - 5.0 / 9.0).abs() < 1e-12);
    assert!((c.std.unwrap() - expect).abs() < 1e-12);
    assert!((c.pass_at_1 - 0.5556).abs() < 1e-4);
    assert!((c.std.unwrap() - 0.527).abs() < 1e-3);
    let pop = reliability(&samples(&[("default", &nine)]), StdConvention::Population).unwrap();
    assert!((pop.rows[0].cells[0].std.unwrap() - 0.497).abs() < 1e-3);

    let flat = reliability(&samples(&[("x", &[1.0, 1.0]), ("y", &[1.0, 1.0])]), StdConvention::Sample).unwrap();
    let row = &flat.rows[0];
    assert_eq!((row.overall_std, row.overall_mad), (Some(0.0), Some(0.0)));
    assert_eq!((row.ratio_std, row.ratio_mad), (None, None));
}

#[test]
fn thin_cells_are_absent() {
    let rep = reliability(&samples(&[("x", &[1.0]), ("y", &[0.0, 1.0])]), StdConvention::Sample).unwrap();
    let row = &rep.rows[0];
    assert_eq!((row.d, row.n), (2, 1));
    assert_eq!(row.cells[0].std, None);
    assert_eq!(row.cells[0].mad, None);
    assert_eq!(row.fixed_mad, Some(0.5));
    let mut dup = samples(&[("x", &[1.0, 0.0])]);
    dup.push(dup[0].clone());
    assert!(matches!(reliability(&dup, StdConvention::Sample), Err(AnalyticsError::DuplicateSample { .. })));
}

#[test]
fn tables_are_deterministic() {
    let dir = std::env::temp_dir().join(format!("varapps-tables-{}", std::process::id()));
    let recs: Vec<TrajectoryRecord> =
        vec![scripted("SavePlace", vec!["click(23)", "click(23)", "goto('/shop')"]), scripted("SavePlace", vec!["noop"])];
    let tasks = TaskCatalog::shipped();
    let rel = reliability(&samples(&[("default", &[1.0, 0.0, 1.0])]), StdConvention::Sample).unwrap();
    let beh = behavior(&recs, |id| tasks.get(id).ok());
    assert_eq!(beh.rows.len(), 1);
    assert_eq!(beh.rows[0].runs, 2);
    assert_eq!(beh.rows[0].avg_loops, 0.5);
    assert_eq!(beh.rows[0].avg_invalid, 1.5);
    assert_eq!(beh.rows[0].intent_rate, Some(0.5));
    let a = emit_tables(&rel, &beh, &dir.join("a")).unwrap();
    let b = emit_tables(&rel, &beh, &dir.join("b")).unwrap();
    assert_eq!(a.paths.len(), 6);
    for (x, y) in a.paths.iter().zip(&b.paths) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    let csv = std::fs::read_to_string(dir.join("a/reliability.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("agent,task,d,n,pass_at_1,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn loops_match_brute_force(seq in prop::collection::vec(0u8..4, 0..=30)) {
        let acts: Vec<&str> = seq.iter().map(|i| ["a", "b", "c", "d"][*i as usize]).collect();
        prop_assert_eq!(count_loops(&acts), loops_brute(&acts));
    }
}

proptest! {
    #[test]
    fn deviation_identities(xs in prop::collection::vec(0.0f64..1.0, 2..40), c in -5.0f64..5.0, a in -5.0f64..5.0) {
        let tol = 1e-9;
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| x * a).collect();
        for conv in [StdConvention::Sample, StdConvention::Population] {
            let s = std_dev(&xs, conv).unwrap();
            prop_assert!((std_dev(&shifted, conv).unwrap() - s).abs() < tol);
            prop_assert!((std_dev(&scaled, conv).unwrap() - a.abs() * s).abs() < tol);
        }
        let m = mad(&xs).unwrap();
        prop_assert!((mad(&shifted).unwrap() - m).abs() < tol);
        prop_assert!((mad(&scaled).unwrap() - a.abs() * m).abs() < tol);
        let n = xs.len() as f64;
        let s = std_dev(&xs, StdConvention::Sample).unwrap();
        prop_assert!(m <= s * (n / (n - 1.0)).sqrt() + tol);
        prop_assert!(m <= std_dev(&xs, StdConvention::Population).unwrap() + tol);
    }

    #[test]
    fn single_variation_overall_equals_within(rs in prop::collection::vec(prop::bool::ANY, 2..20)) {
        let rs: Vec<f64> = rs.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect();
        for conv in [StdConvention::Sample, StdConvention::Population] {
            let rep = reliability(&samples(&[("only", &rs)]), conv).unwrap();
            let row = &rep.rows[0];
            prop_assert_eq!(row.d, 1);
            prop_assert!((row.overall_std.unwrap() - row.cells[0].std.unwrap()).abs() < 1e-12);
            prop_assert!((row.overall_mad.unwrap() - row.cells[0].mad.unwrap()).abs() < 1e-12);
        }
    }
}
