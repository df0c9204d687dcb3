use super::*;
use crate::config::{apply_variation, default_config, init_state, Catalog};
use crate::state::{apply_control, Control, FieldId};
use proptest::prelude::*;

fn s0() -> EnvState {
    init_state(&default_config())
}

fn shipped_states() -> Vec<(String, EnvState)> {
    let base = default_config();
    Catalog::shipped()
        .variations
        .iter()
        .map(|v| (v.id.clone(), init_state(&apply_variation(&base, v).unwrap())))
        .collect()
}

fn run_plan(task: &TaskSpec, s0: &EnvState) -> EnvState {
    let mut s = s0.clone();
    for c in oracle_plan(task, s0).unwrap() {
        if matches!(&c, Control::Navigate(r) if *r == s.nav.route) {
            continue;
        }
        s = apply_control(&s, &c).unwrap_or_else(|e| panic!("{}: {c}: {e}", task.id));
    }
    s
}

#[test]
fn catalog_shape() {
    let cat = TaskCatalog::shipped();
    let ids: Vec<&str> = cat.single_goal().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, SINGLE_GOAL_TASKS);
    assert!(cat.multi_step().count() >= 1);
    for (v, s) in shipped_states() {
        cat.validate(&s).unwrap_or_else(|e| panic!("{v}: {e}"));
    }
}

#[test]
fn buy_milk_is_rewarded() {
    let task = TaskCatalog::shipped().get("AddItem2ToDoListTask").unwrap().clone();
    let s0 = s0();
    let mut st = s0.clone();
    st.todos.push(TodoItem { text: "Buy milk".into(), done: false });
    assert_eq!(evaluate(&s0, &st, &task).unwrap().reward, 1.0);
    st.todos.push(TodoItem { text: "Buy milk".into(), done: false });
    assert_eq!(evaluate(&s0, &st, &task).unwrap().reward, 0.0);
}

#[test]
fn identity_scores_zero_except_navigation() {
    let cat = TaskCatalog::shipped();
    let s0 = s0();
    for t in cat.tasks() {
        let r = evaluate(&s0, &s0, t).unwrap();
        assert_eq!(r.reward, 0.0, "{}", t.id);
        assert!(!r.success && !r.at_least_one_step);
    }
    let nav = cat.get("NavigateToPageTask").unwrap();
    let mut there = s0.clone();
    there.nav.route = Route::Todo;
    assert!(evaluate(&s0, &there, nav).unwrap().success);
    there.todos[0].done = true;
    assert!(!evaluate(&s0, &there, nav).unwrap().success);
}

#[test]
fn extra_deleted_event_voids_reward() {
    let task = TaskCatalog::shipped().get("AddItem2ToDoListTask").unwrap().clone();
    let s0 = s0();
    let mut st = task.target_state(&s0).unwrap();
    st.calendar.remove(2);
    // brute-force oracle: any field-level difference from the target is a failure
    let target = canonicalize(&task.target_state(&s0).unwrap());
    assert!(!crate::state::diff(&target, &canonicalize(&st)).is_empty());
    assert_eq!(evaluate(&s0, &st, &task).unwrap().reward, 0.0);
}

#[test]
fn route_and_volatile_state_are_masked() {
    let task = TaskCatalog::shipped().get("AddItem2ToDoListTask").unwrap().clone();
    let s0 = s0();
    let mut st = task.target_state(&s0).unwrap();
    st.nav.route = Route::Shop;
    st.nav.scroll_offset = 300;
    st.logical_clock = 99;
    st.nav.pending_form = Some([("todo.text".to_string(), "draft".to_string())].into());
    assert!(evaluate(&s0, &st, &task).unwrap().success);
}

#[test]
fn goal_sampling() {
    let cat = TaskCatalog::shipped();
    let s0 = s0();
    let t = cat.get("MessageXTask").unwrap();
    assert_eq!(t.sample_goal(0, &s0).unwrap(), "Ask Bob 'Are we playing basketball on Saturday?'");
    assert_eq!(t.sample_goal(7, &s0).unwrap(), t.sample_goal(7, &s0).unwrap());
    for t in cat.tasks() {
        let k = t.goal_prompts.len() as u64;
        let seen: std::collections::BTreeSet<String> =
            (0..k).map(|seed| t.sample_goal(seed, &s0).unwrap()).collect();
        assert_eq!(seen.len() as u64, k, "{}", t.id);
    }
    let mark = cat.get("MarkItemAsDoneTask").unwrap();
    assert_eq!(mark.sample_goal(0, &s0).unwrap(), "Can you mark 'Buy groceries' done in my todos?");
}

#[test]
fn oracle_plans_solve_every_task_on_every_variation() {
    let cat = TaskCatalog::shipped();
    for (v, s0) in shipped_states() {
        for t in cat.tasks() {
            let st = run_plan(t, &s0);
            let r = evaluate(&s0, &st, t).unwrap();
            assert!(r.success, "{} on {v}: {r:?}", t.id);
        }
    }
}

#[test]
fn forward_is_verbatim() {
    let task = TaskCatalog::shipped().get("ForwardMessageTask").unwrap().clone();
    let s0 = s0();
    let target = task.target_state(&s0).unwrap();
    let last = target.conversations["Charlie"].last().unwrap();
    assert_eq!(last.body, "Let's grab coffee on Sunday at 10.");
    assert_eq!(last.direction, Direction::Sent);
}

#[test]
fn first_hit_then_undo_still_succeeds() {
    let task = TaskCatalog::shipped().get("MarkItemAsDoneTask").unwrap().clone();
    let s0 = s0();
    let s1 = apply_control(&s0, &Control::Navigate(Route::Todo)).unwrap();
    let s2 = apply_control(&s1, &Control::ToggleTodo(0)).unwrap();
    let s3 = apply_control(&s2, &Control::ToggleTodo(0)).unwrap();
    let out = episode_outcome(&[s0.clone(), s1, s2, s3], &task, DEFAULT_HORIZON).unwrap();
    assert!(out.result.success);
    assert_eq!(out.achieved_at, Some(2));
    assert_eq!(out.steps, 2);
}

#[test]
fn idle_episode_runs_to_horizon() {
    let task = TaskCatalog::shipped().get("SavePlace").unwrap().clone();
    let s0 = s0();
    let states = vec![s0.clone(); DEFAULT_HORIZON + 5];
    let out = episode_outcome(&states, &task, DEFAULT_HORIZON).unwrap();
    assert_eq!(out.result.reward, 0.0);
    assert_eq!(out.steps, DEFAULT_HORIZON);
    assert_eq!(out.achieved_at, None);
}

#[test]
fn multi_step_partial_credit() {
    let task = TaskCatalog::shipped().get("PlanTripThreeApps").unwrap().clone();
    let s0 = s0();
    let ev = Evaluator::new(&task, &s0).unwrap();
    let mut s = apply_control(&s0, &Control::Navigate(Route::Todo)).unwrap();
    s = apply_control(&s, &Control::SetField { field: FieldId::TodoText, value: "Pack bags".into() }).unwrap();
    s = apply_control(&s, &Control::SubmitAddTodo).unwrap();
    let r = ev.evaluate(&s);
    assert_eq!((r.steps_completed, r.total_steps), (1, 3));
    assert!(r.at_least_one_step && !r.success);
    assert!((r.reward - 1.0 / 3.0).abs() < 1e-12);
    // an out-of-scope change wipes the partial credit
    s = apply_control(&s, &Control::ToggleTodo(0)).unwrap();
    assert_eq!(ev.evaluate(&s).steps_completed, 0);
}

#[test]
fn unknown_task() {
    assert!(matches!(TaskCatalog::shipped().get("Nope"), Err(TaskError::UnknownTask(_))));
}

#[test]
fn catalog_round_trips() {
    let cat = TaskCatalog::shipped();
    assert_eq!(TaskCatalog::parse(&cat.to_yaml()).unwrap(), cat);
}

proptest! {
    #[test]
    fn any_side_effect_voids_success(task_idx in 0usize..18, pick in any::<prop::sample::Index>(), salt in "[a-z]{1,6}") {
        let cat = TaskCatalog::shipped();
        let task = &cat.tasks()[task_idx % cat.tasks().len()];
        let s0 = s0();
        let st = run_plan(task, &s0);
        let options = side_effects(&st, &salt);
        let bad = &options[pick.index(options.len())];
        prop_assert_eq!(evaluate(&s0, bad, task).unwrap().reward < 1.0, true);
        if !task.is_multi_step() {
            prop_assert_eq!(evaluate(&s0, bad, task).unwrap().reward, 0.0);
        }
    }

    #[test]
    fn multi_step_progress_is_monotone(order in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let task = TaskCatalog::shipped().get("PlanTripThreeApps").unwrap().clone();
        let s0 = s0();
        let ev = Evaluator::new(&task, &s0).unwrap();
        let mut s = s0.clone();
        let mut last = 0;
        for i in order {
            for c in &task.steps[i] {
                apply_change(&mut s, &s0, c).unwrap();
            }
            let done = ev.evaluate(&s).steps_completed;
            prop_assert!(done > last);
            last = done;
        }
        prop_assert_eq!(last, 3);
    }
}
