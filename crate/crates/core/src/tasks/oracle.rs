//! Scripted solution for each task as a sequence of semantic controls.

use crate::state::{Control, EnvState, FieldId, NodeKind, Route};

use super::{expand, shift_date, Change, TaskError, TaskSpec};

/// Controls that take `s0` to the task's target state through the UI.
/// `Navigate` entries may be skipped when the page is already showing.
pub fn oracle_plan(task: &TaskSpec, s0: &EnvState) -> Result<Vec<Control>, TaskError> {
    let mut plan = Vec::new();
    for c in task.all_changes() {
        plan_change(&mut plan, c, s0).map_err(|r| task.invalid(r))?;
    }
    Ok(plan)
}

fn set(field: FieldId, value: String) -> Control {
    Control::SetField { field, value }
}

fn plan_change(plan: &mut Vec<Control>, change: &Change, s0: &EnvState) -> Result<(), String> {
    let text = |t: &str| expand(t, s0).map(|v| v.trim().to_string());
    match change {
        Change::TodoAdd { text: t } => plan.extend([
            Control::Navigate(Route::Todo),
            set(FieldId::TodoText, text(t)?),
            Control::SubmitAddTodo,
        ]),
        Change::TodoMarkDone { index } => {
            plan.extend([Control::Navigate(Route::Todo), Control::ToggleTodo(*index)])
        }
        Change::TodoRemove { index } => {
            plan.extend([Control::Navigate(Route::Todo), Control::DeleteTodo(*index)])
        }
        Change::EventAdd { title, date } => plan.extend([
            Control::Navigate(Route::Calendar),
            Control::OpenAddEvent,
            set(FieldId::EventTitle, text(title)?),
            set(FieldId::EventDate, text(date)?),
            Control::SubmitAddEvent,
        ]),
        Change::EventDuplicate { index, shift_years } => {
            let e = s0.calendar.get(*index).ok_or("event index out of range")?;
            plan.extend([
                Control::Navigate(Route::Calendar),
                Control::DuplicateEvent(*index),
                set(FieldId::EventDate, shift_date(e.date, *shift_years)?.to_string()),
                Control::SubmitAddEvent,
            ]);
        }
        Change::EventRemove { index } => {
            plan.extend([Control::Navigate(Route::Calendar), Control::DeleteEvent(*index)])
        }
        Change::MessageSend { peer, body } => plan.extend([
            Control::Navigate(Route::Messenger),
            Control::OpenConversation(text(peer)?),
            set(FieldId::MessageBody, text(body)?),
            Control::SubmitMessage,
        ]),
        Change::MessageForward { from, to } => {
            let from = text(from)?;
            let seq = s0.last_received(&from).ok_or("nothing to forward")?.seq;
            plan.extend([
                Control::Navigate(Route::Messenger),
                Control::OpenConversation(from.clone()),
                Control::OpenForward { peer: from.clone(), seq },
                Control::ForwardTo { from, seq, to: text(to)? },
            ]);
        }
        Change::PlaceAdd { query } => plan.extend([
            Control::Navigate(Route::Maps),
            set(FieldId::MapsQuery, text(query)?),
            Control::SearchPlace,
            Control::SavePlace,
        ]),
        Change::PlaceRemove { index } => {
            plan.extend([Control::Navigate(Route::Maps), Control::RemovePlace(*index)])
        }
        Change::FileCreate { parent, name } => plan.extend([
            Control::Navigate(Route::CodeEditor),
            Control::OpenNewEntry { parent: text(parent)?, kind: NodeKind::File },
            set(FieldId::EntryName, text(name)?),
            Control::SubmitNewEntry,
        ]),
        Change::FileRemove { path } => {
            plan.extend([Control::Navigate(Route::CodeEditor), Control::DeleteEntry(text(path)?)])
        }
        Change::CartAdd { product_id, options, quantity } => {
            plan.extend([Control::Navigate(Route::Shop), Control::OpenProduct(product_id.clone())]);
            for (option, value) in options {
                plan.push(Control::SelectOption { option: option.clone(), value: value.clone() });
            }
            if *quantity != 1 {
                plan.push(set(FieldId::Quantity, quantity.to_string()));
            }
            plan.push(Control::AddToCart);
        }
        Change::CartClear {} => plan.extend([
            Control::Navigate(Route::Shop),
            Control::Navigate(Route::Cart),
            Control::ClearCart,
        ]),
        Change::Navigate { route } => plan.push(Control::Navigate(route.clone())),
    }
    Ok(())
}
