//! Text form of activity models.
//!
//! ```text
//! workflow  := name ":" "start" "=>" seq ("=>" "end" ".")?
//! seq       := step ("=>" step)*
//! step      := cond | choice | action
//! cond      := "if" guard "{" seq "}" ("else" "{" seq "}")?
//! choice    := action ("/" action)+
//! action    := free text without "=>", "/", "{", "}"
//! ```
//!
//! Closed models end with `=> end.`. Open models end with `=>` at their open
//! point, leaving the braces of enclosing branches unclosed so the generated
//! continuation can finish them.

use crate::model::{ActivityModel, Completion, Step};

pub fn serialize_activity(model: &ActivityModel, open_ended: bool) -> String {
    let mut out = format!("{}: start => ", model.name.display());
    match (open_ended, model.completion) {
        (true, Completion::Open { depth }) => render_open(&model.body, depth, &mut out),
        (true, Completion::Closed) => render_open(&model.body, 0, &mut out),
        (false, _) => {
            render_seq(&model.body, &mut out);
            out.push_str(" => end.");
        }
    }
    out
}

fn render_seq(seq: &[Step], out: &mut String) {
    for (i, step) in seq.iter().enumerate() {
        if i > 0 {
            out.push_str(" => ");
        }
        render_step(step, out);
    }
}

fn render_step(step: &Step, out: &mut String) {
    match step {
        Step::Action(label) => out.push_str(label.as_str()),
        Step::Choice(options) => {
            for (i, o) in options.iter().enumerate() {
                if i > 0 {
                    out.push_str(" / ");
                }
                out.push_str(o.as_str());
            }
        }
        Step::Conditional {
            guard,
            then,
            otherwise,
        } => {
            out.push_str("if ");
            out.push_str(guard.as_str());
            out.push_str(" {");
            render_seq(then, out);
            out.push('}');
            if let Some(other) = otherwise {
                out.push_str(" else {");
                render_seq(other, out);
                out.push('}');
            }
        }
    }
}

fn render_open(seq: &[Step], depth: usize, out: &mut String) {
    if depth == 0 {
        render_seq(seq, out);
        out.push_str(" =>");
        return;
    }
    let (last, init) = seq.split_last().expect("validated models have non-empty sequences");
    render_seq(init, out);
    if !init.is_empty() {
        out.push_str(" => ");
    }
    match last {
        Step::Conditional {
            guard,
            then,
            otherwise,
        } => {
            out.push_str("if ");
            out.push_str(guard.as_str());
            out.push_str(" {");
            match otherwise {
                Some(other) => {
                    render_seq(then, out);
                    out.push_str("} else {");
                    render_open(other, depth - 1, out);
                }
                None => render_open(then, depth - 1, out),
            }
        }
        // an invalid open point degrades to rendering after the step
        other => {
            render_step(other, out);
            out.push_str(" =>");
        }
    }
}
