use crate::model::{ActivityModel, Completion, Identifier, Label, Step};

/// Redundant closing braces tolerated at the top level of one text.
pub const MAX_REDUNDANT_CLOSERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActivityParseError {
    #[error("grammar error at byte {position}: expected {expected}")]
    Grammar { position: usize, expected: String },
    #[error("continuation cannot attach to the partial model: {0}")]
    Unsplicable(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Arrow,
    Slash,
    Open,
    Close,
    Dot,
    Word(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn tokenize(text: &str, base: usize) -> Vec<Token> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut word_start: Option<usize> = None;
    let flush = |tokens: &mut Vec<Token>, start: &mut Option<usize>, end: usize| {
        if let Some(s) = start.take() {
            tokens.push(Token {
                tok: Tok::Word(text[s..end].to_string()),
                pos: base + s,
            });
        }
    };
    while i < bytes.len() {
        let symbol = match bytes[i] {
            b'=' if bytes.get(i + 1) == Some(&b'>') => Some((Tok::Arrow, 2)),
            b'/' => Some((Tok::Slash, 1)),
            b'{' => Some((Tok::Open, 1)),
            b'}' => Some((Tok::Close, 1)),
            b'.' => Some((Tok::Dot, 1)),
            _ => None,
        };
        if let Some((tok, len)) = symbol {
            flush(&mut tokens, &mut word_start, i);
            tokens.push(Token { tok, pos: base + i });
            i += len;
            continue;
        }
        let ch = text[i..].chars().next().expect("index on char boundary");
        if ch.is_whitespace() {
            flush(&mut tokens, &mut word_start, i);
        } else if word_start.is_none() {
            word_start = Some(i);
        }
        i += ch.len_utf8();
    }
    flush(&mut tokens, &mut word_start, bytes.len());
    tokens
}

struct Frame {
    guard: Label,
    then: Vec<Step>,
    otherwise: Option<Vec<Step>>,
}

impl Frame {
    fn into_step(self) -> Step {
        Step::Conditional {
            guard: self.guard,
            then: self.then,
            otherwise: self.otherwise,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Whole workflow; nothing may follow the final `.`.
    Strict,
    /// Generated continuation; text after the final `.` is ignored.
    Continuation,
}

struct Builder {
    body: Vec<Step>,
    stack: Vec<Frame>,
    redundant: usize,
    closed: bool,
    end_pos: usize,
}

impl Builder {
    fn from_partial(partial: &ActivityModel) -> Result<Self, ActivityParseError> {
        let depth = match partial.completion {
            Completion::Open { depth } => depth,
            Completion::Closed => {
                return Err(ActivityParseError::Unsplicable(
                    "partial model is already closed".into(),
                ))
            }
        };
        let mut builder = Builder {
            body: partial.body.clone(),
            stack: Vec::new(),
            redundant: 0,
            closed: false,
            end_pos: 0,
        };
        for _ in 0..depth {
            match builder.current().pop() {
                Some(Step::Conditional {
                    guard,
                    then,
                    otherwise,
                }) => builder.stack.push(Frame {
                    guard,
                    then,
                    otherwise,
                }),
                _ => {
                    return Err(ActivityParseError::Unsplicable(
                        "open point does not sit inside a conditional".into(),
                    ))
                }
            }
        }
        Ok(builder)
    }

    fn current(&mut self) -> &mut Vec<Step> {
        match self.stack.last_mut() {
            Some(frame) => frame.otherwise.as_mut().unwrap_or(&mut frame.then),
            None => &mut self.body,
        }
    }

    fn pop_frame(&mut self) {
        if let Some(frame) = self.stack.pop() {
            let step = frame.into_step();
            self.current().push(step);
        }
    }

    fn finish(mut self, name: Identifier) -> Result<ActivityModel, ActivityParseError> {
        let depth = self.stack.len();
        while !self.stack.is_empty() {
            self.pop_frame();
        }
        let completion = if self.closed {
            Completion::Closed
        } else {
            Completion::Open { depth }
        };
        let model = ActivityModel {
            name,
            body: self.body,
            completion,
        };
        model
            .validate()
            .map_err(|e| ActivityParseError::Grammar {
                position: self.end_pos,
                expected: format!("a well-formed workflow ({e})"),
            })?;
        Ok(model)
    }
}

struct Cursor<'a> {
    tokens: &'a [Token],
    idx: usize,
    end: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.tokens.get(self.idx).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Tok> {
        self.tokens.get(self.idx + offset).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) {
        self.idx += 1;
    }

    fn words(&mut self) -> Vec<&'a str> {
        let mut out = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            out.push(w.as_str());
            self.bump();
        }
        out
    }

    fn error<T>(&self, expected: &str) -> Result<T, ActivityParseError> {
        Err(ActivityParseError::Grammar {
            position: self.pos(),
            expected: expected.to_string(),
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Start,
    ExpectStep,
    AfterStep,
}

fn label_of(words: &[&str], cur: &Cursor<'_>) -> Result<Label, ActivityParseError> {
    Label::new(&words.join(" ")).or_else(|_| cur.error("a label"))
}

fn run(
    builder: &mut Builder,
    cur: &mut Cursor<'_>,
    mut state: State,
    mode: Mode,
) -> Result<(), ActivityParseError> {
    loop {
        let Some(tok) = cur.peek() else {
            return Ok(());
        };
        match (state, tok) {
            (State::Start, Tok::Arrow) => {
                cur.bump();
                state = State::ExpectStep;
            }
            (State::Start, Tok::Slash) => {
                return Err(ActivityParseError::Unsplicable(
                    "continuation extends a choice that is already complete".into(),
                ))
            }
            (State::Start, Tok::Word(w)) if w == "else" => {
                return Err(ActivityParseError::Unsplicable(
                    "`else` must follow a closing brace".into(),
                ))
            }
            (State::Start, Tok::Close | Tok::Dot) => state = State::AfterStep,
            (State::Start | State::ExpectStep, Tok::Word(_)) => {
                let first_pos = cur.pos();
                let words = cur.words();
                if words[0] == "if" {
                    if words.len() < 2 {
                        return cur.error("a guard after `if`");
                    }
                    if cur.peek() != Some(&Tok::Open) {
                        return cur.error("`{` after the guard");
                    }
                    cur.bump();
                    let guard = label_of(&words[1..], cur)?;
                    builder.stack.push(Frame {
                        guard,
                        then: Vec::new(),
                        otherwise: None,
                    });
                    state = State::ExpectStep;
                    continue;
                }
                let label = label_of(&words, cur)?;
                if cur.peek() == Some(&Tok::Slash) {
                    let mut options = vec![label];
                    while cur.peek() == Some(&Tok::Slash) {
                        cur.bump();
                        let words = cur.words();
                        if words.is_empty() {
                            return cur.error("a choice option after `/`");
                        }
                        options.push(label_of(&words, cur)?);
                    }
                    builder.current().push(Step::Choice(options));
                } else if words == ["end"] && matches!(cur.peek(), None | Some(Tok::Dot)) {
                    builder.end_pos = first_pos;
                    builder.closed = true;
                    if cur.peek() == Some(&Tok::Dot) {
                        cur.bump();
                    }
                    return trailing(cur, mode);
                } else {
                    builder.current().push(Step::Action(label));
                }
                state = State::AfterStep;
            }
            (State::ExpectStep, _) => return cur.error("a step"),
            (State::AfterStep, Tok::Arrow) => {
                cur.bump();
                state = State::ExpectStep;
            }
            (State::AfterStep, Tok::Close) => {
                cur.bump();
                if builder.stack.is_empty() {
                    builder.redundant += 1;
                    if builder.redundant > MAX_REDUNDANT_CLOSERS {
                        return Err(ActivityParseError::Grammar {
                            position: cur.pos().saturating_sub(1),
                            expected: "`=>` or `.` (too many closing braces)".into(),
                        });
                    }
                    continue;
                }
                let in_then = builder
                    .stack
                    .last()
                    .is_some_and(|f| f.otherwise.is_none());
                if in_then
                    && matches!(cur.peek(), Some(Tok::Word(w)) if w == "else")
                    && cur.peek_at(1) == Some(&Tok::Open)
                {
                    cur.bump();
                    cur.bump();
                    if let Some(frame) = builder.stack.last_mut() {
                        frame.otherwise = Some(Vec::new());
                    }
                    state = State::ExpectStep;
                } else {
                    builder.pop_frame();
                }
            }
            (State::AfterStep, Tok::Dot) => {
                builder.end_pos = cur.pos();
                cur.bump();
                builder.closed = true;
                return trailing(cur, mode);
            }
            (State::AfterStep, _) => return cur.error("`=>`, `}` or `.`"),
            (State::Start, Tok::Open) => return cur.error("a step"),
        }
    }
}

fn trailing(cur: &Cursor<'_>, mode: Mode) -> Result<(), ActivityParseError> {
    match (mode, cur.peek()) {
        (Mode::Strict, Some(_)) => cur.error("end of input after `.`"),
        _ => Ok(()),
    }
}

/// Parses a complete (or open-ended) workflow text.
pub fn parse_activity(text: &str) -> Result<ActivityModel, ActivityParseError> {
    let Some(colon) = text.find(':') else {
        return Err(ActivityParseError::Grammar {
            position: 0,
            expected: "`name:` header".into(),
        });
    };
    let name = Identifier::new(&text[..colon]).map_err(|_| ActivityParseError::Grammar {
        position: 0,
        expected: "a workflow name".into(),
    })?;
    let tokens = tokenize(&text[colon + 1..], colon + 1);
    let mut cur = Cursor {
        tokens: &tokens,
        idx: 0,
        end: text.len(),
    };
    match cur.peek() {
        Some(Tok::Word(w)) if w == "start" => cur.bump(),
        _ => return cur.error("`start`"),
    }
    if cur.peek() != Some(&Tok::Arrow) {
        return cur.error("`=>` after `start`");
    }
    cur.bump();
    let mut builder = Builder {
        body: Vec::new(),
        stack: Vec::new(),
        redundant: 0,
        closed: false,
        end_pos: text.len(),
    };
    run(&mut builder, &mut cur, State::ExpectStep, Mode::Strict)?;
    if !builder.closed {
        builder.end_pos = text.len();
    }
    builder.finish(name)
}

/// Splices a generated continuation onto the open point of `partial`.
///
/// The text may start mid-conditional (closing or extending the branch the
/// partial is open in), may carry up to [`MAX_REDUNDANT_CLOSERS`] stray
/// closing braces, and stops at the first top-level `.`; anything after it is
/// ignored. A final `end` closes the model.
pub fn parse_activity_continuation(
    text: &str,
    partial: &ActivityModel,
) -> Result<ActivityModel, ActivityParseError> {
    let mut builder = Builder::from_partial(partial)?;
    let tokens = tokenize(text, 0);
    let mut cur = Cursor {
        tokens: &tokens,
        idx: 0,
        end: text.len(),
    };
    builder.end_pos = text.len();
    run(&mut builder, &mut cur, State::Start, Mode::Continuation)?;
    builder.finish(partial.name.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::serialize_activity;

    fn act(s: &str) -> Step {
        Step::action(s).unwrap()
    }

    fn shopping_partial() -> ActivityModel {
        ActivityModel::open(
            Identifier::new("Online Shopping").unwrap(),
            vec![
                act("search item"),
                Step::choice(&["found", "not found"]).unwrap(),
                Step::conditional(
                    "found",
                    vec![act("view item"), Step::choice(&["buy", "not to buy"]).unwrap()],
                    None,
                )
                .unwrap(),
            ],
            1,
        )
    }

    const SHOPPING_GENERATED: &str = "if buy {select item => add to cart => checkout=> provide shipping information => process payment => order placed => end} else {continue shopping => end}} else {search}.";

    #[test]
    fn splices_shopping_continuation() {
        let done = parse_activity_continuation(SHOPPING_GENERATED, &shopping_partial()).unwrap();
        assert!(done.is_closed());
        let Step::Conditional {
            then, otherwise, ..
        } = &done.body[2]
        else {
            panic!("expected conditional");
        };
        assert_eq!(otherwise.as_deref(), Some(&[act("search")][..]));
        let Step::Conditional {
            guard,
            then: buy,
            otherwise: not_buy,
        } = &then[2]
        else {
            panic!("expected nested conditional");
        };
        assert_eq!(guard.as_str(), "buy");
        assert_eq!(buy.len(), 7);
        assert_eq!(buy.last(), Some(&act("end")));
        assert_eq!(
            not_buy.as_deref(),
            Some(&[act("continue shopping"), act("end")][..])
        );
    }

    #[test]
    fn end_marker_closes_without_new_actions() {
        let partial = shopping_partial();
        let done = parse_activity_continuation("end.", &partial).unwrap();
        assert!(done.is_closed());
        assert_eq!(done.body, partial.body);
    }

    #[test]
    fn separator_run_is_a_grammar_error() {
        let partial = ActivityModel::open(Identifier::new("m").unwrap(), vec![act("a")], 0);
        assert!(matches!(
            parse_activity_continuation("=> => x", &partial),
            Err(ActivityParseError::Grammar { .. })
        ));
    }

    #[test]
    fn closed_partial_is_unsplicable() {
        let partial = ActivityModel::closed(Identifier::new("m").unwrap(), vec![act("a")]);
        assert!(matches!(
            parse_activity_continuation("b => end.", &partial),
            Err(ActivityParseError::Unsplicable(_))
        ));
    }

    #[test]
    fn leading_slash_or_else_is_unsplicable() {
        let partial = ActivityModel::open(Identifier::new("m").unwrap(), vec![act("a")], 0);
        for text in ["/ b => end.", "else {b}."] {
            assert!(matches!(
                parse_activity_continuation(text, &partial),
                Err(ActivityParseError::Unsplicable(_))
            ));
        }
    }

    #[test]
    fn tolerates_two_redundant_closers_but_not_three() {
        let partial = ActivityModel::open(Identifier::new("m").unwrap(), vec![act("a")], 0);
        let ok = parse_activity_continuation("b}} => end.", &partial).unwrap();
        assert_eq!(ok.body, vec![act("a"), act("b")]);
        assert!(parse_activity_continuation("b}}} => end.", &partial).is_err());
    }

    #[test]
    fn truncated_continuation_stays_open() {
        let partial = ActivityModel::open(Identifier::new("m").unwrap(), vec![act("a")], 0);
        let out = parse_activity_continuation("if ok {b => c", &partial).unwrap();
        assert_eq!(out.completion, Completion::Open { depth: 1 });
        assert_eq!(serialize_activity(&out, true), "m: start => a => if ok {b => c =>");
        assert!(parse_activity_continuation("if ok {", &partial).is_err());
        assert!(parse_activity_continuation("if ok", &partial).is_err());
    }

    #[test]
    fn ignores_text_after_final_dot() {
        let partial = ActivityModel::open(Identifier::new("m").unwrap(), vec![act("a")], 0);
        let out = parse_activity_continuation(" b => end.\nAnother: start => x", &partial).unwrap();
        assert_eq!(out.body, vec![act("a"), act("b")]);
    }

    #[test]
    fn parses_ticket_vending_shot() {
        let text = "Ticket Vending Machine: start  => request trip info => provide trip info => process trip info =>  payment request => provide payment Info => process payment => pay with card / pay with cash => if with card {authorize card payment} => end.";
        let m = parse_activity(text).unwrap();
        assert!(m.is_closed());
        assert_eq!(m.body.len(), 8);
        assert_eq!(
            serialize_activity(&m, false),
            text.replace("  ", " ")
        );
    }

    #[test]
    fn strict_parse_rejects_trailing_text() {
        assert!(parse_activity("m: start => a => end. extra").is_err());
        assert!(parse_activity("m: begin => a => end.").is_err());
        assert!(parse_activity("no header").is_err());
        assert!(parse_activity("m: start => end.").is_err());
    }

    #[test]
    fn end_inside_branch_is_an_action() {
        let m = parse_activity("m: start => if g {a => end} => end.").unwrap();
        assert_eq!(
            m.body,
            vec![Step::conditional("g", vec![act("a"), act("end")], None).unwrap()]
        );
    }

    #[test]
    fn open_text_parses_to_open_model() {
        let m = parse_activity("m: start => a =>").unwrap();
        assert_eq!(m.completion, Completion::Open { depth: 0 });
    }
}
