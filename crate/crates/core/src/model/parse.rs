//! Reader and canonical writer for Cassandra's `.pomdp` text format.
//!
//! Rewards in the file may depend on `(a, s, s', o)`; they are collapsed to
//! `R(s, a)` by taking the expectation under `T` and `O`. When every entry
//! of a `(a, s)` block is identical that value is used as is, so files
//! written by [`serialize_pomdp`] read back bit-for-bit.

use std::fmt::Write as _;

use super::{Belief, PomdpModel};
use crate::error::{Error, Result};

const HEADERS: [&str; 9] = [
    "discount",
    "values",
    "states",
    "actions",
    "observations",
    "start",
    "T",
    "O",
    "R",
];

#[derive(Debug, Clone, PartialEq)]
struct Token {
    text: String,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        for word in content.split_whitespace() {
            let mut rest = word;
            while let Some(pos) = rest.find(':') {
                if pos > 0 {
                    tokens.push(Token { text: rest[..pos].to_string(), line });
                }
                tokens.push(Token { text: ":".into(), line });
                rest = &rest[pos + 1..];
            }
            if !rest.is_empty() {
                tokens.push(Token { text: rest.to_string(), line });
            }
        }
    }
    tokens
}

struct Section {
    header: String,
    /// `start include:` / `start exclude:` modifier.
    modifier: Option<String>,
    line: usize,
    body: Vec<Token>,
}

fn is_header_at(tokens: &[Token], i: usize) -> Option<usize> {
    let tok = &tokens[i];
    if !HEADERS.contains(&tok.text.as_str()) {
        return None;
    }
    match tokens.get(i + 1).map(|t| t.text.as_str()) {
        Some(":") => Some(2),
        Some("include") | Some("exclude") if tok.text == "start" => {
            (tokens.get(i + 2).map(|t| t.text.as_str()) == Some(":")).then_some(3)
        }
        _ => None,
    }
}

fn split_sections(tokens: &[Token]) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(width) = is_header_at(tokens, i) {
            sections.push(Section {
                header: tokens[i].text.clone(),
                modifier: (width == 3).then(|| tokens[i + 1].text.clone()),
                line: tokens[i].line,
                body: Vec::new(),
            });
            i += width;
            continue;
        }
        match sections.last_mut() {
            Some(section) => section.body.push(tokens[i].clone()),
            None => {
                return Err(Error::Syntax {
                    line: tokens[i].line,
                    message: format!("unexpected token `{}` before any keyword", tokens[i].text),
                })
            }
        }
        i += 1;
    }
    Ok(sections)
}

fn number(tok: &Token) -> Result<f64> {
    tok.text.parse::<f64>().map_err(|_| Error::Syntax {
        line: tok.line,
        message: format!("expected a number, found `{}`", tok.text),
    })
}

fn names_from(body: &[Token], line: usize, what: &str) -> Result<Vec<String>> {
    match body {
        [] => Err(Error::Syntax {
            line,
            message: format!("`{what}:` needs a count or a list of names"),
        }),
        [single] => match single.text.parse::<usize>() {
            Ok(0) => Err(Error::Syntax {
                line,
                message: format!("`{what}:` count must be positive"),
            }),
            Ok(n) => Ok((0..n).map(|i| i.to_string()).collect()),
            Err(_) => Ok(vec![single.text.clone()]),
        },
        many => Ok(many.iter().map(|t| t.text.clone()).collect()),
    }
}

/// Resolves an identifier token (name, index or `*`) to indices.
fn resolve(tok: &Token, names: &[String], kind: &'static str) -> Result<Vec<usize>> {
    if tok.text == "*" {
        return Ok((0..names.len()).collect());
    }
    if let Some(i) = names.iter().position(|n| *n == tok.text) {
        return Ok(vec![i]);
    }
    match tok.text.parse::<usize>() {
        Ok(i) if i < names.len() => Ok(vec![i]),
        _ => Err(Error::UnknownIdentifier {
            line: tok.line,
            kind,
            name: tok.text.clone(),
        }),
    }
}

/// Cursor over a section body.
struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<&'a Token> {
        let tok = self.tokens.get(self.pos).ok_or(Error::Syntax {
            line: self.line,
            message: "unexpected end of entry".into(),
        })?;
        self.pos += 1;
        self.line = tok.line;
        Ok(tok)
    }

    fn peek_is(&self, text: &str) -> bool {
        self.tokens.get(self.pos).is_some_and(|t| t.text == text)
    }

    fn eat_colon(&mut self) -> bool {
        if self.peek_is(":") {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn remaining(&self) -> &'a [Token] {
        &self.tokens[self.pos..]
    }

    fn finish(&mut self) {
        self.pos = self.tokens.len();
    }
}

/// Reads `count` numbers, or expands `uniform` / `identity` keywords.
fn values_block(cur: &mut Cursor, rows: usize, cols: usize, allow_identity: bool) -> Result<Vec<f64>> {
    let rest = cur.remaining();
    let first = rest.first().ok_or(Error::Syntax {
        line: cur.line,
        message: "missing values".into(),
    })?;
    let out = match first.text.as_str() {
        "uniform" => vec![1.0 / cols as f64; rows * cols],
        "identity" if allow_identity && rows == cols => {
            let mut m = vec![0.0; rows * cols];
            (0..rows).for_each(|i| m[i * cols + i] = 1.0);
            m
        }
        _ => {
            if rest.len() != rows * cols {
                return Err(Error::Syntax {
                    line: first.line,
                    message: format!("expected {} values, found {}", rows * cols, rest.len()),
                });
            }
            return rest
                .iter()
                .map(number)
                .collect::<Result<Vec<_>>>()
                .inspect(|_| cur.finish());
        }
    };
    if rest.len() != 1 {
        return Err(Error::Syntax {
            line: rest[1].line,
            message: format!("unexpected token `{}` after `{}`", rest[1].text, first.text),
        });
    }
    cur.finish();
    Ok(out)
}

struct Builder {
    states: Vec<String>,
    actions: Vec<String>,
    observations: Vec<String>,
    transition: Vec<f64>,
    observation: Vec<f64>,
    /// `reward[((a * S + s) * S + s') * O + o]`
    reward: Vec<f64>,
    start: Option<Vec<f64>>,
    discount: Option<f64>,
    cost: bool,
}

impl Builder {
    fn sizes(&self) -> (usize, usize, usize) {
        (self.states.len(), self.actions.len(), self.observations.len())
    }

    fn allocate(&mut self) {
        let (ns, na, no) = self.sizes();
        self.transition = vec![0.0; na * ns * ns];
        self.observation = vec![0.0; na * ns * no];
        self.reward = vec![0.0; na * ns * ns * no];
    }

    fn transition_entry(&mut self, section: &Section) -> Result<()> {
        let (ns, _, _) = self.sizes();
        let mut cur = Cursor { tokens: &section.body, pos: 0, line: section.line };
        let acts = resolve(cur.next()?, &self.actions, "action")?;
        if !cur.eat_colon() {
            let block = values_block(&mut cur, ns, ns, true)?;
            for &a in &acts {
                self.transition[a * ns * ns..(a + 1) * ns * ns].copy_from_slice(&block);
            }
            return Ok(());
        }
        let from = resolve(cur.next()?, &self.states, "state")?;
        if cur.eat_colon() {
            if cur.peek_is("uniform") {
                let row = values_block(&mut cur, 1, ns, false)?;
                return self.set_transition_rows(&acts, &from, &row);
            }
            let to = resolve(cur.next()?, &self.states, "state")?;
            let p = number(cur.next()?)?;
            for &a in &acts {
                for &s in &from {
                    for &s2 in &to {
                        self.transition[(a * ns + s) * ns + s2] = p;
                    }
                }
            }
            return expect_end(&cur);
        }
        let row = values_block(&mut cur, 1, ns, false)?;
        self.set_transition_rows(&acts, &from, &row)
    }

    fn set_transition_rows(&mut self, acts: &[usize], from: &[usize], row: &[f64]) -> Result<()> {
        let ns = self.states.len();
        for &a in acts {
            for &s in from {
                let start = (a * ns + s) * ns;
                self.transition[start..start + ns].copy_from_slice(row);
            }
        }
        Ok(())
    }

    fn observation_entry(&mut self, section: &Section) -> Result<()> {
        let (ns, _, no) = self.sizes();
        let mut cur = Cursor { tokens: &section.body, pos: 0, line: section.line };
        let acts = resolve(cur.next()?, &self.actions, "action")?;
        if !cur.eat_colon() {
            let block = values_block(&mut cur, ns, no, false)?;
            for &a in &acts {
                self.observation[a * ns * no..(a + 1) * ns * no].copy_from_slice(&block);
            }
            return Ok(());
        }
        let ends = resolve(cur.next()?, &self.states, "state")?;
        let row = if cur.eat_colon() {
            if cur.peek_is("uniform") {
                values_block(&mut cur, 1, no, false)?
            } else {
                let obs = resolve(cur.next()?, &self.observations, "observation")?;
                let p = number(cur.next()?)?;
                for &a in &acts {
                    for &s2 in &ends {
                        for &o in &obs {
                            self.observation[(a * ns + s2) * no + o] = p;
                        }
                    }
                }
                return expect_end(&cur);
            }
        } else {
            values_block(&mut cur, 1, no, false)?
        };
        for &a in &acts {
            for &s2 in &ends {
                let start = (a * ns + s2) * no;
                self.observation[start..start + no].copy_from_slice(&row);
            }
        }
        Ok(())
    }

    fn reward_entry(&mut self, section: &Section) -> Result<()> {
        let (ns, _, no) = self.sizes();
        let mut cur = Cursor { tokens: &section.body, pos: 0, line: section.line };
        let acts = resolve(cur.next()?, &self.actions, "action")?;
        if !cur.eat_colon() {
            return Err(Error::Syntax {
                line: cur.line,
                message: "`R:` entries need at least `action : start-state`".into(),
            });
        }
        let from = resolve(cur.next()?, &self.states, "state")?;
        let idx = |a: usize, s: usize, s2: usize, o: usize| ((a * ns + s) * ns + s2) * no + o;
        if !cur.eat_colon() {
            // |S| x |O| matrix over (s', o)
            let block = values_block(&mut cur, ns, no, false)?;
            for &a in &acts {
                for &s in &from {
                    for s2 in 0..ns {
                        for o in 0..no {
                            self.reward[idx(a, s, s2, o)] = block[s2 * no + o];
                        }
                    }
                }
            }
            return Ok(());
        }
        let to = resolve(cur.next()?, &self.states, "state")?;
        if !cur.eat_colon() {
            let row = values_block(&mut cur, 1, no, false)?;
            for &a in &acts {
                for &s in &from {
                    for &s2 in &to {
                        for o in 0..no {
                            self.reward[idx(a, s, s2, o)] = row[o];
                        }
                    }
                }
            }
            return Ok(());
        }
        let obs = resolve(cur.next()?, &self.observations, "observation")?;
        let r = number(cur.next()?)?;
        for &a in &acts {
            for &s in &from {
                for &s2 in &to {
                    for &o in &obs {
                        self.reward[idx(a, s, s2, o)] = r;
                    }
                }
            }
        }
        expect_end(&cur)
    }

    fn start_entry(&mut self, section: &Section) -> Result<()> {
        let ns = self.states.len();
        let body = &section.body;
        let probs = match section.modifier.as_deref() {
            Some(kind) => {
                let mut chosen = vec![false; ns];
                for tok in body {
                    for s in resolve(tok, &self.states, "state")? {
                        chosen[s] = true;
                    }
                }
                if kind == "exclude" {
                    chosen.iter_mut().for_each(|c| *c = !*c);
                }
                let count = chosen.iter().filter(|&&c| c).count();
                if count == 0 {
                    return Err(Error::Syntax {
                        line: section.line,
                        message: "start distribution selects no states".into(),
                    });
                }
                chosen.iter().map(|&c| if c { 1.0 / count as f64 } else { 0.0 }).collect()
            }
            None => match body.as_slice() {
                [tok] if tok.text == "uniform" => vec![1.0 / ns as f64; ns],
                [tok] if ns > 1 || tok.text.parse::<f64>().is_err() => {
                    let s = resolve(tok, &self.states, "state")?[0];
                    let mut p = vec![0.0; ns];
                    p[s] = 1.0;
                    p
                }
                _ if body.len() == ns => body.iter().map(number).collect::<Result<_>>()?,
                _ => {
                    return Err(Error::Syntax {
                        line: section.line,
                        message: format!("`start:` expects {ns} probabilities"),
                    })
                }
            },
        };
        self.start = Some(probs);
        Ok(())
    }

    fn marginal_rewards(&self) -> Vec<f64> {
        let (ns, na, no) = self.sizes();
        let sign = if self.cost { -1.0 } else { 1.0 };
        let mut out = vec![0.0; na * ns];
        for a in 0..na {
            for s in 0..ns {
                let start = (a * ns + s) * ns * no;
                let block = &self.reward[start..start + ns * no];
                let value = if block.iter().all(|&r| r == block[0]) {
                    block[0]
                } else {
                    let mut acc = 0.0;
                    for s2 in 0..ns {
                        let t = self.transition[(a * ns + s) * ns + s2];
                        for o in 0..no {
                            acc += t * self.observation[(a * ns + s2) * no + o] * block[s2 * no + o];
                        }
                    }
                    acc
                };
                out[a * ns + s] = sign * value;
            }
        }
        out
    }
}

fn expect_end(cur: &Cursor) -> Result<()> {
    match cur.remaining().first() {
        None => Ok(()),
        Some(tok) => Err(Error::Syntax {
            line: tok.line,
            message: format!("unexpected token `{}`", tok.text),
        }),
    }
}

/// Parses a Cassandra-format model. The returned model has horizon 1; set the
/// planning horizon with [`PomdpModel::with_horizon`].
pub fn parse_pomdp(text: &str) -> Result<PomdpModel> {
    let tokens = tokenize(text);
    let sections = split_sections(&tokens)?;
    let mut b = Builder {
        states: Vec::new(),
        actions: Vec::new(),
        observations: Vec::new(),
        transition: Vec::new(),
        observation: Vec::new(),
        reward: Vec::new(),
        start: None,
        discount: None,
        cost: false,
    };
    let mut allocated = false;
    for section in &sections {
        let header = section.header.as_str();
        if matches!(header, "T" | "O" | "R" | "start") && !allocated {
            if b.states.is_empty() || b.actions.is_empty() || b.observations.is_empty() {
                return Err(Error::Syntax {
                    line: section.line,
                    message: "`states:`, `actions:` and `observations:` must precede entries".into(),
                });
            }
            b.allocate();
            allocated = true;
        }
        match header {
            "discount" => match section.body.as_slice() {
                [tok] => b.discount = Some(number(tok)?),
                _ => {
                    return Err(Error::Syntax {
                        line: section.line,
                        message: "`discount:` takes one number".into(),
                    })
                }
            },
            "values" => match section.body.first().map(|t| t.text.as_str()) {
                Some("reward") if section.body.len() == 1 => b.cost = false,
                Some("cost") if section.body.len() == 1 => b.cost = true,
                _ => {
                    return Err(Error::Syntax {
                        line: section.line,
                        message: "`values:` must be `reward` or `cost`".into(),
                    })
                }
            },
            "states" | "actions" | "observations" => {
                if allocated {
                    return Err(Error::Syntax {
                        line: section.line,
                        message: format!("`{header}:` after model entries"),
                    });
                }
                let names = names_from(&section.body, section.line, header)?;
                match header {
                    "states" => b.states = names,
                    "actions" => b.actions = names,
                    _ => b.observations = names,
                }
            }
            "start" => b.start_entry(section)?,
            "T" => b.transition_entry(section)?,
            "O" => b.observation_entry(section)?,
            "R" => b.reward_entry(section)?,
            _ => unreachable!("header list is closed"),
        }
    }
    if !allocated {
        return Err(Error::Syntax {
            line: tokens.last().map_or(1, |t| t.line),
            message: "file defines no transition, observation or reward entries".into(),
        });
    }
    if let Some(d) = b.discount {
        if d != 1.0 {
            log::info!("file discount {d} ignored; solving the undiscounted problem");
        }
    }
    let ns = b.states.len();
    let initial = match b.start.take() {
        Some(p) => Belief::new(p)?,
        None => Belief::uniform(ns),
    };
    let reward = b.marginal_rewards();
    let Builder { states, actions, observations, transition, observation, discount, .. } = b;
    let mut model = PomdpModel::new(
        states,
        actions,
        observations,
        transition,
        observation,
        reward,
        1,
        initial,
    )?;
    model.file_discount = discount;
    Ok(model)
}

fn write_names(out: &mut String, key: &str, names: &[String]) {
    let generated = names.iter().enumerate().all(|(i, n)| *n == i.to_string());
    if generated {
        let _ = writeln!(out, "{key}: {}", names.len());
    } else {
        let _ = writeln!(out, "{key}: {}", names.join(" "));
    }
}

fn write_row(out: &mut String, row: &[f64]) {
    let text: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
    let _ = writeln!(out, "{}", text.join(" "));
}

/// Writes the canonical dense form of a model: explicit rows for `T` and `O`
/// and one `R: a : s : * : *` line per `(a, s)`.
pub fn serialize_pomdp(model: &PomdpModel) -> String {
    let (ns, na, no) = (model.num_states(), model.num_actions(), model.num_observations());
    let mut out = String::new();
    let _ = writeln!(out, "discount: {:?}", model.file_discount.unwrap_or(1.0));
    let _ = writeln!(out, "values: reward");
    write_names(&mut out, "states", &model.states);
    write_names(&mut out, "actions", &model.actions);
    write_names(&mut out, "observations", &model.observations);
    out.push_str("start: ");
    write_row(&mut out, model.initial_belief.probs());
    let (t, o, r) = (model.transition_tensor(), model.observation_tensor(), model.reward_tensor());
    for a in 0..na {
        for s in 0..ns {
            let _ = writeln!(out, "T: {a} : {s}");
            write_row(&mut out, &t[(a * ns + s) * ns..(a * ns + s + 1) * ns]);
        }
    }
    for a in 0..na {
        for s2 in 0..ns {
            let _ = writeln!(out, "O: {a} : {s2}");
            write_row(&mut out, &o[(a * ns + s2) * no..(a * ns + s2 + 1) * no]);
        }
    }
    for a in 0..na {
        for s in 0..ns {
            let _ = writeln!(out, "R: {a} : {s} : * : * {:?}", r[a * ns + s]);
        }
    }
    out
}
