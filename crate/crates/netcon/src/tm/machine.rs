//! Deterministic single-tape machine descriptions, loaded from a plain-text
//! table. Validation insists on a total transition function over the tape
//! alphabet for every non-terminal state, so a running machine can never get
//! stuck on an unhandled symbol.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Move {
    L,
    R,
}

#[derive(Debug, Error)]
pub enum MachineError {
    #[error("could not read machine file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `{0}:` header")]
    Missing(&'static str),
    #[error("line {line}: {what} is not declared")]
    Undeclared { line: usize, what: String },
    #[error("line {line}: duplicate transition for ({state}, {symbol})")]
    Duplicate {
        line: usize,
        state: String,
        symbol: char,
    },
    #[error("line {line}: terminal state {state} cannot have outgoing transitions")]
    FromTerminal { line: usize, state: String },
    #[error("state {state} has no transition on {symbol:?}")]
    Incomplete { state: String, symbol: char },
    #[error("{0}")]
    Invalid(String),
}

/// A deterministic machine over single-character symbols.
#[derive(Clone, Debug)]
pub struct TMDescription {
    pub name: String,
    pub states: Vec<String>,
    pub input_alphabet: Vec<char>,
    pub tape_alphabet: Vec<char>,
    pub blank: char,
    pub start: usize,
    pub accept: usize,
    pub reject: usize,
    transitions: HashMap<(usize, char), (usize, char, Move)>,
}

impl TMDescription {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MachineError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, MachineError> {
        let syntax = |line: usize, msg: String| MachineError::Syntax { line, msg };
        let mut headers: HashMap<&str, (usize, String)> = HashMap::new();
        let mut raw_transitions: Vec<(usize, Vec<String>)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if trimmed.contains("->") {
                let tokens: Vec<String> = trimmed
                    .replace("->", " -> ")
                    .split_whitespace()
                    .map(|t| t.to_string())
                    .collect();
                raw_transitions.push((line, tokens));
            } else if let Some((key, value)) = trimmed.split_once(':') {
                let key = key.trim();
                if headers
                    .insert(
                        match key {
                            "name" => "name",
                            "states" => "states",
                            "input" => "input",
                            "tape" => "tape",
                            "blank" => "blank",
                            "start" => "start",
                            "accept" => "accept",
                            "reject" => "reject",
                            _ => return Err(syntax(line, format!("unknown header {key:?}"))),
                        },
                        (line, value.trim().to_string()),
                    )
                    .is_some()
                {
                    return Err(syntax(line, format!("repeated header {key:?}")));
                }
            } else {
                return Err(syntax(line, format!("expected header or transition, got {trimmed:?}")));
            }
        }

        let header = |key: &'static str| -> Result<(usize, String), MachineError> {
            headers.get(key).cloned().ok_or(MachineError::Missing(key))
        };
        let symbol = |line: usize, token: &str| -> Result<char, MachineError> {
            let mut chars = token.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(syntax(line, format!("symbols are single characters, got {token:?}"))),
            }
        };

        let name = header("name")?.1;
        let (states_line, states_text) = header("states")?;
        let states: Vec<String> = states_text.split_whitespace().map(String::from).collect();
        if states.is_empty() {
            return Err(syntax(states_line, "no states declared".into()));
        }
        let mut index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(syntax(states_line, format!("state {s:?} declared twice")));
            }
        }
        let state_of = |line: usize, token: &str| -> Result<usize, MachineError> {
            index
                .get(token)
                .copied()
                .ok_or_else(|| MachineError::Undeclared {
                    line,
                    what: format!("state {token:?}"),
                })
        };

        let (tape_line, tape_text) = header("tape")?;
        let mut tape_alphabet = Vec::new();
        for token in tape_text.split_whitespace() {
            let c = symbol(tape_line, token)?;
            if tape_alphabet.contains(&c) {
                return Err(syntax(tape_line, format!("symbol {c:?} declared twice")));
            }
            tape_alphabet.push(c);
        }
        let (input_line, input_text) = header("input")?;
        let mut input_alphabet = Vec::new();
        for token in input_text.split_whitespace() {
            let c = symbol(input_line, token)?;
            if !tape_alphabet.contains(&c) {
                return Err(MachineError::Undeclared {
                    line: input_line,
                    what: format!("input symbol {c:?} (not in the tape alphabet)"),
                });
            }
            input_alphabet.push(c);
        }
        let (blank_line, blank_text) = header("blank")?;
        let blank = symbol(blank_line, &blank_text)?;
        if !tape_alphabet.contains(&blank) {
            return Err(MachineError::Undeclared {
                line: blank_line,
                what: format!("blank {blank:?} (not in the tape alphabet)"),
            });
        }
        if input_alphabet.contains(&blank) {
            return Err(syntax(blank_line, "blank cannot be an input symbol".into()));
        }

        let (start_line, start_text) = header("start")?;
        let start = state_of(start_line, &start_text)?;
        let (accept_line, accept_text) = header("accept")?;
        let accept = state_of(accept_line, &accept_text)?;
        let (reject_line, reject_text) = header("reject")?;
        let reject = state_of(reject_line, &reject_text)?;
        if accept == reject {
            return Err(syntax(accept_line, "accept and reject must differ".into()));
        }

        let mut transitions = HashMap::new();
        for (line, tokens) in raw_transitions {
            let [from, read, arrow, to, write, mv] = tokens.as_slice() else {
                return Err(syntax(
                    line,
                    "expected `state symbol -> state' symbol' L|R`".into(),
                ));
            };
            if arrow != "->" {
                return Err(syntax(line, format!("expected `->`, got {arrow:?}")));
            }
            let from = state_of(line, from)?;
            if from == accept || from == reject {
                return Err(MachineError::FromTerminal {
                    line,
                    state: states[from].clone(),
                });
            }
            let read = symbol(line, read)?;
            let to = state_of(line, to)?;
            let write = symbol(line, write)?;
            for c in [read, write] {
                if !tape_alphabet.contains(&c) {
                    return Err(MachineError::Undeclared {
                        line,
                        what: format!("symbol {c:?}"),
                    });
                }
            }
            let mv = match mv.as_str() {
                "L" => Move::L,
                "R" => Move::R,
                other => return Err(syntax(line, format!("expected L or R, got {other:?}"))),
            };
            if transitions.insert((from, read), (to, write, mv)).is_some() {
                return Err(MachineError::Duplicate {
                    line,
                    state: states[from].clone(),
                    symbol: read,
                });
            }
        }

        for (s, state) in states.iter().enumerate() {
            if s == accept || s == reject {
                continue;
            }
            for &c in &tape_alphabet {
                if !transitions.contains_key(&(s, c)) {
                    return Err(MachineError::Incomplete {
                        state: state.clone(),
                        symbol: c,
                    });
                }
            }
        }

        Ok(TMDescription {
            name,
            states,
            input_alphabet,
            tape_alphabet,
            blank,
            start,
            accept,
            reject,
            transitions,
        })
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        state == self.accept || state == self.reject
    }

    /// Total by validation for every non-terminal state and tape symbol.
    pub fn step(&self, state: usize, symbol: char) -> (usize, char, Move) {
        self.transitions[&(state, symbol)]
    }

    pub fn has_tape_symbol(&self, symbol: char) -> bool {
        self.tape_alphabet.contains(&symbol)
    }
}
