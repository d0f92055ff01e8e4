//! Text format for protocol rule tables.
//!
//! A table file is a sequence of `@` directives followed by rules:
//!
//! ```text
//! @name star-former
//! @states l p
//! @init l
//! @leader l
//!
//! l l * -> l p 1
//! l p 0 -> l p 1
//! p p 1 [cnd=1] -> p p 0
//! ```
//!
//! A rule reads `a b e [guards] -> a' b' e'`. Guards constrain the sampled
//! context: `degu` and `degv` bind positionally to the first and second slot
//! (values `0`, `1`, `2`, `3+`), `cnd` to the common-neighbor bit. `*`
//! matches either edge state on the left and preserves it on the right. A
//! trailing `# derived` marks rules added beyond the published core of a
//! table; other `#` comments are ignored.

use std::path::Path;

use thiserror::Error;

use crate::model::spec::{DegreeClass, Guard, ProtocolSpec, Rule, SpecError, StateId};

#[derive(Error, Debug)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing @{0} directive")]
    MissingDirective(&'static str),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        msg: msg.into(),
    }
}

struct RawRule {
    line: usize,
    lhs: (String, String, Option<bool>),
    guard_src: Option<String>,
    rhs: (String, String, Option<bool>),
    derived: bool,
}

fn parse_edge(tok: &str, line: usize) -> Result<Option<bool>, FormatError> {
    match tok {
        "0" => Ok(Some(false)),
        "1" => Ok(Some(true)),
        "*" => Ok(None),
        other => Err(syntax(line, format!("bad edge token `{other}`"))),
    }
}

fn parse_degree(val: &str, line: usize) -> Result<DegreeClass, FormatError> {
    match val {
        "0" => Ok(DegreeClass::Zero),
        "1" => Ok(DegreeClass::One),
        "2" => Ok(DegreeClass::Two),
        "3+" => Ok(DegreeClass::ThreePlus),
        other => Err(syntax(line, format!("bad degree class `{other}`"))),
    }
}

fn parse_guard(src: &str, line: usize) -> Result<Guard, FormatError> {
    let mut guard = Guard::default();
    for atom in src.split(',') {
        let atom = atom.trim();
        if atom.is_empty() {
            continue;
        }
        let (key, val) = atom
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("guard atom `{atom}` is not key=value")))?;
        let dup = |set: bool| -> Result<(), FormatError> {
            if set {
                Err(syntax(line, format!("duplicate guard key `{key}`")))
            } else {
                Ok(())
            }
        };
        match key.trim() {
            "degu" => {
                dup(guard.deg_a.is_some())?;
                guard.deg_a = Some(parse_degree(val.trim(), line)?);
            }
            "degv" => {
                dup(guard.deg_b.is_some())?;
                guard.deg_b = Some(parse_degree(val.trim(), line)?);
            }
            "cnd" => {
                dup(guard.cnd.is_some())?;
                guard.cnd = match val.trim() {
                    "0" => Some(false),
                    "1" => Some(true),
                    other => return Err(syntax(line, format!("bad cnd value `{other}`"))),
                };
            }
            other => return Err(syntax(line, format!("unknown guard key `{other}`"))),
        }
    }
    Ok(guard)
}

pub fn parse_rules(text: &str) -> Result<ProtocolSpec, FormatError> {
    let mut name: Option<String> = None;
    let mut states: Vec<String> = Vec::new();
    let mut init: Option<String> = None;
    let mut leader: Option<String> = None;
    let mut halting: Vec<String> = Vec::new();
    let mut output: Option<Vec<String>> = None;
    let mut directed = false;
    let mut raw_rules: Vec<RawRule> = Vec::new();

    for (idx, full_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let (body, comment) = match full_line.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (full_line, None),
        };
        let derived = comment
            .map(|c| c.trim().split_whitespace().next() == Some("derived"))
            .unwrap_or(false);
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('@') {
            let mut toks = rest.split_whitespace();
            let key = toks.next().unwrap_or("");
            let args: Vec<&str> = toks.collect();
            match key {
                "name" => name = Some(args.join(" ")),
                "states" => states.extend(args.iter().map(|s| s.to_string())),
                "init" => {
                    init = Some(
                        args.first()
                            .ok_or_else(|| syntax(lineno, "@init needs a state"))?
                            .to_string(),
                    )
                }
                "leader" => {
                    leader = Some(
                        args.first()
                            .ok_or_else(|| syntax(lineno, "@leader needs a state"))?
                            .to_string(),
                    )
                }
                "halt" => halting.extend(args.iter().map(|s| s.to_string())),
                "out" => output
                    .get_or_insert_with(Vec::new)
                    .extend(args.iter().map(|s| s.to_string())),
                "directed" => directed = true,
                other => return Err(syntax(lineno, format!("unknown directive `@{other}`"))),
            }
            continue;
        }

        // rule line; pull the bracketed guard out before tokenizing
        let (body, guard_src) = match body.find('[') {
            Some(open) => {
                let close = body
                    .find(']')
                    .ok_or_else(|| syntax(lineno, "unterminated guard block"))?;
                if close < open {
                    return Err(syntax(lineno, "mismatched guard brackets"));
                }
                let guard = body[open + 1..close].to_string();
                (
                    format!("{} {}", &body[..open], &body[close + 1..]),
                    Some(guard),
                )
            }
            None => (body.to_string(), None),
        };
        let (lhs_src, rhs_src) = body
            .split_once("->")
            .ok_or_else(|| syntax(lineno, "rule has no `->`"))?;
        let lhs: Vec<&str> = lhs_src.split_whitespace().collect();
        let rhs: Vec<&str> = rhs_src.split_whitespace().collect();
        if lhs.len() != 3 || rhs.len() != 3 {
            return Err(syntax(lineno, "each rule side needs `state state edge`"));
        }
        raw_rules.push(RawRule {
            line: lineno,
            lhs: (lhs[0].to_string(), lhs[1].to_string(), parse_edge(lhs[2], lineno)?),
            guard_src,
            rhs: (rhs[0].to_string(), rhs[1].to_string(), parse_edge(rhs[2], lineno)?),
            derived,
        });
    }

    let name = name.ok_or(FormatError::MissingDirective("name"))?;
    let init = init.ok_or(FormatError::MissingDirective("init"))?;
    if states.is_empty() {
        return Err(FormatError::MissingDirective("states"));
    }
    let lookup = |s: &str, line: usize| -> Result<StateId, FormatError> {
        states
            .iter()
            .position(|k| k == s)
            .map(|i| StateId(i as u16))
            .ok_or_else(|| syntax(line, format!("undeclared state `{s}`")))
    };

    let mut rules = Vec::with_capacity(raw_rules.len());
    for raw in raw_rules {
        let guard = match &raw.guard_src {
            Some(src) => parse_guard(src, raw.line)?,
            None => Guard::default(),
        };
        rules.push(Rule {
            lhs: (lookup(&raw.lhs.0, raw.line)?, lookup(&raw.lhs.1, raw.line)?, raw.lhs.2),
            guard,
            rhs: (lookup(&raw.rhs.0, raw.line)?, lookup(&raw.rhs.1, raw.line)?, raw.rhs.2),
            derived: raw.derived,
        });
    }

    let halting_refs: Vec<&str> = halting.iter().map(|s| s.as_str()).collect();
    let output_refs: Option<Vec<&str>> = output
        .as_ref()
        .map(|o| o.iter().map(|s| s.as_str()).collect());
    Ok(ProtocolSpec::build(
        &name,
        states,
        &init,
        leader.as_deref(),
        &halting_refs,
        output_refs.as_deref(),
        rules,
        directed,
    )?)
}

pub fn load_rules(path: &Path) -> Result<ProtocolSpec, FormatError> {
    parse_rules(&std::fs::read_to_string(path)?)
}

fn edge_token(e: Option<bool>) -> &'static str {
    match e {
        Some(false) => "0",
        Some(true) => "1",
        None => "*",
    }
}

fn guard_text(g: &Guard) -> String {
    let mut atoms = Vec::new();
    if let Some(d) = g.deg_a {
        atoms.push(format!("degu={}", d.label()));
    }
    if let Some(d) = g.deg_b {
        atoms.push(format!("degv={}", d.label()));
    }
    if let Some(c) = g.cnd {
        atoms.push(format!("cnd={}", c as u8));
    }
    format!("[{}]", atoms.join(","))
}

pub fn write_rules(spec: &ProtocolSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("@name {}\n", spec.name));
    let states: Vec<&str> = (0..spec.state_count())
        .map(|i| spec.state_name(StateId(i as u16)))
        .collect();
    out.push_str(&format!("@states {}\n", states.join(" ")));
    out.push_str(&format!("@init {}\n", spec.state_name(spec.q0)));
    if let Some(l) = spec.leader {
        out.push_str(&format!("@leader {}\n", spec.state_name(l)));
    }
    let halting: Vec<&str> = (0..spec.state_count())
        .map(|i| StateId(i as u16))
        .filter(|&s| spec.is_halting(s))
        .map(|s| spec.state_name(s))
        .collect();
    if !halting.is_empty() {
        out.push_str(&format!("@halt {}\n", halting.join(" ")));
    }
    let output: Vec<&str> = (0..spec.state_count())
        .map(|i| StateId(i as u16))
        .filter(|&s| spec.in_output_set(s))
        .map(|s| spec.state_name(s))
        .collect();
    if output.len() != spec.state_count() {
        out.push_str(&format!("@out {}\n", output.join(" ")));
    }
    if spec.directed {
        out.push_str("@directed\n");
    }
    out.push('\n');
    for r in &spec.rules {
        let mut line = format!(
            "{} {} {}",
            spec.state_name(r.lhs.0),
            spec.state_name(r.lhs.1),
            edge_token(r.lhs.2),
        );
        if !r.guard.is_trivial() {
            line.push(' ');
            line.push_str(&guard_text(&r.guard));
        }
        line.push_str(&format!(
            " -> {} {} {}",
            spec.state_name(r.rhs.0),
            spec.state_name(r.rhs.1),
            edge_token(r.rhs.2),
        ));
        if r.derived {
            line.push_str(" # derived");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}
