//! Line-oriented circuit description language.
//!
//! One statement per line: an element kind followed by `key=value` fields,
//! with `in=` and `out=` naming modes. `#` starts a comment. Example:
//!
//! ```text
//! # one swapping chain
//! squeeze r=0.5 out=a1,a2
//! squeeze r=2 out=a3,a4
//! pa gain=8 in=a2,a3 out=a2p
//! bs trans=0.125 in=a2p,a4 out=a4p
//! ```
//!
//! Identifiers must be defined (by an `out=`) before use and may not be
//! redefined. All parameter domains are enforced at parse time, so a parsed
//! program always executes.

use std::collections::HashSet;
use std::fmt;

use crate::elements::{
    beam_split, parametric_amplify, polarization_combine, two_mode_squeeze, GainParam,
    SqueezeParam,
};
use crate::quad::{OpticalMode, SeedRegistry};

/// A parse failure at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// One optical element with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    Squeeze { r: f64 },
    Pa { gain: f64 },
    Bs { trans: f64 },
    Polrot { angle: f64 },
}

/// One statement: an element applied to named inputs, defining named
/// outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub element: Element,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// A parsed circuit program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitAst {
    pub statements: Vec<Statement>,
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.element {
            Element::Squeeze { r } => write!(f, "squeeze r={r}")?,
            Element::Pa { gain } => write!(f, "pa gain={gain}")?,
            Element::Bs { trans } => write!(f, "bs trans={trans}")?,
            Element::Polrot { angle } => write!(f, "polrot angle={angle}")?,
        }
        if !self.inputs.is_empty() {
            write!(f, " in={}", self.inputs.join(","))?;
        }
        write!(f, " out={}", self.outputs.join(","))
    }
}

impl fmt::Display for CircuitAst {
    /// Canonical serialization; parses back to an identical AST.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for statement in &self.statements {
            writeln!(f, "{statement}")?;
        }
        Ok(())
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut offset = 0;
    for piece in line.split_whitespace() {
        let start = line[offset..].find(piece).expect("piece came from line") + offset;
        tokens.push(Token {
            text: piece,
            column: start + 1,
        });
        offset = start + piece.len();
    }
    tokens
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Split a comma-separated identifier list, reporting the column of any
/// offending piece.
fn parse_ident_list(
    value: &str,
    value_column: usize,
    line_no: usize,
) -> Result<Vec<String>, ParseError> {
    let mut idents = Vec::new();
    let mut offset = 0;
    for piece in value.split(',') {
        let column = value_column + offset;
        if piece.is_empty() {
            return Err(ParseError::new(line_no, column, "empty mode identifier"));
        }
        if !is_identifier(piece) {
            return Err(ParseError::new(
                line_no,
                column,
                format!("invalid mode identifier `{piece}`"),
            ));
        }
        idents.push(piece.to_string());
        offset += piece.len() + 1;
    }
    Ok(idents)
}

struct Clause {
    value: String,
    column: usize,
    value_column: usize,
}

/// Parse a circuit program, returning the first error with its position.
pub fn parse_circuit(text: &str) -> Result<CircuitAst, ParseError> {
    let mut statements = Vec::new();
    let mut defined: HashSet<String> = HashSet::new();
    for (line_idx, raw_line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let tokens = tokenize(content);
        let Some(kind_token) = tokens.first() else {
            continue;
        };
        let kind = kind_token.text;
        if !matches!(kind, "squeeze" | "pa" | "bs" | "polrot") {
            return Err(ParseError::new(
                line_no,
                kind_token.column,
                format!("unknown element kind `{kind}`"),
            ));
        }

        let mut clauses: Vec<(String, Clause)> = Vec::new();
        for token in &tokens[1..] {
            let Some((key, value)) = token.text.split_once('=') else {
                return Err(ParseError::new(
                    line_no,
                    token.column,
                    format!("expected key=value, got `{}`", token.text),
                ));
            };
            if clauses.iter().any(|(k, _)| k == key) {
                return Err(ParseError::new(
                    line_no,
                    token.column,
                    format!("duplicate key `{key}`"),
                ));
            }
            clauses.push((
                key.to_string(),
                Clause {
                    value: value.to_string(),
                    column: token.column,
                    value_column: token.column + key.len() + 1,
                },
            ));
        }

        let param_key = match kind {
            "squeeze" => "r",
            "pa" => "gain",
            "bs" => "trans",
            _ => "angle",
        };
        for (key, clause) in &clauses {
            if key != param_key && key != "in" && key != "out" {
                return Err(ParseError::new(
                    line_no,
                    clause.column,
                    format!("unknown key `{key}` for {kind}"),
                ));
            }
        }
        let find = |key: &str| clauses.iter().find(|(k, _)| k == key).map(|(_, c)| c);

        let param_clause = find(param_key).ok_or_else(|| {
            ParseError::new(
                line_no,
                kind_token.column,
                format!("missing key `{param_key}` for {kind}"),
            )
        })?;
        let param: f64 = param_clause.value.parse().map_err(|_| {
            ParseError::new(
                line_no,
                param_clause.value_column,
                format!("invalid number `{}` for {param_key}", param_clause.value),
            )
        })?;
        if !param.is_finite() {
            return Err(ParseError::new(
                line_no,
                param_clause.value_column,
                format!("{param_key} must be a finite number"),
            ));
        }

        let element = match kind {
            "squeeze" => {
                if param < 0.0 {
                    return Err(ParseError::new(
                        line_no,
                        param_clause.value_column,
                        "r must be ≥ 0",
                    ));
                }
                Element::Squeeze { r: param }
            }
            "pa" => {
                if param < 1.0 {
                    return Err(ParseError::new(
                        line_no,
                        param_clause.value_column,
                        "gain must be ≥ 1",
                    ));
                }
                Element::Pa { gain: param }
            }
            "bs" => {
                if !(0.0..=1.0).contains(&param) {
                    return Err(ParseError::new(
                        line_no,
                        param_clause.value_column,
                        "trans must be within [0, 1]",
                    ));
                }
                Element::Bs { trans: param }
            }
            _ => Element::Polrot { angle: param },
        };

        let (n_inputs, n_outputs) = match element {
            Element::Squeeze { .. } => (0usize, 2usize),
            Element::Pa { .. } => (2, 1),
            Element::Bs { .. } => (2, 1),
            Element::Polrot { .. } => (2, 2),
        };

        let inputs = match find("in") {
            None if n_inputs == 0 => Vec::new(),
            None => {
                return Err(ParseError::new(
                    line_no,
                    kind_token.column,
                    format!("missing key `in` for {kind}"),
                ));
            }
            Some(clause) if n_inputs == 0 => {
                return Err(ParseError::new(
                    line_no,
                    clause.column,
                    format!("{kind} takes no inputs"),
                ));
            }
            Some(clause) => {
                let idents = parse_ident_list(&clause.value, clause.value_column, line_no)?;
                if idents.len() != n_inputs {
                    return Err(ParseError::new(
                        line_no,
                        clause.column,
                        format!("{kind} requires exactly {n_inputs} inputs, got {}", idents.len()),
                    ));
                }
                let mut offset = 0;
                for ident in &idents {
                    if !defined.contains(ident) {
                        return Err(ParseError::new(
                            line_no,
                            clause.value_column + offset,
                            format!("undefined input identifier `{ident}`"),
                        ));
                    }
                    offset += ident.len() + 1;
                }
                idents
            }
        };

        let out_clause = find("out").ok_or_else(|| {
            ParseError::new(
                line_no,
                kind_token.column,
                format!("missing key `out` for {kind}"),
            )
        })?;
        let outputs = parse_ident_list(&out_clause.value, out_clause.value_column, line_no)?;
        if outputs.len() != n_outputs {
            return Err(ParseError::new(
                line_no,
                out_clause.column,
                format!(
                    "{kind} requires exactly {n_outputs} outputs, got {}",
                    outputs.len()
                ),
            ));
        }
        let mut offset = 0;
        for ident in &outputs {
            if defined.contains(ident) {
                return Err(ParseError::new(
                    line_no,
                    out_clause.value_column + offset,
                    format!("duplicate output identifier `{ident}`"),
                ));
            }
            defined.insert(ident.clone());
            offset += ident.len() + 1;
        }

        statements.push(Statement {
            element,
            inputs,
            outputs,
        });
    }
    Ok(CircuitAst {
        statements,
    })
}

/// The modes produced by executing a circuit, in definition order.
#[derive(Debug)]
pub struct CircuitRun {
    pub registry: SeedRegistry,
    pub modes: Vec<(String, OpticalMode)>,
}

impl CircuitRun {
    pub fn mode(&self, name: &str) -> Option<&OpticalMode> {
        self.modes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }
}

/// Execute a parsed circuit. Parsing enforces every domain, so execution
/// never fails.
pub fn run_circuit(ast: &CircuitAst) -> CircuitRun {
    let mut registry = SeedRegistry::new();
    let mut modes: Vec<(String, OpticalMode)> = Vec::new();
    let lookup = |modes: &[(String, OpticalMode)], name: &str| -> OpticalMode {
        modes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.clone())
            .expect("parser guarantees inputs are defined")
    };
    for statement in &ast.statements {
        let produced: Vec<OpticalMode> = match statement.element {
            Element::Squeeze { r } => {
                let param = SqueezeParam::new(r).expect("parser checked r");
                let (m1, m2) = two_mode_squeeze(&mut registry, param);
                vec![m1, m2]
            }
            Element::Pa { gain } => {
                let sig = lookup(&modes, &statement.inputs[0]);
                let idl = lookup(&modes, &statement.inputs[1]);
                let g = GainParam::new(gain).expect("parser checked gain");
                vec![parametric_amplify(&sig, &idl, g).expect("one registry")]
            }
            Element::Bs { trans } => {
                let in1 = lookup(&modes, &statement.inputs[0]);
                let in2 = lookup(&modes, &statement.inputs[1]);
                vec![beam_split(&in1, &in2, trans).expect("parser checked trans")]
            }
            Element::Polrot { angle } => {
                let mh = lookup(&modes, &statement.inputs[0]);
                let mv = lookup(&modes, &statement.inputs[1]);
                let (plus, minus) =
                    polarization_combine(&mh, &mv, angle).expect("one registry");
                vec![plus, minus]
            }
        };
        for (name, mode) in statement.outputs.iter().zip(produced) {
            modes.push((name.clone(), mode));
        }
    }
    CircuitRun { registry, modes }
}
