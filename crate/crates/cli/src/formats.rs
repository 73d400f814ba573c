//! Line-oriented text formats for circuits, span programs and adversary
//! structures. Blank lines and `#` comments are ignored everywhere.

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use q2mpc_core::engine::{Circuit, CircuitError, Gate};
use q2mpc_core::field::{FieldElement, FieldSpec};
use q2mpc_core::msp::Msp;
use q2mpc_core::structures::{AdversaryStructure, PlayerSet, MAX_PLAYERS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, column: usize, message: impl fmt::Display) -> Self {
        ParseError {
            line,
            column,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    line: usize,
    column: usize,
    text: &'a str,
}

impl Token<'_> {
    fn error(&self, message: impl fmt::Display) -> ParseError {
        ParseError::at(self.line, self.column, message)
    }

    fn number(&self) -> Result<u64, ParseError> {
        self.text
            .parse()
            .map_err(|_| self.error(format_args!("expected a number, found '{}'", self.text)))
    }

    fn element(&self, field: &FieldSpec) -> Result<FieldElement, ParseError> {
        let v = self.number()?;
        if v >= field.modulus() {
            return Err(self.error(format_args!("{v} is not an element of {field}")));
        }
        Ok(field.elem(v))
    }

    fn player(&self, n: usize) -> Result<usize, ParseError> {
        let p = self.number()? as usize;
        if p >= n {
            return Err(self.error(format_args!("player {p} out of range for {n} players")));
        }
        Ok(p)
    }
}

/// One non-empty directive: its tokens, all on line `line`.
struct Directive<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
}

impl<'a> Directive<'a> {
    fn keyword(&self) -> &'a str {
        self.tokens[0].text
    }

    fn expect_arity(&self, args: usize, usage: &str) -> Result<(), ParseError> {
        if self.tokens.len() != args + 1 {
            let column = self.tokens.get(args + 1).map_or(self.end(), |t| t.column);
            return Err(ParseError::at(
                self.line,
                column,
                format_args!("usage: {usage}"),
            ));
        }
        Ok(())
    }

    fn end(&self) -> usize {
        let last = self.tokens.last().expect("non-empty");
        last.column + last.text.len()
    }
}

fn directives(src: &str) -> Vec<Directive<'_>> {
    src.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let mut tokens = Vec::new();
            let mut start = None;
            for (pos, ch) in body.char_indices().chain([(body.len(), ' ')]) {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(pos),
                    (true, Some(s)) => {
                        tokens.push(Token {
                            line: i + 1,
                            column: s + 1,
                            text: &body[s..pos],
                        });
                        start = None;
                    }
                    _ => {}
                }
            }
            (!tokens.is_empty()).then_some(Directive {
                line: i + 1,
                tokens,
            })
        })
        .collect()
}

fn header<'a, 'b>(
    it: &mut impl Iterator<Item = &'b Directive<'a>>,
    keyword: &str,
    usage: &str,
    last_line: usize,
) -> Result<&'b Directive<'a>, ParseError>
where
    'a: 'b,
{
    let d = it
        .next()
        .ok_or_else(|| ParseError::at(last_line + 1, 1, format_args!("expected '{usage}'")))?;
    if d.keyword() != keyword {
        return Err(d.tokens[0].error(format_args!("expected '{usage}'")));
    }
    Ok(d)
}

fn field_directive(d: &Directive<'_>) -> Result<FieldSpec, ParseError> {
    d.expect_arity(1, "field <q>")?;
    let q = d.tokens[1].number()?;
    FieldSpec::computation(q).map_err(|e| d.tokens[1].error(e))
}

pub fn parse_circuit(src: &str) -> Result<Circuit, ParseError> {
    let ds = directives(src);
    let last_line = src.lines().count();
    let mut it = ds.iter();
    let field = field_directive(header(&mut it, "field", "field <q>", last_line)?)?;
    let mut gates = Vec::new();
    let mut lines = Vec::new();
    for d in it {
        let t = &d.tokens;
        let gate = match d.keyword() {
            "in" => {
                d.expect_arity(2, "in <wire> P<idx>")?;
                let owner = t[2]
                    .text
                    .strip_prefix('P')
                    .and_then(|s| s.parse().ok())
                    .filter(|&p: &usize| p < MAX_PLAYERS)
                    .ok_or_else(|| t[2].error("expected an owner such as P0"))?;
                Gate::Input {
                    wire: t[1].text.into(),
                    owner,
                }
            }
            "cadd" | "smul" => {
                d.expect_arity(3, &format!("{} <out> <λ> <in>", d.keyword()))?;
                let (out, lambda, input) =
                    (t[1].text.into(), t[2].element(&field)?, t[3].text.into());
                if d.keyword() == "cadd" {
                    Gate::ConstAdd { out, lambda, input }
                } else {
                    Gate::ScalarMul { out, lambda, input }
                }
            }
            "add" | "mul" => {
                d.expect_arity(3, &format!("{} <out> <in1> <in2>", d.keyword()))?;
                let (out, a, b) = (t[1].text.into(), t[2].text.into(), t[3].text.into());
                if d.keyword() == "add" {
                    Gate::Add { out, a, b }
                } else {
                    Gate::Mul { out, a, b }
                }
            }
            "out" => {
                d.expect_arity(1, "out <wire>")?;
                Gate::Output {
                    wire: t[1].text.into(),
                }
            }
            other => return Err(t[0].error(format_args!("unknown directive '{other}'"))),
        };
        gates.push(gate);
        lines.push(d);
    }
    Circuit::new(field, gates).map_err(|e| {
        let (line, column) = match &e {
            CircuitError::Undefined { gate, wire } | CircuitError::Reassigned { gate, wire } => {
                let d = lines[*gate];
                let col = d.tokens[1..]
                    .iter()
                    .find(|t| t.text == wire)
                    .map_or(1, |t| t.column);
                (d.line, col)
            }
            CircuitError::ConstantOutOfField { gate, .. } => (lines[*gate].line, 1),
            CircuitError::NoOutput => (last_line + 1, 1),
        };
        ParseError::at(line, column, e)
    })
}

pub fn write_circuit(circuit: &Circuit) -> String {
    circuit.to_string()
}

pub fn parse_msp(src: &str) -> Result<Msp, ParseError> {
    let ds = directives(src);
    let last_line = src.lines().count();
    let mut it = ds.iter();
    let field = field_directive(header(&mut it, "field", "field <q>", last_line)?)?;
    let dims = header(&mut it, "matrix", "matrix <d> <e>", last_line)?;
    dims.expect_arity(2, "matrix <d> <e>")?;
    let d = dims.tokens[1].number()? as usize;
    let e = dims.tokens[2].number()? as usize;
    if d == 0 || e == 0 || e > d {
        return Err(dims.tokens[1].error(format_args!("need d >= e >= 1, got {d} x {e}")));
    }
    let mut matrix = Vec::with_capacity(d);
    for _ in 0..d {
        let row = it.next().ok_or_else(|| {
            ParseError::at(last_line + 1, 1, format_args!("expected {d} matrix rows"))
        })?;
        if row.tokens.len() != e {
            let column = row.tokens.get(e).map_or(row.end(), |t| t.column);
            return Err(ParseError::at(
                row.line,
                column,
                format_args!("expected {e} entries"),
            ));
        }
        matrix.push(
            row.tokens
                .iter()
                .map(|t| t.element(&field))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    let owners_line = header(&mut it, "owners", "owners <p1> ... <pd>", last_line)?;
    if owners_line.tokens.len() != d + 1 {
        return Err(ParseError::at(
            owners_line.line,
            owners_line.end(),
            format_args!("expected {d} owners"),
        ));
    }
    let owners = owners_line.tokens[1..]
        .iter()
        .map(|t| t.player(MAX_PLAYERS - 1))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(extra) = it.next() {
        return Err(extra.tokens[0].error("unexpected directive after 'owners'"));
    }
    let n = owners.iter().max().map_or(0, |m| m + 1);
    Msp::new(field, matrix, owners, n).map_err(|e| ParseError::at(owners_line.line, 1, e))
}

pub fn write_msp(msp: &Msp) -> String {
    let mut s = String::new();
    writeln!(s, "field {}", msp.field().modulus()).unwrap();
    writeln!(s, "matrix {} {}", msp.rows(), msp.cols()).unwrap();
    for l in 0..msp.rows() {
        let row: Vec<String> = msp.row(l).iter().map(|x| x.value().to_string()).collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    let owners: Vec<String> = msp.owners().iter().map(usize::to_string).collect();
    writeln!(s, "owners {}", owners.join(" ")).unwrap();
    s
}

pub fn parse_structure(src: &str) -> Result<AdversaryStructure, ParseError> {
    let ds = directives(src);
    let last_line = src.lines().count();
    let mut it = ds.iter();
    let players = header(&mut it, "players", "players <n>", last_line)?;
    players.expect_arity(1, "players <n>")?;
    let n = players.tokens[1].number()? as usize;
    if n == 0 || n >= MAX_PLAYERS {
        return Err(
            players.tokens[1].error(format_args!("player count must be in 1..{MAX_PLAYERS}"))
        );
    }
    let mut family = Vec::new();
    for d in it {
        let set = d
            .tokens
            .iter()
            .map(|t| t.player(n))
            .collect::<Result<PlayerSet, _>>()?;
        family.push(set);
    }
    AdversaryStructure::new(n, family).map_err(|e| ParseError::at(players.line, 1, e))
}

pub fn write_structure(structure: &AdversaryStructure) -> String {
    let mut s = format!("players {}\n", structure.player_count());
    for set in structure.maximal_sets().iter().filter(|b| !b.is_empty()) {
        let members: Vec<String> = set.iter().map(|p| p.to_string()).collect();
        writeln!(s, "{}", members.join(" ")).unwrap();
    }
    s
}
