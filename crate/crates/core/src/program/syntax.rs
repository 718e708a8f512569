//! Lexer, parser and printer for shape programs.
//!
//! ```text
//! program   = { line } ;
//! line      = [ statement ] [ comment ] NEWLINE ;
//! statement = [ IDENT "=" ] callee "(" [ arguments ] ")" ;
//! callee    = IDENT [ "." IDENT ] ;
//! arguments = argument { "," argument } [ "," ] ;
//! argument  = [ IDENT "=" ] value ;
//! value     = number | STRING | "true" | "false" | "True" | "False"
//!           | IDENT | tuple | list ;
//! number    = [ "+" | "-" ] ( INT | REAL ) ;
//! tuple     = "(" [ value { "," value } [ "," ] ] ")" ;
//! list      = "[" [ value { "," value } [ "," ] ] "]" ;
//! comment   = "#" { any character } ;
//! ```
//!
//! Newlines inside open brackets do not end a statement, so long point
//! lists may span lines; the statement keeps the line it started on.
//! A parenthesised single value without a comma is just that value.

use std::fmt;

use super::diagnostic::{Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Str(String),
    Bool(bool),
    Ident(String),
    Tuple(Vec<Literal>),
    List(Vec<Literal>),
}

impl Literal {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Int(i) => Some(*i as f64),
            Literal::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Literal::Int(_) => "integer",
            Literal::Real(_) => "number",
            Literal::Str(_) => "string",
            Literal::Bool(_) => "bool",
            Literal::Ident(_) => "object reference",
            Literal::Tuple(_) => "tuple",
            Literal::List(_) => "list",
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            // Debug formatting of f64 is the shortest text that parses back
            // to the same bits, and always has a '.' or an exponent.
            Literal::Real(r) => write!(f, "{r:?}"),
            Literal::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Ident(s) => f.write_str(s),
            Literal::Tuple(items) => {
                f.write_str("(")?;
                write_list(f, items)?;
                if items.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            Literal::List(items) => {
                f.write_str("[")?;
                write_list(f, items)?;
                f.write_str("]")
            }
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Literal]) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub line: usize,
    pub target: Option<String>,
    /// `Modifiers` in `Modifiers.boolean(...)`.
    pub qualifier: Option<String>,
    pub callee: String,
    pub args: Vec<Literal>,
    pub kwargs: Vec<(String, Literal)>,
}

impl Statement {
    pub fn kwarg(&self, name: &str) -> Option<&Literal> {
        self.kwargs.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn full_callee(&self) -> String {
        match &self.qualifier {
            Some(q) => format!("{q}.{}", self.callee),
            None => self.callee.clone(),
        }
    }

    /// Equality without line numbers.
    pub fn same_shape(&self, other: &Statement) -> bool {
        self.target == other.target
            && self.qualifier == other.qualifier
            && self.callee == other.callee
            && self.args == other.args
            && self.kwargs == other.kwargs
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = &self.target {
            write!(f, "{t} = ")?;
        }
        write!(f, "{}(", self.full_callee())?;
        let mut first = true;
        for a in &self.args {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        for (k, v) in &self.kwargs {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{k}={v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShapeProgram {
    pub source: String,
    pub statements: Vec<Statement>,
}

impl ShapeProgram {
    /// Structural equality: same statements in the same order, ignoring
    /// source text and line numbers.
    pub fn same_structure(&self, other: &ShapeProgram) -> bool {
        self.statements.len() == other.statements.len()
            && self.statements.iter().zip(&other.statements).all(|(a, b)| a.same_shape(b))
    }
}

/// Canonical source text, one statement per line.
impl fmt::Display for ShapeProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Open(char),
    Close(char),
    Comma,
    Eq,
    Dot,
    Sign(char),
    Op(char),
    Colon,
    Newline,
    /// Marks a statement already reported by the lexer.
    Bad,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
}

fn syntax(line: usize, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(line, DiagnosticKind::Syntax, msg)
}

fn closer(open: char) -> char {
    match open {
        '(' => ')',
        '[' => ']',
        _ => '}',
    }
}

fn bracket_word(c: char) -> &'static str {
    match c {
        '(' | ')' => "parenthesis",
        '[' | ']' => "bracket",
        _ => "brace",
    }
}

fn lex(src: &str, diags: &mut Vec<Diagnostic>) -> Vec<Token> {
    let chars: Vec<char> = src.chars().collect();
    let mut out: Vec<Token> = Vec::new();
    let mut i = 0;
    let mut line = 1;
    // Open brackets with the line they were opened on.
    let mut stack: Vec<(char, usize)> = Vec::new();
    // First line of the statement being lexed.
    let mut stmt_line: Option<usize> = None;
    // Skip the rest of the current logical statement after a lexical error.
    let mut poisoned = false;

    let push = |out: &mut Vec<Token>, tok: Tok, line: usize| out.push(Token { tok, line });

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
            if stack.is_empty() {
                if stmt_line.take().is_some() {
                    push(&mut out, Tok::Newline, line - 1);
                }
                poisoned = false;
            }
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start_line = *stmt_line.get_or_insert(line);
        if poisoned {
            // Still track brackets so the statement boundary is found.
            match c {
                '(' | '[' | '{' => stack.push((c, line)),
                ')' | ']' | '}' => {
                    stack.pop();
                }
                '"' | '\'' => {
                    i += 1;
                    while i < chars.len() && chars[i] != c && chars[i] != '\n' {
                        i += if chars[i] == '\\' { 2 } else { 1 };
                    }
                }
                _ => {}
            }
            i += 1;
            continue;
        }
        let fail = |out: &mut Vec<Token>, diags: &mut Vec<Diagnostic>, msg: String| {
            diags.push(syntax(start_line, msg));
            out.push(Token {
                tok: Tok::Bad,
                line: start_line,
            });
        };
        match c {
            '(' | '[' | '{' => {
                stack.push((c, line));
                push(&mut out, Tok::Open(c), line);
                i += 1;
            }
            ')' | ']' | '}' => {
                match stack.pop() {
                    Some((open, _)) if closer(open) == c => push(&mut out, Tok::Close(c), line),
                    Some((open, oline)) => {
                        fail(
                            &mut out,
                            diags,
                            format!("mismatched {}: '{open}' opened on line {oline} is closed by '{c}'", bracket_word(c)),
                        );
                        poisoned = true;
                    }
                    None => {
                        fail(&mut out, diags, format!("unbalanced {}: unexpected '{c}'", bracket_word(c)));
                        poisoned = true;
                    }
                }
                i += 1;
            }
            ',' => {
                push(&mut out, Tok::Comma, line);
                i += 1;
            }
            '=' => {
                if chars.get(i + 1) == Some(&'=') {
                    fail(&mut out, diags, "comparisons are not supported".into());
                    poisoned = true;
                    i += 2;
                } else {
                    push(&mut out, Tok::Eq, line);
                    i += 1;
                }
            }
            ':' => {
                push(&mut out, Tok::Colon, line);
                i += 1;
            }
            '+' | '-' => {
                push(&mut out, Tok::Sign(c), line);
                i += 1;
            }
            '*' | '/' | '%' => {
                push(&mut out, Tok::Op(c), line);
                i += 1;
            }
            '"' | '\'' => {
                let quote = c;
                let mut s = String::new();
                let mut j = i + 1;
                let mut closed = false;
                while j < chars.len() && chars[j] != '\n' {
                    let d = chars[j];
                    if d == quote {
                        closed = true;
                        break;
                    }
                    if d == '\\' && j + 1 < chars.len() && chars[j + 1] != '\n' {
                        j += 1;
                        s.push(match chars[j] {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                    } else {
                        s.push(d);
                    }
                    j += 1;
                }
                if closed {
                    push(&mut out, Tok::Str(s), line);
                    i = j + 1;
                } else {
                    fail(&mut out, diags, "unterminated string literal".into());
                    poisoned = true;
                    i = j;
                }
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                let mut is_real = false;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    is_real = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        is_real = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                if i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    let mut j = i;
                    while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                        j += 1;
                    }
                    let bad: String = chars[start..j].iter().collect();
                    fail(&mut out, diags, format!("malformed number '{bad}'"));
                    poisoned = true;
                    i = j;
                } else if is_real {
                    match text.parse::<f64>() {
                        Ok(v) if v.is_finite() => push(&mut out, Tok::Real(v), line),
                        _ => {
                            fail(&mut out, diags, format!("number '{text}' is out of range"));
                            poisoned = true;
                        }
                    }
                } else {
                    match text.parse::<i64>() {
                        Ok(v) => push(&mut out, Tok::Int(v), line),
                        Err(_) => {
                            fail(&mut out, diags, format!("integer '{text}' is out of range"));
                            poisoned = true;
                        }
                    }
                }
            }
            '.' => {
                push(&mut out, Tok::Dot, line);
                i += 1;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                push(&mut out, Tok::Ident(chars[start..i].iter().collect()), line);
            }
            other => {
                fail(&mut out, diags, format!("unexpected character '{other}'"));
                poisoned = true;
                i += 1;
            }
        }
    }
    if let Some(&(open, oline)) = stack.first() {
        let start = stmt_line.unwrap_or(oline);
        if !poisoned {
            diags.push(syntax(
                start,
                format!(
                    "unbalanced {}: '{open}' opened on line {oline} is never closed",
                    bracket_word(open)
                ),
            ));
        }
        out.push(Token { tok: Tok::Bad, line: start });
    }
    if stmt_line.is_some() {
        out.push(Token {
            tok: Tok::Newline,
            line,
        });
    }
    out
}

const KEYWORDS: &[&str] = &[
    "def", "return", "import", "from", "for", "while", "if", "elif", "else", "class", "with", "lambda", "try",
    "except", "pass", "global",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, String>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        self.pos += 1;
        t
    }

    fn skip_statement(&mut self) {
        while self.pos < self.toks.len() && self.toks[self.pos].tok != Tok::Newline {
            self.pos += 1;
        }
        if self.pos < self.toks.len() {
            self.pos += 1;
        }
    }

    fn statement_is_bad(&self) -> bool {
        self.toks[self.pos..]
            .iter()
            .take_while(|t| t.tok != Tok::Newline)
            .any(|t| t.tok == Tok::Bad)
    }

    fn statement(&mut self, line: usize) -> PResult<Statement> {
        let first = match self.bump() {
            Tok::Ident(s) => s,
            other => return Err(format!("expected a builtin call, found {}", describe(&other))),
        };
        if KEYWORDS.contains(&first.as_str()) {
            return Err(format!(
                "'{first}' is not supported: a program is a list of builtin calls, one per line"
            ));
        }
        let (target, callee_head) = if *self.peek() == Tok::Eq {
            self.bump();
            match self.bump() {
                Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => {
                    return Err(format!("'{s}' is not supported"));
                }
                Tok::Ident(s) => (Some(first), s),
                other => {
                    return Err(format!(
                        "expected a builtin call after '{first} =', found {}",
                        describe(&other)
                    ))
                }
            }
        } else {
            (None, first)
        };
        let (qualifier, callee) = if *self.peek() == Tok::Dot {
            self.bump();
            match self.bump() {
                Tok::Ident(s) => (Some(callee_head), s),
                other => return Err(format!("expected a name after '.', found {}", describe(&other))),
            }
        } else {
            (None, callee_head)
        };
        match self.bump() {
            Tok::Open('(') => {}
            Tok::Newline if target.is_some() => {
                return Err(format!(
                    "'{}' is not a call; assignments must bind the result of a builtin call",
                    callee
                ))
            }
            other => return Err(format!("expected '(' after '{callee}', found {}", describe(&other))),
        }
        let mut args = Vec::new();
        let mut kwargs: Vec<(String, Literal)> = Vec::new();
        loop {
            if *self.peek() == Tok::Close(')') {
                self.bump();
                break;
            }
            let is_kw = matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == Some(&Tok::Eq);
            if is_kw {
                let Tok::Ident(name) = self.bump() else { unreachable!() };
                self.bump();
                let v = self.value()?;
                if kwargs.iter().any(|(k, _)| *k == name) {
                    return Err(format!("duplicate keyword argument '{name}'"));
                }
                kwargs.push((name, v));
            } else {
                let v = self.value()?;
                if !kwargs.is_empty() {
                    return Err("positional argument follows keyword argument".into());
                }
                args.push(v);
            }
            match self.bump() {
                Tok::Comma => {}
                Tok::Close(')') => break,
                other => return Err(format!("expected ',' or ')' in argument list, found {}", describe(&other))),
            }
        }
        match self.peek() {
            Tok::Newline => {
                self.bump();
            }
            other => {
                return Err(format!(
                    "unexpected {} after the call; write one call per line",
                    describe(other)
                ))
            }
        }
        Ok(Statement {
            line,
            target,
            qualifier,
            callee,
            args,
            kwargs,
        })
    }

    fn value(&mut self) -> PResult<Literal> {
        let v = match self.bump() {
            Tok::Sign(s) => match self.bump() {
                Tok::Int(i) => Literal::Int(if s == '-' { -i } else { i }),
                Tok::Real(r) => Literal::Real(if s == '-' { -r } else { r }),
                other => return Err(format!("expected a number after '{s}', found {}", describe(&other))),
            },
            Tok::Int(i) => Literal::Int(i),
            Tok::Real(r) => Literal::Real(r),
            Tok::Str(s) => Literal::Str(s),
            Tok::Ident(s) => match s.as_str() {
                "true" | "True" => Literal::Bool(true),
                "false" | "False" => Literal::Bool(false),
                "None" => return Err("None is not supported; omit the argument to use its default".into()),
                "math" | "pi" => return Err(format!("'{s}' is not supported; write numbers as literals")),
                _ => {
                    if matches!(self.peek(), Tok::Open('(')) {
                        return Err(format!("nested call to '{s}' is not supported; bind it on its own line first"));
                    }
                    if matches!(self.peek(), Tok::Dot) {
                        return Err(format!("attribute access on '{s}' is not supported"));
                    }
                    Literal::Ident(s)
                }
            },
            Tok::Open('(') => {
                let (items, trailing_comma) = self.sequence(')')?;
                if items.len() == 1 && !trailing_comma {
                    items.into_iter().next().expect("one item")
                } else {
                    Literal::Tuple(items)
                }
            }
            Tok::Open('[') => Literal::List(self.sequence(']')?.0),
            Tok::Open('{') => return Err("dictionaries are not supported".into()),
            other => return Err(format!("expected a value, found {}", describe(&other))),
        };
        match self.peek() {
            Tok::Sign(_) | Tok::Op(_) => Err("arithmetic is not supported; write the computed value as a literal".into()),
            _ => Ok(v),
        }
    }

    fn sequence(&mut self, close: char) -> PResult<(Vec<Literal>, bool)> {
        let mut items = Vec::new();
        let mut trailing = false;
        loop {
            if *self.peek() == Tok::Close(close) {
                self.bump();
                return Ok((items, trailing));
            }
            items.push(self.value()?);
            match self.bump() {
                Tok::Comma => trailing = true,
                Tok::Close(c) if c == close => return Ok((items, false)),
                other => return Err(format!("expected ',' or '{close}', found {}", describe(&other))),
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(i) => format!("'{i}'"),
        Tok::Real(r) => format!("'{r}'"),
        Tok::Str(_) => "a string".into(),
        Tok::Open(c) | Tok::Close(c) | Tok::Sign(c) | Tok::Op(c) => format!("'{c}'"),
        Tok::Comma => "','".into(),
        Tok::Eq => "'='".into(),
        Tok::Dot => "'.'".into(),
        Tok::Colon => "':'".into(),
        Tok::Newline => "end of line".into(),
        Tok::Bad => "invalid input".into(),
    }
}

/// Parses a whole program. All syntax errors are reported, one per bad
/// statement; the program is returned only if there are none.
pub fn parse(source: &str) -> Result<ShapeProgram, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let toks = lex(source, &mut diags);
    let mut p = Parser { toks, pos: 0 };
    let mut statements = Vec::new();
    while p.pos < p.toks.len() {
        let line = p.toks[p.pos].line;
        if p.statement_is_bad() {
            p.skip_statement();
            continue;
        }
        match p.statement(line) {
            Ok(s) => statements.push(s),
            Err(msg) => {
                diags.push(syntax(line, msg));
                // The failing token may have been the newline itself.
                if p.pos > 0 && p.toks[p.pos - 1].tok == Tok::Newline {
                    continue;
                }
                p.skip_statement();
            }
        }
    }
    diags.sort_by_key(|d| d.line);
    if diags.is_empty() {
        Ok(ShapeProgram {
            source: source.to_string(),
            statements,
        })
    } else {
        Err(diags)
    }
}
