//! Recursive single-pass parser for MiniMP source text.
//!
//! The grammar is line-oriented: one construct per physical line, blank lines
//! allowed anywhere. Accepted forms:
//!
//! ```text
//! shared int NAME[LEN];
//! parallel(N) {              parallel_for(N) [ordered] {
//!     LOCAL = ARR[IDX];          ARR[IDX] = LOCAL | tid | i | CONST;
//!     ARR[IDX] = ARR[IDX];       compute;
//!     barrier;                   ordered { ... }
//! }                          }
//! ```
//!
//! `IDX` is `tid`/`i`, `tid+c`/`i-c`, or an integer constant; the induction
//! symbol is `tid` in `parallel` regions and `i` in `parallel_for` loops.
//! Input may use LF or CRLF line endings. The tokens `sections`, `simd`,
//! `task`, `teams`, `target` and pointer syntax (`*`) are recognized but
//! rejected as unsupported.

use crate::ast::*;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{loc}: syntax error: {message}")]
    Syntax { loc: SourceLoc, message: String },
    #[error("{loc}: unsupported construct `{construct}`")]
    Unsupported { loc: SourceLoc, construct: String },
}

impl ParseError {
    pub fn loc(&self) -> SourceLoc {
        match self {
            ParseError::Syntax { loc, .. } | ParseError::Unsupported { loc, .. } => *loc,
        }
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

const UNSUPPORTED_KEYWORDS: &[&str] = &["sections", "simd", "task", "teams", "target"];
const RESERVED: &[&str] = &[
    "shared",
    "int",
    "parallel",
    "parallel_for",
    "ordered",
    "barrier",
    "compute",
    "tid",
    "i",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
}

#[derive(Debug, Clone)]
struct SpannedTok {
    tok: Tok,
    col: u32,
}

fn tokenize(line: &str, line_no: u32) -> ParseResult<Vec<SpannedTok>> {
    let mut toks = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        let col = (start + 1) as u32;
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '*' {
            return Err(ParseError::Unsupported {
                loc: SourceLoc::new(line_no, col),
                construct: "*".into(),
            });
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    ident.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            toks.push(SpannedTok {
                tok: Tok::Ident(ident),
                col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut n: i64 = 0;
            while let Some(&(_, c)) = chars.peek() {
                if let Some(d) = c.to_digit(10) {
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(d as i64))
                        .ok_or_else(|| ParseError::Syntax {
                            loc: SourceLoc::new(line_no, col),
                            message: "integer literal too large".into(),
                        })?;
                    chars.next();
                } else {
                    break;
                }
            }
            toks.push(SpannedTok {
                tok: Tok::Int(n),
                col,
            });
            continue;
        }
        if "(){}[];=+-".contains(c) {
            chars.next();
            toks.push(SpannedTok {
                tok: Tok::Sym(c),
                col,
            });
            continue;
        }
        return Err(ParseError::Syntax {
            loc: SourceLoc::new(line_no, col),
            message: format!("unexpected character `{c}`"),
        });
    }
    for t in &toks {
        if let Tok::Ident(name) = &t.tok {
            if UNSUPPORTED_KEYWORDS.contains(&name.as_str()) {
                return Err(ParseError::Unsupported {
                    loc: SourceLoc::new(line_no, t.col),
                    construct: name.clone(),
                });
            }
        }
    }
    Ok(toks)
}

/// Cursor over one line's tokens.
struct Line<'a> {
    toks: &'a [SpannedTok],
    pos: usize,
    line_no: u32,
}

impl<'a> Line<'a> {
    fn new(toks: &'a [SpannedTok], line_no: u32) -> Self {
        Line {
            toks,
            pos: 0,
            line_no,
        }
    }

    fn loc_here(&self) -> SourceLoc {
        match self.toks.get(self.pos) {
            Some(t) => SourceLoc::new(self.line_no, t.col),
            None => {
                let end = self.toks.last().map(|t| t.col + 1).unwrap_or(1);
                SourceLoc::new(self.line_no, end)
            }
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> ParseResult<T> {
        Err(ParseError::Syntax {
            loc: self.loc_here(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_sym(&mut self, c: char) -> ParseResult<()> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{c}`")),
        }
    }

    fn expect_ident(&mut self) -> ParseResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn expect_int(&mut self) -> ParseResult<i64> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected integer"),
        }
    }

    fn expect_end(&mut self) -> ParseResult<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            self.err("unexpected trailing tokens")
        }
    }
}

struct Parser {
    program: Program,
    /// Region currently being parsed, plus whether we are inside its ordered
    /// block and whether one was already seen.
    open: Option<OpenRegion>,
}

struct OpenRegion {
    region: Region,
    in_ordered: bool,
    seen_ordered: bool,
}

/// Splits source text into physical lines, accepting LF and CRLF endings.
/// A trailing newline produces one empty trailing element; it is dropped so
/// that re-joining with `\n` plus a final newline round-trips.
pub(crate) fn source_lines(source: &str) -> Vec<String> {
    let lines: Vec<String> = source
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect();
    match lines.last() {
        Some(l) if l.is_empty() => lines[..lines.len() - 1].to_vec(),
        _ => lines,
    }
}

/// Parses MiniMP source. The program name defaults to `"main"`; callers that
/// know a better name (e.g. the input file stem) set it afterwards.
pub fn parse(source: &str) -> ParseResult<Program> {
    let lines = source_lines(source);

    let mut p = Parser {
        program: Program {
            name: "main".into(),
            decls: Vec::new(),
            regions: Vec::new(),
            lines: lines.clone(),
        },
        open: None,
    };

    for (idx, raw) in lines.iter().enumerate() {
        let line_no = (idx + 1) as u32;
        let toks = tokenize(raw, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut line = Line::new(&toks, line_no);
        p.parse_line(&mut line)?;
    }

    if let Some(open) = &p.open {
        return Err(ParseError::Syntax {
            loc: SourceLoc::new(lines.len() as u32 + 1, 1),
            message: format!(
                "unclosed region starting at line {}",
                open.region.header_loc.line
            ),
        });
    }
    Ok(p.program)
}

impl Parser {
    fn parse_line(&mut self, line: &mut Line) -> ParseResult<()> {
        let loc = line.loc_here();
        match line.peek() {
            Some(Tok::Ident(kw)) if kw == "shared" => self.parse_decl(line, loc),
            Some(Tok::Ident(kw)) if kw == "parallel" || kw == "parallel_for" => {
                self.parse_header(line, loc)
            }
            Some(Tok::Sym('}')) => self.parse_close(line, loc),
            _ => self.parse_stmt(line, loc),
        }
    }

    fn parse_decl(&mut self, line: &mut Line, loc: SourceLoc) -> ParseResult<()> {
        if self.open.is_some() {
            return line.err("array declarations must appear outside regions");
        }
        line.next(); // shared
        match line.peek() {
            Some(Tok::Ident(k)) if k == "int" => {
                line.next();
            }
            _ => return line.err("expected `int`"),
        }
        let name_loc = line.loc_here();
        let name = line.expect_ident()?;
        if RESERVED.contains(&name.as_str()) {
            return Err(ParseError::Syntax {
                loc: name_loc,
                message: format!("`{name}` is reserved"),
            });
        }
        if self.program.decls.iter().any(|d| d.name == name) {
            return Err(ParseError::Syntax {
                loc: name_loc,
                message: format!("array `{name}` declared twice"),
            });
        }
        line.expect_sym('[')?;
        let len = line.expect_int()?;
        if len < 1 {
            return line.err("array length must be positive");
        }
        line.expect_sym(']')?;
        line.expect_sym(';')?;
        line.expect_end()?;
        self.program.decls.push(ArrayDecl {
            name,
            len: len as u64,
            loc,
        });
        Ok(())
    }

    fn parse_header(&mut self, line: &mut Line, loc: SourceLoc) -> ParseResult<()> {
        if self.open.is_some() {
            return line.err("regions cannot nest");
        }
        let kw = line.expect_ident()?;
        let kind = if kw == "parallel" {
            RegionKind::Parallel
        } else {
            RegionKind::ParallelFor
        };
        line.expect_sym('(')?;
        let count = line.expect_int()?;
        if count < 1 {
            return line.err("thread/trip count must be positive");
        }
        line.expect_sym(')')?;
        let mut has_ordered_clause = false;
        if let Some(Tok::Ident(k)) = line.peek() {
            if k == "ordered" {
                if kind != RegionKind::ParallelFor {
                    return line.err("`ordered` clause is only valid on parallel_for");
                }
                has_ordered_clause = true;
                line.next();
            }
        }
        line.expect_sym('{')?;
        line.expect_end()?;
        self.open = Some(OpenRegion {
            region: Region {
                kind,
                count: count as u32,
                has_ordered_clause,
                header_loc: loc,
                footer_line: 0,
                body: Vec::new(),
            },
            in_ordered: false,
            seen_ordered: false,
        });
        Ok(())
    }

    fn parse_close(&mut self, line: &mut Line, loc: SourceLoc) -> ParseResult<()> {
        line.next(); // }
        line.expect_end()?;
        let open = match self.open.as_mut() {
            Some(o) => o,
            None => return line.err("unmatched `}`"),
        };
        if open.in_ordered {
            open.in_ordered = false;
            open.region.body.push(Stmt {
                loc,
                op: StmtOp::OrderedEnd,
            });
            return Ok(());
        }
        let mut open = self.open.take().unwrap();
        open.region.footer_line = loc.line;
        self.program.regions.push(open.region);
        Ok(())
    }

    fn parse_stmt(&mut self, line: &mut Line, loc: SourceLoc) -> ParseResult<()> {
        let open = match self.open.as_mut() {
            Some(o) => o,
            None => return line.err("statements must appear inside a region"),
        };
        let kind = open.region.kind;

        match line.peek() {
            Some(Tok::Ident(kw)) if kw == "barrier" => {
                line.next();
                line.expect_sym(';')?;
                line.expect_end()?;
                if kind != RegionKind::Parallel {
                    return Err(ParseError::Syntax {
                        loc,
                        message: "`barrier;` is not allowed inside parallel_for".into(),
                    });
                }
                if open.in_ordered {
                    return Err(ParseError::Syntax {
                        loc,
                        message: "`barrier;` is not allowed inside an ordered block".into(),
                    });
                }
                open.region.body.push(Stmt {
                    loc,
                    op: StmtOp::Barrier,
                });
                return Ok(());
            }
            Some(Tok::Ident(kw)) if kw == "ordered" => {
                line.next();
                line.expect_sym('{')?;
                line.expect_end()?;
                if kind != RegionKind::ParallelFor {
                    return Err(ParseError::Syntax {
                        loc,
                        message: "ordered blocks are only valid inside parallel_for".into(),
                    });
                }
                if open.in_ordered {
                    return Err(ParseError::Syntax {
                        loc,
                        message: "ordered blocks cannot nest".into(),
                    });
                }
                if open.seen_ordered {
                    return Err(ParseError::Syntax {
                        loc,
                        message: "at most one ordered block per loop".into(),
                    });
                }
                open.in_ordered = true;
                open.seen_ordered = true;
                open.region.body.push(Stmt {
                    loc,
                    op: StmtOp::OrderedBegin,
                });
                return Ok(());
            }
            Some(Tok::Ident(kw)) if kw == "compute" => {
                line.next();
                line.expect_sym(';')?;
                line.expect_end()?;
                open.region.body.push(Stmt {
                    loc,
                    op: StmtOp::LocalCompute,
                });
                return Ok(());
            }
            _ => {}
        }

        // Assignment statement.
        let lhs_loc = line.loc_here();
        let lhs = line.expect_ident()?;
        let lhs_is_array = self.program.decls.iter().any(|d| d.name == lhs);
        let op = if matches!(line.peek(), Some(Tok::Sym('['))) {
            if !lhs_is_array {
                return Err(ParseError::Syntax {
                    loc: lhs_loc,
                    message: format!("`{lhs}` is not a declared array"),
                });
            }
            line.expect_sym('[')?;
            let write_index = self.parse_index(line, kind)?;
            line.expect_sym(']')?;
            line.expect_sym('=')?;
            self.parse_write_rhs(line, kind, lhs, write_index)?
        } else {
            if RESERVED.contains(&lhs.as_str()) {
                return Err(ParseError::Syntax {
                    loc: lhs_loc,
                    message: format!("`{lhs}` is reserved"),
                });
            }
            if lhs_is_array {
                return Err(ParseError::Syntax {
                    loc: lhs_loc,
                    message: format!("array `{lhs}` must be subscripted"),
                });
            }
            line.expect_sym('=')?;
            let arr_loc = line.loc_here();
            let arr = line.expect_ident()?;
            if !self.program.decls.iter().any(|d| d.name == arr) {
                return Err(ParseError::Syntax {
                    loc: arr_loc,
                    message: format!("`{arr}` is not a declared array"),
                });
            }
            line.expect_sym('[')?;
            let index = self.parse_index(line, kind)?;
            line.expect_sym(']')?;
            StmtOp::Read {
                array: arr,
                index,
                local: lhs,
            }
        };
        line.expect_sym(';')?;
        line.expect_end()?;
        let open = self.open.as_mut().unwrap();
        open.region.body.push(Stmt { loc, op });
        Ok(())
    }

    fn parse_write_rhs(
        &self,
        line: &mut Line,
        kind: RegionKind,
        array: String,
        write_index: IndexExpr,
    ) -> ParseResult<StmtOp> {
        match line.peek().cloned() {
            Some(Tok::Ident(name)) => {
                let name_loc = line.loc_here();
                line.next();
                if name == induction_symbol(kind) {
                    return Ok(StmtOp::Write {
                        array,
                        index: write_index,
                        value: ValueExpr::Induction,
                    });
                }
                if RESERVED.contains(&name.as_str()) {
                    return Err(ParseError::Syntax {
                        loc: name_loc,
                        message: format!("`{name}` is not valid here"),
                    });
                }
                if let Some(decl) = self.program.decls.iter().find(|d| d.name == name) {
                    // `arr[w] = arr2[r];`
                    if decl.name != array {
                        return Err(ParseError::Syntax {
                            loc: name_loc,
                            message: "read and write on one line must target the same array".into(),
                        });
                    }
                    line.expect_sym('[')?;
                    let read_index = self.parse_index(line, kind)?;
                    line.expect_sym(']')?;
                    return Ok(StmtOp::ReadWrite {
                        array,
                        read_index,
                        write_index,
                    });
                }
                Ok(StmtOp::Write {
                    array,
                    index: write_index,
                    value: ValueExpr::Local(name),
                })
            }
            Some(Tok::Int(_)) | Some(Tok::Sym('-')) => {
                let n = self.parse_signed_int(line)?;
                Ok(StmtOp::Write {
                    array,
                    index: write_index,
                    value: ValueExpr::Const(n),
                })
            }
            _ => line.err("expected value expression"),
        }
    }

    fn parse_signed_int(&self, line: &mut Line) -> ParseResult<i64> {
        let neg = if matches!(line.peek(), Some(Tok::Sym('-'))) {
            line.next();
            true
        } else {
            false
        };
        let n = line.expect_int()?;
        Ok(if neg { -n } else { n })
    }

    fn parse_index(&self, line: &mut Line, kind: RegionKind) -> ParseResult<IndexExpr> {
        match line.peek().cloned() {
            Some(Tok::Ident(sym)) => {
                let sym_loc = line.loc_here();
                line.next();
                if sym != induction_symbol(kind) {
                    return Err(ParseError::Syntax {
                        loc: sym_loc,
                        message: format!(
                            "index must use `{}` or a constant here",
                            induction_symbol(kind)
                        ),
                    });
                }
                let offset = match line.peek() {
                    Some(Tok::Sym('+')) => {
                        line.next();
                        line.expect_int()?
                    }
                    Some(Tok::Sym('-')) => {
                        line.next();
                        -line.expect_int()?
                    }
                    _ => 0,
                };
                Ok(IndexExpr::Induction { offset })
            }
            Some(Tok::Int(_)) | Some(Tok::Sym('-')) => {
                Ok(IndexExpr::Const(self.parse_signed_int(line)?))
            }
            _ => line.err("expected index expression"),
        }
    }
}

pub fn induction_symbol(kind: RegionKind) -> &'static str {
    match kind {
        RegionKind::Parallel => "tid",
        RegionKind::ParallelFor => "i",
    }
}
