//! Syntax tree for MiniMP, a line-oriented toy language for barrier- and
//! ordered-region-synchronized parallel programs.
//!
//! Every statement occupies exactly one physical line, and every node keeps
//! the 1-based location of its first token. The original source lines are
//! retained verbatim on [`Program`] so that emitted output can reproduce the
//! input byte-for-byte outside of edited lines.

use serde::Serialize;
use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SourceLoc {
    pub line: u32,
    pub col: u32,
}

impl SourceLoc {
    pub fn new(line: u32, col: u32) -> Self {
        SourceLoc { line, col }
    }
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Subscript expression of a shared-array access.
///
/// `Induction { offset }` denotes `tid + offset` inside `parallel` regions and
/// `i + offset` inside `parallel_for` loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexExpr {
    Induction { offset: i64 },
    Const(i64),
}

/// Right-hand side of a write statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueExpr {
    Local(String),
    Induction,
    Const(i64),
}

/// One executable statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtOp {
    /// `local = arr[idx];`
    Read {
        array: String,
        index: IndexExpr,
        local: String,
    },
    /// `arr[idx] = value;`
    Write {
        array: String,
        index: IndexExpr,
        value: ValueExpr,
    },
    /// `arr[w] = arr[r];` — reads and writes the same array on one line.
    /// Race checking treats this as a read event followed by a write event,
    /// both at this statement's line.
    ReadWrite {
        array: String,
        read_index: IndexExpr,
        write_index: IndexExpr,
    },
    /// `compute;` — thread-local work, irrelevant to races.
    LocalCompute,
    /// `barrier;` (only valid inside `parallel` regions).
    Barrier,
    /// `ordered {` opening line (only valid inside `parallel_for` loops).
    OrderedBegin,
    /// `}` closing an ordered block.
    OrderedEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub loc: SourceLoc,
    pub op: StmtOp,
}

impl Stmt {
    /// True when the statement touches a shared array.
    pub fn is_shared_access(&self) -> bool {
        matches!(
            self.op,
            StmtOp::Read { .. } | StmtOp::Write { .. } | StmtOp::ReadWrite { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionKind {
    /// `parallel(N) { ... }`: N threads run the body concurrently, `tid` is
    /// the thread id. May contain `barrier;`.
    Parallel,
    /// `parallel_for(N) { ... }`: N loop iterations run concurrently, `i` is
    /// the iteration index. May carry an `ordered` clause and contain one
    /// ordered block.
    ParallelFor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    /// Thread count for `Parallel`, trip count for `ParallelFor`.
    pub count: u32,
    /// `parallel_for(N) ordered {`: the loop header carries the clause that
    /// permits ordered blocks in the body.
    pub has_ordered_clause: bool,
    pub header_loc: SourceLoc,
    /// Line of the region's closing `}`.
    pub footer_line: u32,
    pub body: Vec<Stmt>,
}

impl Region {
    /// Locations of the body statements that touch a shared array, in source
    /// order.
    pub fn shared_access_locs(&self) -> Vec<SourceLoc> {
        self.body
            .iter()
            .filter(|s| s.is_shared_access())
            .map(|s| s.loc)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayDecl {
    pub name: String,
    pub len: u64,
    pub loc: SourceLoc,
}

/// A parsed MiniMP program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub decls: Vec<ArrayDecl>,
    pub regions: Vec<Region>,
    /// Original source lines without terminators; emission joins them with
    /// `\n` and appends a trailing newline.
    pub lines: Vec<String>,
}

impl Program {
    /// Renders the program exactly as parsed.
    pub fn to_source(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }

    pub fn array_len(&self, name: &str) -> Option<u64> {
        self.decls.iter().find(|d| d.name == name).map(|d| d.len)
    }
}
