use serde::{Deserialize, Serialize};

/// A region of source text. Byte offsets are half-open (`start_byte..end_byte`);
/// line and column are 1-based, columns counted in characters. The end
/// position is the position of `end_byte`, i.e. one past the last character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Span {
    pub start_byte: usize,
    pub end_byte: usize,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

/// A line/column position paired with its byte offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub byte: usize,
    pub line: u32,
    pub col: u32,
}

impl Position {
    pub const START: Position = Position { byte: 0, line: 1, col: 1 };
}

impl Span {
    pub fn new(start: Position, end: Position) -> Self {
        debug_assert!(start.byte <= end.byte);
        Span {
            start_byte: start.byte,
            end_byte: end.byte,
            start_line: start.line,
            start_col: start.col,
            end_line: end.line,
            end_col: end.col,
        }
    }

    /// Zero-width span at `pos`.
    pub fn point(pos: Position) -> Self {
        Span::new(pos, pos)
    }

    pub fn start(&self) -> Position {
        Position { byte: self.start_byte, line: self.start_line, col: self.start_col }
    }

    pub fn end(&self) -> Position {
        Position { byte: self.end_byte, line: self.end_line, col: self.end_col }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn cover(&self, other: &Span) -> Span {
        let start = if self.start_byte <= other.start_byte { self.start() } else { other.start() };
        let end = if self.end_byte >= other.end_byte { self.end() } else { other.end() };
        Span::new(start, end)
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start_byte <= other.start_byte && other.end_byte <= self.end_byte
    }

    pub fn len(&self) -> usize {
        self.end_byte - self.start_byte
    }

    pub fn is_empty(&self) -> bool {
        self.start_byte == self.end_byte
    }

    /// The source text under this span.
    pub fn slice<'s>(&self, source: &'s str) -> &'s str {
        &source[self.start_byte..self.end_byte]
    }
}

/// Computes the position of a byte offset by scanning `source`. Used to check
/// that recorded line/column values agree with byte offsets.
pub fn position_of(source: &str, byte: usize) -> Position {
    let mut line = 1;
    let mut col = 1;
    for (idx, ch) in source.char_indices() {
        if idx >= byte {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    Position { byte, line, col }
}
