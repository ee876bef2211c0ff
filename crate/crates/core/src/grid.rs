//! Event frames on a fixed grid and the classical density classifier used as
//! the reference for every network run.
//!
//! A frame marks each cell of an R x C grid as holding an event or not. The
//! classifier labels every cell Core, Border, Noise, or NoEvent under a
//! Chebyshev neighborhood of radius `epsilon`, clipped at the grid border.
//! The count for a cell includes the cell itself.

use std::fmt;
use std::ops::RangeInclusive;

use rand::Rng;

use crate::error::{Error, Result};

/// Instance parameters: grid shape, neighborhood radius, density threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DbscanParams {
    rows: u32,
    cols: u32,
    epsilon: u32,
    min_pts: u32,
}

impl DbscanParams {
    /// Validates `rows, cols >= 1`, `epsilon >= 1`, and
    /// `1 <= min_pts <= (2*epsilon+1)^2`.
    pub fn new(rows: u32, cols: u32, epsilon: u32, min_pts: u32) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParams(format!(
                "grid must be non-empty, got {rows}x{cols}"
            )));
        }
        if epsilon == 0 {
            return Err(Error::InvalidParams("epsilon must be >= 1".into()));
        }
        let cap = (2 * epsilon + 1).pow(2);
        if min_pts == 0 || min_pts > cap {
            return Err(Error::InvalidParams(format!(
                "min_pts must be in 1..={cap} for epsilon {epsilon}, got {min_pts}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            epsilon,
            min_pts,
        })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn epsilon(&self) -> u32 {
        self.epsilon
    }

    pub fn min_pts(&self) -> u32 {
        self.min_pts
    }

    /// Largest possible neighborhood count, `(2*epsilon+1)^2`.
    pub fn neighborhood_capacity(&self) -> u32 {
        (2 * self.epsilon + 1).pow(2)
    }

    /// Same instance with rows and cols swapped.
    pub fn transposed(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            ..*self
        }
    }
}

/// The index window `[idx-eps, idx+eps]` clipped to `[0, len)`.
pub(crate) fn clipped_window(idx: u32, eps: u32, len: u32) -> RangeInclusive<u32> {
    debug_assert!(idx < len);
    let lo = idx.saturating_sub(eps);
    let hi = (idx + eps).min(len - 1);
    lo..=hi
}

/// A snapshot of event/no-event bits on an R x C grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFrame {
    rows: u32,
    cols: u32,
    bits: Vec<bool>,
}

impl EventFrame {
    pub fn new(rows: u32, cols: u32) -> Self {
        assert!(rows > 0 && cols > 0, "frame must be non-empty");
        Self {
            rows,
            cols,
            bits: vec![false; (rows * cols) as usize],
        }
    }

    /// Frame with the given cells set. Out-of-range cells are an error;
    /// duplicates are allowed and set the cell once.
    pub fn from_events(
        rows: u32,
        cols: u32,
        events: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let mut frame = Self::new(rows, cols);
        for (r, c) in events {
            if r >= rows || c >= cols {
                return Err(Error::InvalidParams(format!(
                    "event ({r}, {c}) outside {rows}x{cols} grid"
                )));
            }
            frame.set(r, c, true);
        }
        Ok(frame)
    }

    /// Frame where each cell independently holds an event with probability
    /// `density`.
    pub fn random<R: Rng>(rows: u32, cols: u32, density: f64, rng: &mut R) -> Self {
        let mut frame = Self::new(rows, cols);
        for bit in frame.bits.iter_mut() {
            *bit = rng.gen_bool(density);
        }
        frame
    }

    /// Frame whose bits are the little-endian binary digits of `code`,
    /// row-major. Enumerating `code` in `0..2^(rows*cols)` enumerates every
    /// frame exactly once.
    pub fn from_code(rows: u32, cols: u32, code: u64) -> Self {
        let n = (rows * cols) as usize;
        assert!(n <= 64, "code enumeration limited to 64 cells");
        let mut frame = Self::new(rows, cols);
        for i in 0..n {
            frame.bits[i] = (code >> i) & 1 == 1;
        }
        frame
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    fn idx(&self, r: u32, c: u32) -> usize {
        assert!(r < self.rows && c < self.cols, "cell ({r}, {c}) out of range");
        (r * self.cols + c) as usize
    }

    pub fn get(&self, r: u32, c: u32) -> bool {
        self.bits[self.idx(r, c)]
    }

    pub fn set(&mut self, r: u32, c: u32, value: bool) {
        let i = self.idx(r, c);
        self.bits[i] = value;
    }

    /// Cells holding events, row-major.
    pub fn events(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let cols = self.cols;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i as u32 / cols, i as u32 % cols))
    }

    pub fn event_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn transposed(&self) -> Self {
        let mut out = Self::new(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Mirror across the vertical axis (columns reversed).
    pub fn mirrored_cols(&self) -> Self {
        let mut out = Self::new(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, self.cols - 1 - c, self.get(r, c));
            }
        }
        out
    }

    /// Mirror across the horizontal axis (rows reversed).
    pub fn mirrored_rows(&self) -> Self {
        let mut out = Self::new(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(self.rows - 1 - r, c, self.get(r, c));
            }
        }
        out
    }

    /// Parses the frame text format.
    ///
    /// Sparse form: a header `R C` followed by one `r c` event per line
    /// (duplicates are ignored). Dense form: a header `R C dense` followed by
    /// R lines of C characters from `{0, 1}`. Blank lines are skipped and
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (header_line, header) = lines
            .next()
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: "empty frame document".into(),
            })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |s: &str, what: &str| -> Result<u32> {
            s.parse::<u32>().map_err(|_| Error::Parse {
                line: header_line,
                msg: format!("bad {what} in header: {s:?}"),
            })
        };
        let (rows, cols, dense) = match fields.as_slice() {
            [r, c] => (parse_dim(r, "rows")?, parse_dim(c, "cols")?, false),
            [r, c, "dense"] => (parse_dim(r, "rows")?, parse_dim(c, "cols")?, true),
            _ => {
                return Err(Error::Parse {
                    line: header_line,
                    msg: format!("expected header `R C` or `R C dense`, got {header:?}"),
                })
            }
        };
        if rows == 0 || cols == 0 {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("frame must be non-empty, got {rows}x{cols}"),
            });
        }

        let mut frame = Self::new(rows, cols);
        if dense {
            let mut r = 0;
            for (line_no, line) in lines {
                if r >= rows {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("more than {rows} rows in dense frame"),
                    });
                }
                if line.len() != cols as usize {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected {cols} cells, got {}", line.len()),
                    });
                }
                for (c, ch) in line.chars().enumerate() {
                    let bit = match ch {
                        '0' => false,
                        '1' => true,
                        _ => {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("expected 0 or 1, got {ch:?}"),
                            })
                        }
                    };
                    frame.set(r, c as u32, bit);
                }
                r += 1;
            }
            if r != rows {
                return Err(Error::Parse {
                    line: text.lines().count(),
                    msg: format!("dense frame has {r} rows, header says {rows}"),
                });
            }
        } else {
            for (line_no, line) in lines {
                let mut it = line.split_whitespace();
                let (Some(rs), Some(cs), None) = (it.next(), it.next(), it.next()) else {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected `r c`, got {line:?}"),
                    });
                };
                let parse_coord = |s: &str| -> Result<u32> {
                    s.parse::<u32>().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad coordinate {s:?}"),
                    })
                };
                let (r, c) = (parse_coord(rs)?, parse_coord(cs)?);
                if r >= rows || c >= cols {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("event ({r}, {c}) outside {rows}x{cols} grid"),
                    });
                }
                frame.set(r, c, true);
            }
        }
        Ok(frame)
    }

    /// Sparse text form: header plus one event per line, row-major.
    pub fn to_sparse_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for (r, c) in self.events() {
            out.push_str(&format!("{r} {c}\n"));
        }
        out
    }

    /// Dense text form: `R C dense` plus R lines of 0/1 characters.
    pub fn to_dense_text(&self) -> String {
        let mut out = format!("{} {} dense\n", self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(if self.get(r, c) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Per-cell classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Core,
    Border,
    Noise,
    NoEvent,
}

impl Label {
    pub fn glyph(&self) -> char {
        match self {
            Label::Core => 'C',
            Label::Border => 'B',
            Label::Noise => 'N',
            Label::NoEvent => '.',
        }
    }

    pub fn from_glyph(ch: char) -> Option<Self> {
        match ch {
            'C' => Some(Label::Core),
            'B' => Some(Label::Border),
            'N' => Some(Label::Noise),
            '.' => Some(Label::NoEvent),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Label::Core => "Core",
            Label::Border => "Border",
            Label::Noise => "Noise",
            Label::NoEvent => "NoEvent",
        };
        f.write_str(name)
    }
}

/// Labels for every cell of an R x C grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    rows: u32,
    cols: u32,
    labels: Vec<Label>,
}

impl LabelGrid {
    pub fn new(rows: u32, cols: u32) -> Self {
        assert!(rows > 0 && cols > 0, "label grid must be non-empty");
        Self {
            rows,
            cols,
            labels: vec![Label::NoEvent; (rows * cols) as usize],
        }
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn get(&self, r: u32, c: u32) -> Label {
        assert!(r < self.rows && c < self.cols, "cell ({r}, {c}) out of range");
        self.labels[(r * self.cols + c) as usize]
    }

    pub fn set(&mut self, r: u32, c: u32, label: Label) {
        assert!(r < self.rows && c < self.cols, "cell ({r}, {c}) out of range");
        self.labels[(r * self.cols + c) as usize] = label;
    }

    pub fn transposed(&self) -> Self {
        let mut out = Self::new(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Cells whose labels differ, as `(r, c, self_label, other_label)`.
    pub fn diff(&self, other: &LabelGrid) -> Vec<(u32, u32, Label, Label)> {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "cannot diff {}x{} against {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let (a, b) = (self.get(r, c), other.get(r, c));
                if a != b {
                    out.push((r, c, a, b));
                }
            }
        }
        out
    }

    /// Grid rendered as R lines of `C`, `B`, `N`, `.` glyphs.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c).glyph());
            }
            out.push('\n');
        }
        out
    }

    /// Machine form: `R C labels` header, then the rendered rows.
    pub fn to_text(&self) -> String {
        format!("{} {} labels\n{}", self.rows, self.cols, self.render())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (header_line, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty label document".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [r, c, "labels"] = fields.as_slice() else {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("expected header `R C labels`, got {header:?}"),
            });
        };
        let parse_dim = |s: &str| -> Result<u32> {
            s.parse::<u32>().map_err(|_| Error::Parse {
                line: header_line,
                msg: format!("bad dimension {s:?}"),
            })
        };
        let (rows, cols) = (parse_dim(r)?, parse_dim(c)?);
        if rows == 0 || cols == 0 {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("label grid must be non-empty, got {rows}x{cols}"),
            });
        }
        let mut grid = Self::new(rows, cols);
        let mut r = 0;
        for (line_no, line) in lines {
            if r >= rows {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("more than {rows} label rows"),
                });
            }
            if line.len() != cols as usize {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {cols} labels, got {}", line.len()),
                });
            }
            for (c, ch) in line.chars().enumerate() {
                let label = Label::from_glyph(ch).ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("unknown label glyph {ch:?}"),
                })?;
                grid.set(r, c as u32, label);
            }
            r += 1;
        }
        if r != rows {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("label grid has {r} rows, header says {rows}"),
            });
        }
        Ok(grid)
    }
}

/// Number of events in the Chebyshev-`epsilon` neighborhood of `(r, c)`,
/// clipped at the grid border. The cell itself counts when it holds an event.
pub fn neighborhood_count(frame: &EventFrame, r: u32, c: u32, epsilon: u32) -> u32 {
    let mut count = 0;
    for i in clipped_window(r, epsilon, frame.rows()) {
        for j in clipped_window(c, epsilon, frame.cols()) {
            if frame.get(i, j) {
                count += 1;
            }
        }
    }
    count
}

/// Classical reference classifier.
///
/// A cell is Core if it holds an event and its neighborhood count is at least
/// `min_pts`; Border if it holds an event, is not Core, and some *other* cell
/// in its neighborhood is Core; Noise if it holds an event and neither holds;
/// NoEvent otherwise.
pub fn classify(frame: &EventFrame, params: &DbscanParams) -> Result<LabelGrid> {
    if frame.rows() != params.rows() || frame.cols() != params.cols() {
        return Err(Error::DimsMismatch {
            expected_rows: params.rows(),
            expected_cols: params.cols(),
            got_rows: frame.rows(),
            got_cols: frame.cols(),
        });
    }
    let (rows, cols, eps) = (params.rows(), params.cols(), params.epsilon());

    let mut core = vec![false; (rows * cols) as usize];
    for r in 0..rows {
        for c in 0..cols {
            if frame.get(r, c) && neighborhood_count(frame, r, c, eps) >= params.min_pts() {
                core[(r * cols + c) as usize] = true;
            }
        }
    }

    let mut labels = LabelGrid::new(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if !frame.get(r, c) {
                continue;
            }
            let label = if core[(r * cols + c) as usize] {
                Label::Core
            } else {
                let mut near_core = false;
                'scan: for i in clipped_window(r, eps, rows) {
                    for j in clipped_window(c, eps, cols) {
                        if (i, j) != (r, c) && core[(i * cols + j) as usize] {
                            near_core = true;
                            break 'scan;
                        }
                    }
                }
                if near_core {
                    Label::Border
                } else {
                    Label::Noise
                }
            };
            labels.set(r, c, label);
        }
    }
    Ok(labels)
}
