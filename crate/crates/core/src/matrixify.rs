//! Page and Hankel matrix transforms of channel windows.
//!
//! A Page matrix places non-overlapping length-`L` segments side by side as
//! columns, so `window[j*L + i]` lands at `(i, j)`. A Hankel matrix uses
//! every overlapping segment: `(i, j) = window[i + j]`. Several channels are
//! stacked by concatenating their blocks columnwise in dataset order; the
//! block layout is kept so the estimate can be reshaped back per channel.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Page,
    Hankel,
}

impl Variant {
    /// Columns one channel window of length `window` occupies.
    pub fn block_columns(self, window: usize, rows: usize) -> usize {
        match self {
            Variant::Page => window / rows,
            Variant::Hankel => window + 1 - rows,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Page => "page",
            Variant::Hankel => "hankel",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "page" => Ok(Variant::Page),
            "hankel" => Ok(Variant::Hankel),
            other => Err(Error::config(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub channel_id: String,
    pub columns: Range<usize>,
    /// Index of the window's first sample on the channel's time base.
    pub window_start: usize,
}

/// A Page or Hankel matrix of one or more channel windows.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedMatrix {
    entries: DMatrix<f64>,
    blocks: Vec<BlockLayout>,
    variant: Variant,
    window_len: usize,
}

/// A channel window recovered from a [`StackedMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelWindow {
    pub channel_id: String,
    pub window_start: usize,
    pub values: Vec<f64>,
}

fn check_rows(rows: usize) -> Result<()> {
    if rows <= 1 {
        return Err(Error::config(format!(
            "row count L must exceed 1, got {rows}"
        )));
    }
    Ok(())
}

/// Page matrix of one window. Requires `L > 1` and `L` dividing the window.
pub fn page_matrix(window: &[f64], rows: usize) -> Result<StackedMatrix> {
    check_rows(rows)?;
    if window.is_empty() || !window.len().is_multiple_of(rows) {
        return Err(Error::shape(format!(
            "window length {} is not a positive multiple of L={rows}",
            window.len()
        )));
    }
    let cols = window.len() / rows;
    Ok(StackedMatrix {
        entries: DMatrix::from_column_slice(rows, cols, window),
        blocks: vec![BlockLayout {
            channel_id: String::new(),
            columns: 0..cols,
            window_start: 0,
        }],
        variant: Variant::Page,
        window_len: window.len(),
    })
}

/// Hankel matrix of one window. Requires `len >= L > 1`.
pub fn hankel_matrix(window: &[f64], rows: usize) -> Result<StackedMatrix> {
    check_rows(rows)?;
    if window.len() < rows {
        return Err(Error::shape(format!(
            "window length {} is shorter than L={rows}",
            window.len()
        )));
    }
    let cols = window.len() + 1 - rows;
    Ok(StackedMatrix {
        entries: DMatrix::from_fn(rows, cols, |i, j| window[i + j]),
        blocks: vec![BlockLayout {
            channel_id: String::new(),
            columns: 0..cols,
            window_start: 0,
        }],
        variant: Variant::Hankel,
        window_len: window.len(),
    })
}

pub fn matrixify(window: &[f64], rows: usize, variant: Variant) -> Result<StackedMatrix> {
    match variant {
        Variant::Page => page_matrix(window, rows),
        Variant::Hankel => hankel_matrix(window, rows),
    }
}

/// Columnwise concatenation in the order given. Every part must share `L`,
/// the variant and the window length.
pub fn stack(parts: Vec<StackedMatrix>) -> Result<StackedMatrix> {
    let first = parts
        .first()
        .ok_or_else(|| Error::shape("nothing to stack"))?;
    let (rows, variant, window_len) = (first.rows(), first.variant, first.window_len);
    for p in &parts {
        if p.rows() != rows || p.variant != variant || p.window_len != window_len {
            return Err(Error::shape(format!(
                "cannot stack {} {}x{} (T={}) with {} {}x{} (T={})",
                p.variant,
                p.rows(),
                p.cols(),
                p.window_len,
                variant,
                rows,
                first.cols(),
                window_len
            )));
        }
    }
    if parts.len() == 1 {
        return Ok(parts.into_iter().next().unwrap());
    }
    let total: usize = parts.iter().map(StackedMatrix::cols).sum();
    let mut data = Vec::with_capacity(rows * total);
    let mut blocks = Vec::new();
    let mut offset = 0;
    for p in parts {
        data.extend_from_slice(p.entries.as_slice());
        for b in p.blocks {
            let width = b.columns.len();
            blocks.push(BlockLayout {
                columns: offset..offset + width,
                ..b
            });
            offset += width;
        }
    }
    Ok(StackedMatrix {
        entries: DMatrix::from_vec(rows, total, data),
        blocks,
        variant,
        window_len,
    })
}

/// Stacked matrix of several labelled channel windows sharing one start index.
pub fn stack_windows<'a, I>(
    windows: I,
    rows: usize,
    variant: Variant,
    window_start: usize,
) -> Result<StackedMatrix>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let parts = windows
        .into_iter()
        .map(|(id, w)| Ok(matrixify(w, rows, variant)?.labelled(id, window_start)))
        .collect::<Result<Vec<_>>>()?;
    stack(parts)
}

impl StackedMatrix {
    /// Assemble from parts, validating the layout.
    pub fn from_parts(
        entries: DMatrix<f64>,
        blocks: Vec<BlockLayout>,
        variant: Variant,
        window_len: usize,
    ) -> Result<Self> {
        let m = Self {
            entries,
            blocks,
            variant,
            window_len,
        };
        m.validate()?;
        Ok(m)
    }

    /// Name the (single) block and set its window start.
    pub fn labelled(mut self, channel_id: impl Into<String>, window_start: usize) -> Self {
        let id = channel_id.into();
        for b in &mut self.blocks {
            b.channel_id = id.clone();
            b.window_start = window_start;
        }
        self
    }

    /// Same layout, new entries (e.g. a denoised estimate).
    pub fn with_entries(&self, entries: DMatrix<f64>) -> Result<Self> {
        if entries.shape() != self.entries.shape() {
            return Err(Error::shape(format!(
                "entries are {:?}, layout expects {:?}",
                entries.shape(),
                self.entries.shape()
            )));
        }
        Ok(Self {
            entries,
            blocks: self.blocks.clone(),
            variant: self.variant,
            window_len: self.window_len,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn blocks(&self) -> &[BlockLayout] {
        &self.blocks
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Window length `T` per channel.
    pub fn window_len(&self) -> usize {
        self.window_len
    }

    fn validate(&self) -> Result<()> {
        let rows = self.rows();
        check_rows(rows)?;
        if self.variant == Variant::Page && !self.window_len.is_multiple_of(rows) {
            return Err(Error::shape(format!(
                "Page layout with T={} not divisible by L={rows}",
                self.window_len
            )));
        }
        if self.window_len < rows {
            return Err(Error::shape("window shorter than L"));
        }
        let width = self.variant.block_columns(self.window_len, rows);
        let mut next = 0;
        for b in &self.blocks {
            if b.columns.start != next || b.columns.len() != width {
                return Err(Error::shape(format!(
                    "block `{}` spans columns {:?}, expected {}..{}",
                    b.channel_id,
                    b.columns,
                    next,
                    next + width
                )));
            }
            next = b.columns.end;
        }
        if next != self.cols() || self.blocks.is_empty() {
            return Err(Error::shape(format!(
                "blocks cover {next} columns, matrix has {}",
                self.cols()
            )));
        }
        Ok(())
    }
}

/// Undo the transform block by block. Page blocks are unstacked column by
/// column; Hankel blocks are mapped back by averaging each anti-diagonal.
pub fn reshape_back(matrix: &StackedMatrix) -> Result<Vec<ChannelWindow>> {
    matrix.validate()?;
    let rows = matrix.rows();
    let t = matrix.window_len;
    let m = &matrix.entries;
    Ok(matrix
        .blocks
        .iter()
        .map(|b| {
            let values = match matrix.variant {
                Variant::Page => {
                    let start = b.columns.start * rows;
                    m.as_slice()[start..start + t].to_vec()
                }
                Variant::Hankel => {
                    let mut sums = vec![0.0; t];
                    let mut counts = vec![0u32; t];
                    for (j, col) in b.columns.clone().enumerate() {
                        for i in 0..rows {
                            sums[i + j] += m[(i, col)];
                            counts[i + j] += 1;
                        }
                    }
                    sums.iter()
                        .zip(&counts)
                        .map(|(s, &c)| s / c as f64)
                        .collect()
                }
            };
            ChannelWindow {
                channel_id: b.channel_id.clone(),
                window_start: b.window_start,
                values,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn page_columns_are_segments() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(
            page_matrix(&w, 2).unwrap().entries(),
            &dmatrix![1.0, 3.0, 5.0; 2.0, 4.0, 6.0]
        );
        assert_eq!(
            page_matrix(&w, 3).unwrap().entries(),
            &dmatrix![1.0, 4.0; 2.0, 5.0; 3.0, 6.0]
        );
    }

    #[test]
    fn page_dimensions() {
        let w = vec![0.0; 30];
        let p = page_matrix(&w, 5).unwrap();
        assert_eq!((p.rows(), p.cols()), (5, 6));
    }

    #[test]
    fn page_errors() {
        assert!(matches!(page_matrix(&[1.0; 6], 4), Err(Error::Shape(_))));
        assert!(matches!(page_matrix(&[1.0; 6], 1), Err(Error::Config(_))));
        assert!(matches!(page_matrix(&[], 2), Err(Error::Shape(_))));
    }

    #[test]
    fn hankel_entries_and_dimensions() {
        let h = hankel_matrix(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(h.entries(), &dmatrix![1.0, 2.0, 3.0; 2.0, 3.0, 4.0]);
        let long = hankel_matrix(&[0.0; 30], 5).unwrap();
        assert_eq!((long.rows(), long.cols()), (5, 26));
        let short = hankel_matrix(&[0.0; 10], 5).unwrap();
        assert_eq!((short.rows(), short.cols()), (5, 6));
        assert!(matches!(hankel_matrix(&[1.0; 3], 4), Err(Error::Shape(_))));
    }

    #[test]
    fn stacking_two_blocks() {
        let a = page_matrix(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2)
            .unwrap()
            .labelled("a", 0);
        let b = page_matrix(&[7.0, 8.0, 9.0, 10.0, 11.0, 12.0], 2)
            .unwrap()
            .labelled("b", 0);
        let s = stack(vec![a, b]).unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 6));
        assert_eq!(
            s.entries().row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0]
        );
        assert_eq!(s.blocks()[1].columns, 3..6);
        assert_eq!(s.blocks()[1].channel_id, "b");
    }

    #[test]
    fn stacking_one_block_is_identity() {
        let a = page_matrix(&[1.0, 2.0, 3.0, 4.0], 2)
            .unwrap()
            .labelled("a", 3);
        assert_eq!(stack(vec![a.clone()]).unwrap(), a);
    }

    #[test]
    fn stacking_mismatched_rows_fails() {
        let a = page_matrix(&[1.0; 6], 2).unwrap();
        let b = page_matrix(&[1.0; 6], 3).unwrap();
        assert!(matches!(stack(vec![a, b]), Err(Error::Shape(_))));
        let p = page_matrix(&[1.0; 4], 2).unwrap();
        let h = hankel_matrix(&[1.0; 4], 2).unwrap();
        assert!(matches!(stack(vec![p, h]), Err(Error::Shape(_))));
    }

    #[test]
    fn paper_scale_stacked_shape() {
        // N = 30 channels, T = 54000, L = 10: 30 * 5400 columns
        let w = vec![0.5; 54_000];
        let windows: Vec<(&str, &[f64])> = (0..30).map(|_| ("c", w.as_slice())).collect();
        let s = stack_windows(windows, 10, Variant::Page, 0).unwrap();
        assert_eq!((s.rows(), s.cols()), (10, 162_000));
    }

    #[test]
    fn hankel_anti_diagonal_average() {
        let m = StackedMatrix::from_parts(
            dmatrix![1.0, 2.0, 3.0; 4.0, 5.0, 6.0],
            vec![BlockLayout {
                channel_id: "x".into(),
                columns: 0..3,
                window_start: 0,
            }],
            Variant::Hankel,
            4,
        )
        .unwrap();
        // oracle: mean of entries with i + j = t
        let mut oracle = vec![];
        for t in 0..4 {
            let mut acc = vec![];
            for i in 0..2 {
                for j in 0..3 {
                    if i + j == t {
                        acc.push(m.entries()[(i, j)]);
                    }
                }
            }
            oracle.push(acc.iter().sum::<f64>() / acc.len() as f64);
        }
        let back = reshape_back(&m).unwrap();
        assert_eq!(back[0].values, oracle);
        assert_eq!(back[0].values, vec![1.0, 3.0, 4.0, 6.0]);
    }

    #[test]
    fn hankel_unmodified_round_trip() {
        let h = hankel_matrix(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(
            reshape_back(&h).unwrap()[0].values,
            vec![1.0, 2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn corrupted_layout_is_rejected() {
        let bad = StackedMatrix::from_parts(
            DMatrix::zeros(2, 4),
            vec![BlockLayout {
                channel_id: "x".into(),
                columns: 0..3,
                window_start: 0,
            }],
            Variant::Page,
            6,
        );
        assert!(matches!(bad, Err(Error::Shape(_))));
        let m = page_matrix(&[1.0; 6], 2).unwrap();
        assert!(m.with_entries(DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn lrf_page_matrix_is_low_rank() {
        // f(t) = 1.8 f(t-1) - 0.81 f(t-2), order G = 2
        let mut f = vec![1.0, 1.0];
        for t in 2..60 {
            f.push(1.8 * f[t - 1] - 0.81 * f[t - 2]);
        }
        let p = page_matrix(&f, 5).unwrap();
        let sv = crate::testutil::singular_values(p.entries());
        let numerical_rank = sv.iter().filter(|&&s| s > 1e-8 * sv[0]).count();
        assert!(numerical_rank <= 3, "{sv:?}");
    }
}
