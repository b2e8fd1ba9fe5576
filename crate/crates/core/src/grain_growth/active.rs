//! Cyclic bounding boxes that bound where an order parameter can be nonzero.

/// A contiguous run of indices on a ring of size `n`, possibly wrapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicSpan {
    pub start: usize,
    pub len: usize,
}

impl CyclicSpan {
    pub fn full(n: usize) -> Self {
        CyclicSpan { start: 0, len: n }
    }

    pub fn is_full(&self, n: usize) -> bool {
        self.len >= n
    }

    pub fn dilate(&self, by: usize, n: usize) -> Self {
        let len = self.len + 2 * by;
        if len >= n {
            return CyclicSpan::full(n);
        }
        CyclicSpan {
            start: (self.start + n - by % n) % n,
            len,
        }
    }

    pub fn iter(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.start;
        (0..self.len.min(n)).map(move |k| (start + k) % n)
    }

    pub fn contains(&self, i: usize, n: usize) -> bool {
        (i + n - self.start) % n < self.len.min(n)
    }

    /// Smallest span covering every `true` entry; `None` when nothing is occupied.
    ///
    /// The span is the complement of the longest cyclic run of empty entries;
    /// among equal runs the one found first from index 0 wins.
    pub fn covering(occupied: &[bool]) -> Option<Self> {
        let n = occupied.len();
        let first = occupied.iter().position(|&o| o)?;
        // Walk the ring starting at an occupied index so gaps never straddle the origin.
        let mut best_gap_start = 0;
        let mut best_gap_len = 0;
        let mut run_start = 0;
        let mut run_len = 0;
        for k in 1..=n {
            let i = (first + k) % n;
            if occupied[i] {
                if run_len > best_gap_len {
                    best_gap_len = run_len;
                    best_gap_start = run_start;
                }
                run_len = 0;
            } else {
                if run_len == 0 {
                    run_start = i;
                }
                run_len += 1;
            }
        }
        if best_gap_len == 0 {
            return Some(CyclicSpan::full(n));
        }
        Some(CyclicSpan {
            start: (best_gap_start + best_gap_len) % n,
            len: n - best_gap_len,
        })
    }
}

/// Region of one grain outside of which its order parameter is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveBox {
    pub rows: CyclicSpan,
    pub cols: CyclicSpan,
}

impl ActiveBox {
    pub fn full(height: usize, width: usize) -> Self {
        ActiveBox {
            rows: CyclicSpan::full(height),
            cols: CyclicSpan::full(width),
        }
    }

    pub fn dilate(&self, by: usize, height: usize, width: usize) -> Self {
        ActiveBox {
            rows: self.rows.dilate(by, height),
            cols: self.cols.dilate(by, width),
        }
    }

    pub fn area(&self) -> usize {
        self.rows.len * self.cols.len
    }

    pub fn contains(&self, r: usize, c: usize, height: usize, width: usize) -> bool {
        self.rows.contains(r, height) && self.cols.contains(c, width)
    }

    /// Box over the pixels where `values` exceeds `threshold` in magnitude.
    pub fn covering(values: &[f64], height: usize, width: usize, threshold: f64) -> Option<Self> {
        let mut rows = vec![false; height];
        let mut cols = vec![false; width];
        for r in 0..height {
            for c in 0..width {
                if values[r * width + c].abs() > threshold {
                    rows[r] = true;
                    cols[c] = true;
                }
            }
        }
        Some(ActiveBox {
            rows: CyclicSpan::covering(&rows)?,
            cols: CyclicSpan::covering(&cols)?,
        })
    }
}
