use crate::error::{Error, Result};

/// A scalar field on an `height × width` grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::constant(height, width, 0.0)
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        Field2D {
            height,
            width,
            values: vec![value; height * width],
        }
    }

    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::Shape(format!(
                "{} values for a {height}x{width} field",
                values.len()
            )));
        }
        Ok(Field2D {
            height,
            width,
            values,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Field2D {
            height,
            width,
            values,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.width + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Cyclic shift: the value at `(r, c)` moves to `(r + dr, c + dc)` modulo the grid.
    pub fn rolled(&self, dr: usize, dc: usize) -> Field2D {
        let (h, w) = self.shape();
        Field2D::from_fn(h, w, |r, c| self.get((r + h - dr % h) % h, (c + w - dc % w) % w))
    }

    /// Values rounded through `f32`, matching what a stored tensor holds.
    pub fn to_f32_precision(&self) -> Field2D {
        Field2D {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }

    pub(crate) fn check_same_shape(&self, other: &Field2D) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }
}
