//! Discrete grids, axis-parallel rectangles, and prefix-sum integration.
//!
//! A [`GridFunction`] is a piecewise-constant function on a uniform grid over
//! a translated unit box in dimension `n` (1 to 3). Axis `j` is split into
//! `2^{L_j}` cells of width `2^{-L_j}`, so every cell has volume
//! `prod_j 2^{-L_j}`. Values are stored row-major with the last axis
//! contiguous.
//!
//! Rectangles come in two flavours: [`GridRectangle`] (arbitrary half-open
//! cell ranges per axis) and [`DyadicRectangle`] (per-axis dyadic intervals
//! `[k 2^{-l}, (k+1) 2^{-l})`). Integrals over either are answered in
//! `O(2^n)` by a [`SumTable`], an inclusion–exclusion prefix-sum table built
//! once per function with compensated accumulation.

mod io;

use crate::error::{Error, Result};

pub use io::{read_grid, write_grid_binary, write_grid_text};

/// Maximum supported dimension.
pub const MAX_DIMS: usize = 3;

/// Maximum per-axis resolution exponent accepted at construction.
pub const MAX_LEVEL: u8 = 16;

/// Running sum with Neumaier compensation; accurate for long accumulations.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Piecewise-constant function on a uniform grid over a translated unit box.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    levels: Vec<u8>,
    origin: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Builds a grid function from per-axis resolution exponents, a box
    /// origin, and row-major cell values (`values.len()` must equal the total
    /// cell count and every value must be finite).
    pub fn new(levels: &[u8], origin: &[f64], values: Vec<f64>) -> Result<Self> {
        validate_levels(levels)?;
        if origin.len() != levels.len() {
            return Err(Error::ShapeMismatch(format!(
                "origin has {} entries for {} axes",
                origin.len(),
                levels.len()
            )));
        }
        let total = total_cells(levels);
        if values.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "expected {} cell values, got {}",
                total,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cell values must be finite, found {v}"
            )));
        }
        if let Some(o) = origin.iter().find(|o| !o.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "origin must be finite, found {o}"
            )));
        }
        Ok(Self {
            levels: levels.to_vec(),
            origin: origin.to_vec(),
            values,
        })
    }

    /// Constant function `c` on the unit box `[0,1)^n`.
    pub fn constant(levels: &[u8], c: f64) -> Result<Self> {
        validate_levels(levels)?;
        let total = total_cells(levels);
        Self::new(levels, &vec![0.0; levels.len()], vec![c; total])
    }

    /// Samples `f` at every cell center of the unit box grid.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(levels: &[u8], origin: &[f64], f: F) -> Result<Self> {
        validate_levels(levels)?;
        let n = levels.len();
        if origin.len() != n {
            return Err(Error::ShapeMismatch(
                "origin length must match levels length".into(),
            ));
        }
        let total = total_cells(levels);
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0u32; n];
        let mut center = vec![0.0f64; n];
        for lin in 0..total {
            decompose(levels, lin, &mut idx);
            for j in 0..n {
                center[j] = origin[j] + (idx[j] as f64 + 0.5) * cell_width_of(levels[j]);
            }
            values.push(f(&center));
        }
        Self::new(levels, origin, values)
    }

    pub fn dims(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Number of cells along axis `j`.
    pub fn cells(&self, j: usize) -> u32 {
        1u32 << self.levels[j]
    }

    pub fn total_cells(&self) -> usize {
        self.values.len()
    }

    /// Width of a cell along axis `j` (`2^{-L_j}`).
    pub fn cell_width(&self, j: usize) -> f64 {
        cell_width_of(self.levels[j])
    }

    /// Volume of one cell (`prod_j 2^{-L_j}`).
    pub fn cell_volume(&self) -> f64 {
        self.levels.iter().map(|&l| cell_width_of(l)).product()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row-major linear index of a multi-index (caller keeps it in range).
    pub fn linear_index(&self, idx: &[u32]) -> usize {
        linear_index(&self.levels, idx)
    }

    /// Multi-index of a row-major linear index.
    pub fn multi_index(&self, lin: usize, out: &mut [u32]) {
        decompose(&self.levels, lin, out);
    }

    pub fn value(&self, idx: &[u32]) -> f64 {
        self.values[self.linear_index(idx)]
    }

    pub fn set_value(&mut self, idx: &[u32], v: f64) {
        let lin = self.linear_index(idx);
        self.values[lin] = v;
    }

    /// Center coordinates of the cell with the given multi-index.
    pub fn cell_center(&self, idx: &[u32]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(j, &k)| self.origin[j] + (k as f64 + 0.5) * self.cell_width(j))
            .collect()
    }

    /// True when `other` lives on the same grid (levels and origin).
    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.levels == other.levels && self.origin == other.origin
    }

    /// New function with the same grid and `f` applied to every value.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction {
            levels: self.levels.clone(),
            origin: self.origin.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise absolute value.
    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Translate by whole cells with zero extension: the result at cell `i`
    /// is the value at `i - t` when that lies inside the box and 0 otherwise.
    pub fn translate(&self, t: &[i64]) -> Result<GridFunction> {
        if t.len() != self.dims() {
            return Err(Error::ShapeMismatch(
                "shift vector length must match dimension".into(),
            ));
        }
        let n = self.dims();
        let total = self.total_cells();
        let mut values = vec![0.0; total];
        let mut idx = vec![0u32; n];
        let mut src = vec![0u32; n];
        'cells: for (lin, slot) in values.iter_mut().enumerate() {
            decompose(&self.levels, lin, &mut idx);
            for j in 0..n {
                let s = idx[j] as i64 - t[j];
                if s < 0 || s >= self.cells(j) as i64 {
                    continue 'cells;
                }
                src[j] = s as u32;
            }
            *slot = self.value(&src);
        }
        Ok(GridFunction {
            levels: self.levels.clone(),
            origin: self.origin.clone(),
            values,
        })
    }

    /// Coarsens by one dyadic step on every axis: each new cell takes the
    /// average of the `2^n` cells it replaces (the conditional expectation
    /// on the coarser grid, so all coarse-aligned rectangle averages are
    /// preserved). Requires every `L_j >= 1`.
    pub fn coarsen(&self) -> Result<GridFunction> {
        if self.levels.contains(&0) {
            return Err(Error::InvalidArgument(
                "cannot coarsen a grid with a single cell on some axis".into(),
            ));
        }
        let n = self.dims();
        let new_levels: Vec<u8> = self.levels.iter().map(|&l| l - 1).collect();
        let total = total_cells(&new_levels);
        let mut values = vec![0.0f64; total];
        let inv = 1.0 / (1usize << n) as f64;
        let mut coarse = vec![0u32; n];
        let mut fine = vec![0u32; n];
        for (lin, slot) in values.iter_mut().enumerate() {
            decompose(&new_levels, lin, &mut coarse);
            let mut acc = 0.0;
            for corner in 0..(1u32 << n) {
                for j in 0..n {
                    fine[j] = 2 * coarse[j] + ((corner >> j) & 1);
                }
                acc += self.value(&fine);
            }
            *slot = acc * inv;
        }
        GridFunction::new(&new_levels, &self.origin, values)
    }

    /// Integral of the function over the whole box (compensated sum).
    pub fn integral(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for &v in &self.values {
            acc.add(v);
        }
        acc.value() * self.cell_volume()
    }
}

/// Indicator function of a rectangle (1 on its cells, 0 elsewhere).
pub fn indicator(levels: &[u8], origin: &[f64], rect: &GridRectangle) -> Result<GridFunction> {
    if !rect.fits(levels) {
        return Err(Error::OutOfBounds(
            "indicator rectangle exceeds the grid".into(),
        ));
    }
    let n = levels.len();
    let total = total_cells(levels);
    let mut values = vec![0.0f64; total];
    let mut idx = vec![0u32; n];
    for (lin, slot) in values.iter_mut().enumerate() {
        decompose(levels, lin, &mut idx);
        if rect.contains_cell(&idx) {
            *slot = 1.0;
        }
    }
    GridFunction::new(levels, origin, values)
}

/// `∫ |f|^p w dx` over the whole box; `w = None` means Lebesgue measure.
pub fn weighted_power_integral(f: &GridFunction, p: f64, w: Option<&GridFunction>) -> Result<f64> {
    if let Some(w) = w {
        if !f.same_grid(w) {
            return Err(Error::ShapeMismatch(
                "function and weight must share a grid".into(),
            ));
        }
    }
    let mut acc = CompensatedSum::new();
    for (i, &v) in f.values().iter().enumerate() {
        let wv = w.map_or(1.0, |w| w.values()[i]);
        acc.add(v.abs().powf(p) * wv);
    }
    Ok(acc.value() * f.cell_volume())
}

fn validate_levels(levels: &[u8]) -> Result<()> {
    if levels.is_empty() || levels.len() > MAX_DIMS {
        return Err(Error::InvalidArgument(format!(
            "dimension must be 1..={MAX_DIMS}, got {}",
            levels.len()
        )));
    }
    if levels.iter().any(|&l| l > MAX_LEVEL) {
        return Err(Error::InvalidArgument(format!(
            "resolution exponent exceeds {MAX_LEVEL}"
        )));
    }
    let bits: u32 = levels.iter().map(|&l| l as u32).sum();
    if bits > 26 {
        return Err(Error::InvalidArgument(format!(
            "grid with 2^{bits} cells is larger than supported"
        )));
    }
    Ok(())
}

fn cell_width_of(level: u8) -> f64 {
    (0.5f64).powi(level as i32)
}

fn total_cells(levels: &[u8]) -> usize {
    levels.iter().map(|&l| 1usize << l).product()
}

fn linear_index(levels: &[u8], idx: &[u32]) -> usize {
    let mut lin = 0usize;
    for (j, &k) in idx.iter().enumerate() {
        lin = (lin << levels[j]) + k as usize;
    }
    lin
}

fn decompose(levels: &[u8], mut lin: usize, out: &mut [u32]) {
    for j in (0..levels.len()).rev() {
        let cells = 1usize << levels[j];
        out[j] = (lin & (cells - 1)) as u32;
        lin >>= levels[j];
    }
}

/// Axis-parallel rectangle given by half-open per-axis cell ranges
/// `[a_j, b_j)` with `a_j < b_j` (in cell units of some grid).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridRectangle {
    ranges: Vec<(u32, u32)>,
}

impl GridRectangle {
    pub fn new(ranges: Vec<(u32, u32)>) -> Result<Self> {
        if ranges.is_empty() || ranges.len() > MAX_DIMS {
            return Err(Error::InvalidArgument(
                "rectangle dimension must be 1..=3".into(),
            ));
        }
        if ranges.iter().any(|&(a, b)| a >= b) {
            return Err(Error::InvalidArgument(
                "rectangle ranges must satisfy a < b".into(),
            ));
        }
        Ok(Self { ranges })
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[(u32, u32)] {
        &self.ranges
    }

    /// Number of grid cells covered.
    pub fn cell_count(&self) -> usize {
        self.ranges.iter().map(|&(a, b)| (b - a) as usize).product()
    }

    /// Lebesgue measure on a grid with the given per-axis exponents.
    pub fn measure(&self, levels: &[u8]) -> f64 {
        self.ranges
            .iter()
            .zip(levels)
            .map(|(&(a, b), &l)| (b - a) as f64 * cell_width_of(l))
            .product()
    }

    pub fn contains_cell(&self, idx: &[u32]) -> bool {
        self.ranges
            .iter()
            .zip(idx)
            .all(|(&(a, b), &k)| a <= k && k < b)
    }

    /// True when the ranges fit inside a grid with the given exponents.
    pub fn fits(&self, levels: &[u8]) -> bool {
        self.dims() == levels.len()
            && self
                .ranges
                .iter()
                .zip(levels)
                .all(|(&(_, b), &l)| b <= (1u32 << l))
    }
}

/// Dyadic rectangle: per axis a level `l_j` and an index `k_j < 2^{l_j}`,
/// describing the interval `[k_j 2^{-l_j}, (k_j+1) 2^{-l_j})` of the box.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicRectangle {
    axes: Vec<(u8, u32)>,
}

impl DyadicRectangle {
    pub fn new(axes: Vec<(u8, u32)>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIMS {
            return Err(Error::InvalidArgument(
                "dyadic rectangle dimension must be 1..=3".into(),
            ));
        }
        for &(l, k) in &axes {
            if l > MAX_LEVEL {
                return Err(Error::InvalidArgument(
                    "dyadic level exceeds supported maximum".into(),
                ));
            }
            if k >= (1u32 << l) {
                return Err(Error::OutOfBounds(format!(
                    "dyadic index {k} out of range at level {l}"
                )));
            }
        }
        Ok(Self { axes })
    }

    /// The whole box at dimension `n` (level 0 on every axis).
    pub fn root(n: usize) -> Result<Self> {
        Self::new(vec![(0, 0); n])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[(u8, u32)] {
        &self.axes
    }

    /// Lebesgue measure `prod_j 2^{-l_j}` (grid-independent).
    pub fn measure(&self) -> f64 {
        self.axes.iter().map(|&(l, _)| cell_width_of(l)).product()
    }

    /// Cell ranges on a grid with exponents `levels` (each `l_j <= L_j`).
    pub fn to_grid_rectangle(&self, levels: &[u8]) -> Result<GridRectangle> {
        if levels.len() != self.dims() {
            return Err(Error::ShapeMismatch(
                "dyadic rectangle dimension must match grid".into(),
            ));
        }
        let mut ranges = Vec::with_capacity(self.dims());
        for (j, &(l, k)) in self.axes.iter().enumerate() {
            if l > levels[j] {
                return Err(Error::OutOfBounds(format!(
                    "dyadic level {l} finer than grid level {} on axis {j}",
                    levels[j]
                )));
            }
            let span = 1u32 << (levels[j] - l);
            ranges.push((k * span, (k + 1) * span));
        }
        GridRectangle::new(ranges)
    }

    /// True when `other` is contained in `self` (axis-wise dyadic nesting).
    pub fn contains(&self, other: &DyadicRectangle) -> bool {
        self.dims() == other.dims()
            && self
                .axes
                .iter()
                .zip(&other.axes)
                .all(|(&(l, k), &(lo, ko))| lo >= l && (ko >> (lo - l)) == k)
    }

    /// Compact display form `l1,k1;l2,k2;...` used in reports and files.
    pub fn display_key(&self) -> String {
        self.axes
            .iter()
            .map(|&(l, k)| format!("{l},{k}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Parses the form produced by [`DyadicRectangle::display_key`].
    pub fn parse_key(s: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for part in s.split(';') {
            let (l, k) = part
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad dyadic axis `{part}`")))?;
            let l: u8 = l
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad dyadic level `{l}`")))?;
            let k: u32 = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad dyadic index `{k}`")))?;
            axes.push((l, k));
        }
        DyadicRectangle::new(axes)
    }
}

/// All dyadic rectangles of the box that are unions of grid cells, i.e. with
/// per-axis levels `l_j <= L_j`. The count is `prod_j (2^{L_j+1} - 1)`.
pub fn enumerate_dyadic(levels: &[u8]) -> Vec<DyadicRectangle> {
    let per_axis: Vec<Vec<(u8, u32)>> = levels
        .iter()
        .map(|&max_l| {
            let mut v = Vec::new();
            for l in 0..=max_l {
                for k in 0..(1u32 << l) {
                    v.push((l, k));
                }
            }
            v
        })
        .collect();
    cartesian(&per_axis)
        .into_iter()
        .map(|axes| DyadicRectangle { axes })
        .collect()
}

/// All grid-cell-aligned rectangles: per axis every pair `0 <= a < b <= 2^{L_j}`.
/// The count is `prod_j C(2^{L_j}+1, 2)`.
pub fn enumerate_rectangles(levels: &[u8]) -> Vec<GridRectangle> {
    let per_axis: Vec<Vec<(u32, u32)>> = levels
        .iter()
        .map(|&l| {
            let cells = 1u32 << l;
            let mut v = Vec::new();
            for a in 0..cells {
                for b in (a + 1)..=cells {
                    v.push((a, b));
                }
            }
            v
        })
        .collect();
    cartesian(&per_axis)
        .into_iter()
        .map(|ranges| GridRectangle { ranges })
        .collect()
}

fn cartesian<T: Clone>(per_axis: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for axis in per_axis {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for item in axis {
                let mut row = prefix.clone();
                row.push(item.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// Prefix-sum (summed-area) table answering rectangle integrals in `O(2^n)`.
///
/// Entry `(i_1,...,i_n)` of the table holds the integral of the function over
/// the cell block `[0,i_1) x ... x [0,i_n)`, so the integral over an
/// arbitrary cell range follows by inclusion–exclusion over the `2^n`
/// corners. Table construction runs one compensated prefix pass per axis.
#[derive(Clone, Debug)]
pub struct SumTable {
    levels: Vec<u8>,
    /// Per-axis table extents (`cells + 1`; index 0 is the zero border).
    dims: Vec<usize>,
    strides: Vec<usize>,
    data: Vec<f64>,
}

impl SumTable {
    /// Builds the table for `f` (values are weighted by the cell volume, so
    /// queries return true integrals, not cell sums).
    pub fn build(f: &GridFunction) -> SumTable {
        let n = f.dims();
        let levels = f.levels().to_vec();
        let dims: Vec<usize> = (0..n).map(|j| f.cells(j) as usize + 1).collect();
        let mut strides = vec![1usize; n];
        for j in (0..n.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * dims[j + 1];
        }
        let total: usize = dims.iter().product();
        let mut data = vec![0.0f64; total];

        // Seed with per-cell masses at offset (+1, ..., +1).
        let vol = f.cell_volume();
        let mut idx = vec![0u32; n];
        for (lin, &v) in f.values().iter().enumerate() {
            decompose(&levels, lin, &mut idx);
            let mut pos = 0usize;
            for j in 0..n {
                pos += (idx[j] as usize + 1) * strides[j];
            }
            data[pos] = v * vol;
        }

        // One compensated prefix pass along each axis.
        for axis in 0..n {
            let axis_len = dims[axis];
            let stride = strides[axis];
            // Iterate over all lines parallel to `axis`.
            let line_count = total / axis_len;
            for line in 0..line_count {
                // Map the line number to the base offset of that line.
                let mut rem = line;
                let mut base = 0usize;
                for j in 0..n {
                    if j == axis {
                        continue;
                    }
                    let extent = dims[j];
                    base += (rem % extent) * strides[j];
                    rem /= extent;
                }
                let mut acc = CompensatedSum::new();
                for i in 0..axis_len {
                    acc.add(data[base + i * stride]);
                    data[base + i * stride] = acc.value();
                }
            }
        }

        SumTable {
            levels,
            dims,
            strides,
            data,
        }
    }

    pub fn dims(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    /// Integral over a rectangle of this grid (error if it does not fit).
    pub fn rect_integral(&self, rect: &GridRectangle) -> Result<f64> {
        if rect.dims() != self.dims() {
            return Err(Error::ShapeMismatch(
                "rectangle dimension must match table".into(),
            ));
        }
        if !rect.fits(&self.levels) {
            return Err(Error::OutOfBounds(format!(
                "rectangle {:?} exceeds grid extents",
                rect.ranges()
            )));
        }
        let lo: Vec<i64> = rect.ranges().iter().map(|&(a, _)| a as i64).collect();
        let hi: Vec<i64> = rect.ranges().iter().map(|&(_, b)| b as i64).collect();
        Ok(self.block_sum(&lo, &hi))
    }

    /// Integral over a dyadic rectangle of this grid.
    pub fn dyadic_integral(&self, rect: &DyadicRectangle) -> Result<f64> {
        self.rect_integral(&rect.to_grid_rectangle(&self.levels)?)
    }

    /// Integral over `[lo_j, hi_j)` in cell units, silently clipped to the
    /// box; empty intersections give 0. This is the zero-extension view used
    /// for integrals of translated functions.
    pub fn clipped_integral(&self, lo: &[i64], hi: &[i64]) -> f64 {
        let mut clo = [0i64; MAX_DIMS];
        let mut chi = [0i64; MAX_DIMS];
        for j in 0..self.dims() {
            let cells = (self.dims[j] - 1) as i64;
            clo[j] = lo[j].max(0);
            chi[j] = hi[j].min(cells);
            if clo[j] >= chi[j] {
                return 0.0;
            }
        }
        self.block_sum(&clo[..self.dims()], &chi[..self.dims()])
    }

    /// Integral over the whole box.
    pub fn total(&self) -> f64 {
        let lo = vec![0i64; self.dims()];
        let hi: Vec<i64> = self.dims.iter().map(|&d| d as i64 - 1).collect();
        self.block_sum(&lo, &hi)
    }

    /// Inclusion–exclusion over the 2^n corners of `[lo, hi)`.
    fn block_sum(&self, lo: &[i64], hi: &[i64]) -> f64 {
        let n = self.dims();
        let mut sum = 0.0f64;
        for corner in 0..(1u32 << n) {
            let mut pos = 0usize;
            let mut parity = 0u32;
            for j in 0..n {
                let take_hi = corner & (1 << j) != 0;
                let c = if take_hi {
                    hi[j]
                } else {
                    parity += 1;
                    lo[j]
                };
                pos += c as usize * self.strides[j];
            }
            let term = self.data[pos];
            if parity.is_multiple_of(2) {
                sum += term;
            } else {
                sum -= term;
            }
        }
        sum
    }
}

/// Builds the prefix-sum table of `f` ([`SumTable::build`]).
pub fn prefix_sum_table(f: &GridFunction) -> SumTable {
    SumTable::build(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid() -> GridFunction {
        // 2-D grid, 4 x 2 cells, values 1..=8 row-major.
        GridFunction::new(&[2, 1], &[0.0, 0.0], (1..=8).map(f64::from).collect()).unwrap()
    }

    #[test]
    fn linear_index_round_trip() {
        let f = sample_grid();
        let mut idx = vec![0u32; 2];
        for lin in 0..f.total_cells() {
            f.multi_index(lin, &mut idx);
            assert_eq!(f.linear_index(&idx), lin);
        }
    }

    #[test]
    fn cell_geometry() {
        let f = sample_grid();
        assert_eq!(f.cells(0), 4);
        assert_eq!(f.cells(1), 2);
        assert_eq!(f.cell_volume(), 0.125);
        assert_eq!(f.cell_center(&[0, 0]), vec![0.125, 0.25]);
    }

    #[test]
    fn direct_summation_oracle_matches_sum_table() {
        // Oracle: integrate by looping over covered cells directly.
        let f = sample_grid();
        let table = SumTable::build(&f);
        let vol = f.cell_volume();
        for rect in enumerate_rectangles(f.levels()) {
            let mut direct = 0.0;
            let mut idx = vec![0u32; 2];
            for lin in 0..f.total_cells() {
                f.multi_index(lin, &mut idx);
                if rect.contains_cell(&idx) {
                    direct += f.values()[lin] * vol;
                }
            }
            let fast = table.rect_integral(&rect).unwrap();
            assert!(
                (fast - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "rect {:?}: table {fast} vs direct {direct}",
                rect.ranges()
            );
        }
    }

    #[test]
    fn clipped_integral_matches_translate() {
        let f = sample_grid();
        let table = SumTable::build(&f);
        for t0 in -4i64..=4 {
            for t1 in -2i64..=2 {
                let shifted = f.translate(&[t0, t1]).unwrap();
                let shifted_table = SumTable::build(&shifted);
                for rect in enumerate_rectangles(f.levels()) {
                    let expect = shifted_table.rect_integral(&rect).unwrap();
                    let lo: Vec<i64> = rect
                        .ranges()
                        .iter()
                        .zip([t0, t1])
                        .map(|(&(a, _), t)| a as i64 - t)
                        .collect();
                    let hi: Vec<i64> = rect
                        .ranges()
                        .iter()
                        .zip([t0, t1])
                        .map(|(&(_, b), t)| b as i64 - t)
                        .collect();
                    let got = table.clipped_integral(&lo, &hi);
                    assert!(
                        (got - expect).abs() <= 1e-12 * expect.abs().max(1.0),
                        "shift ({t0},{t1}) rect {:?}",
                        rect.ranges()
                    );
                }
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        // Dyadic: prod (2^{L_j+1} - 1); all rectangles: prod C(2^{L_j}+1, 2).
        assert_eq!(enumerate_dyadic(&[3]).len(), 15);
        assert_eq!(enumerate_dyadic(&[2, 3]).len(), 7 * 15);
        assert_eq!(enumerate_rectangles(&[3]).len(), 36);
        assert_eq!(enumerate_rectangles(&[2, 1]).len(), 10 * 3);
    }

    #[test]
    fn dyadic_measure_and_conversion() {
        let r = DyadicRectangle::new(vec![(1, 1), (2, 3)]).unwrap();
        assert_eq!(r.measure(), 0.125);
        let g = r.to_grid_rectangle(&[3, 3]).unwrap();
        assert_eq!(g.ranges(), &[(4, 8), (6, 8)]);
        assert_eq!(g.measure(&[3, 3]), 0.125);
        // Too-fine grid request errors.
        assert!(r.to_grid_rectangle(&[1, 1]).is_err());
    }

    #[test]
    fn dyadic_containment() {
        let parent = DyadicRectangle::new(vec![(1, 0)]).unwrap();
        let child = DyadicRectangle::new(vec![(3, 3)]).unwrap();
        let outside = DyadicRectangle::new(vec![(3, 4)]).unwrap();
        assert!(parent.contains(&child));
        assert!(!parent.contains(&outside));
        assert!(parent.contains(&parent));
    }

    #[test]
    fn translate_zero_extends() {
        let f = GridFunction::new(&[1], &[0.0], vec![3.0, 5.0]).unwrap();
        let right = f.translate(&[1]).unwrap();
        assert_eq!(right.values(), &[0.0, 3.0]);
        let far = f.translate(&[2]).unwrap();
        assert_eq!(far.values(), &[0.0, 0.0]);
        let left = f.translate(&[-1]).unwrap();
        assert_eq!(left.values(), &[5.0, 0.0]);
    }

    #[test]
    fn constructor_validation() {
        assert!(GridFunction::new(&[2], &[0.0], vec![1.0; 3]).is_err());
        assert!(GridFunction::new(&[2], &[0.0, 0.0], vec![1.0; 4]).is_err());
        assert!(GridFunction::new(&[2], &[0.0], vec![f64::NAN; 4]).is_err());
        assert!(GridFunction::new(&[], &[], vec![]).is_err());
        assert!(GridRectangle::new(vec![(2, 2)]).is_err());
        assert!(DyadicRectangle::new(vec![(2, 4)]).is_err());
    }

    #[test]
    fn coarsen_preserves_coarse_averages() {
        let f = sample_grid();
        let c = f.coarsen().unwrap();
        assert_eq!(c.levels(), &[1, 0]);
        assert!((c.integral() - f.integral()).abs() < 1e-12);
        // Coarse cell (0,0) covers fine cells (0,0),(0,1),(1,0),(1,1).
        assert!((c.value(&[0, 0]) - (1.0 + 2.0 + 3.0 + 4.0) / 4.0).abs() < 1e-12);
        // The second axis is already a single cell.
        assert!(c.coarsen().is_err());
    }

    #[test]
    fn weighted_power_integral_basics() {
        let f = GridFunction::new(&[1], &[0.0], vec![2.0, -2.0]).unwrap();
        let w = GridFunction::new(&[1], &[0.0], vec![1.0, 3.0]).unwrap();
        // ∫ |f|^2 w = (4*1 + 4*3) * 0.5 = 8.
        assert!((weighted_power_integral(&f, 2.0, Some(&w)).unwrap() - 8.0).abs() < 1e-12);
        assert!((weighted_power_integral(&f, 1.0, None).unwrap() - 2.0).abs() < 1e-12);
    }
}
