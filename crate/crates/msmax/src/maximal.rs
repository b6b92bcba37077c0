//! Multilinear strong maximal operators on grid functions.
//!
//! For an m-tuple of nonnegative functions and a size parameter
//! `alpha ∈ [0, mn)`, the operators here compute at every grid cell the
//! supremum over a family of axis-parallel rectangles `R` containing the cell
//! of `prod_i |R|^{alpha/(mn) - 1} ∫_R f_i`, equivalently
//! `|R|^{alpha/n - m} prod_i ∫_R f_i`. Families:
//!
//! * [`strong_maximal`] — all cell-aligned rectangles;
//! * [`strong_maximal_dyadic`] — dyadic rectangles;
//! * [`strong_maximal_truncated`] — cell-aligned rectangles with every side
//!   at most `2^k`;
//! * [`cube_maximal`] / [`cube_maximal_dyadic`] — equal per-axis cell counts;
//! * [`shift_averaged_dyadic`] — the shift average
//!   `avg_t τ_{-t} ∘ M^d ∘ τ_t`, with translations acting by whole cells and
//!   zero extension, which dominates the truncated operator up to the factor
//!   `2^{n+1} · 4^{mn-alpha}` at interior cells.
//!
//! Inputs are replaced by their absolute values, so all outputs are
//! nonnegative. Rectangle integrals come from per-function prefix-sum tables
//! and each cell is evaluated independently (in parallel, with deterministic
//! ordering of the collected results).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{CompensatedSum, GridFunction, SumTable, MAX_DIMS};

/// Exponent data shared by operators and weight constants: dimension `n`,
/// size parameter `alpha`, per-function exponents `p_i ∈ (1, ∞)`, the
/// aggregate `p` with `1/p = sum_i 1/p_i`, and a target exponent `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentProfile {
    n: usize,
    alpha: f64,
    p_vec: Vec<f64>,
    p: f64,
    q: f64,
    one_weight: bool,
}

impl ExponentProfile {
    /// Profile with an explicit target exponent `q > 0`.
    pub fn new(n: usize, alpha: f64, p_vec: &[f64], q: f64) -> Result<Self> {
        Self::build(n, alpha, p_vec, Some(q))
    }

    /// Profile with `q` determined by the scaling relation
    /// `1/q = 1/p - alpha/n` (requires `0 < alpha` and `alpha/n < 1/p`,
    /// so that `p < q < ∞`).
    pub fn one_weight(n: usize, alpha: f64, p_vec: &[f64]) -> Result<Self> {
        Self::build(n, alpha, p_vec, None)
    }

    fn build(n: usize, alpha: f64, p_vec: &[f64], q: Option<f64>) -> Result<Self> {
        if n == 0 || n > MAX_DIMS {
            return Err(Error::InvalidArgument(format!(
                "dimension must be 1..={MAX_DIMS}, got {n}"
            )));
        }
        if p_vec.is_empty() {
            return Err(Error::InvalidArgument("need at least one exponent".into()));
        }
        if p_vec.iter().any(|&p| !(p > 1.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "every p_i must lie in (1, ∞)".into(),
            ));
        }
        let m = p_vec.len();
        let mn = (m * n) as f64;
        if !(0.0..mn).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [0, mn) = [0, {mn}), got {alpha}"
            )));
        }
        let inv_p: f64 = p_vec.iter().map(|&p| 1.0 / p).sum();
        let p = 1.0 / inv_p;
        let (q, one_weight) = match q {
            Some(q) => {
                if !(q > 0.0) || !q.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "q must lie in (0, ∞), got {q}"
                    )));
                }
                (q, false)
            }
            None => {
                if alpha <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "scaling-determined q needs alpha > 0".into(),
                    ));
                }
                let inv_q = inv_p - alpha / n as f64;
                if inv_q <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "alpha/n = {} must be smaller than 1/p = {inv_p}",
                        alpha / n as f64
                    )));
                }
                (1.0 / inv_q, true)
            }
        };
        Ok(Self {
            n,
            alpha,
            p_vec: p_vec.to_vec(),
            p,
            q,
            one_weight,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of functions / exponents `m`.
    pub fn m(&self) -> usize {
        self.p_vec.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p_vec(&self) -> &[f64] {
        &self.p_vec
    }

    /// Aggregate exponent, `1/p = sum_i 1/p_i`.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// True when `q` came from the scaling relation `1/q = 1/p - alpha/n`.
    pub fn is_one_weight(&self) -> bool {
        self.one_weight
    }

    /// Rectangle size exponent `alpha/n - m` applied to `|R|`.
    pub fn size_exponent(&self) -> f64 {
        self.alpha / self.n as f64 - self.m() as f64
    }
}

/// Hölder conjugate `p' = p / (p - 1)` (for `p > 1`).
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Rectangle family selector shared by operators and weight scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Dyadic rectangles only.
    Dyadic,
    /// All cell-aligned rectangles.
    All,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dyadic" => Ok(Family::Dyadic),
            "all" => Ok(Family::All),
            other => Err(Error::Parse(format!(
                "unknown rectangle family `{other}` (expected `dyadic` or `all`)"
            ))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Dyadic => write!(f, "dyadic"),
            Family::All => write!(f, "all"),
        }
    }
}

/// Prepared state for evaluating one maximal operator: prefix-sum tables of
/// `|f_i|` plus per-axis powers `(w 2^{-L_j})^{alpha/n - m}` for each
/// admissible width `w`, so a rectangle's size factor is a product of table
/// lookups instead of a `powf` per rectangle.
struct Evaluator {
    levels: Vec<u8>,
    cells: Vec<u32>,
    tables: Vec<SumTable>,
    axis_pow: Vec<Vec<f64>>,
}

impl Evaluator {
    fn prepare(fs: &[GridFunction], prof: &ExponentProfile) -> Result<Evaluator> {
        if fs.is_empty() {
            return Err(Error::InvalidArgument("need at least one function".into()));
        }
        if fs.len() != prof.m() {
            return Err(Error::ShapeMismatch(format!(
                "profile expects {} functions, got {}",
                prof.m(),
                fs.len()
            )));
        }
        if fs[0].dims() != prof.n() {
            return Err(Error::ShapeMismatch(format!(
                "profile dimension {} does not match grid dimension {}",
                prof.n(),
                fs[0].dims()
            )));
        }
        for f in &fs[1..] {
            if !f.same_grid(&fs[0]) {
                return Err(Error::ShapeMismatch(
                    "all functions must share one grid".into(),
                ));
            }
        }
        let levels = fs[0].levels().to_vec();
        let cells: Vec<u32> = (0..levels.len()).map(|j| fs[0].cells(j)).collect();
        let tables: Vec<SumTable> = fs.iter().map(|f| SumTable::build(&f.abs())).collect();
        let e = prof.size_exponent();
        let axis_pow: Vec<Vec<f64>> = levels
            .iter()
            .zip(&cells)
            .map(|(&l, &g)| {
                let width = (0.5f64).powi(l as i32);
                let mut v = vec![0.0; g as usize + 1];
                for (w, slot) in v.iter_mut().enumerate().skip(1) {
                    *slot = (w as f64 * width).powf(e);
                }
                v
            })
            .collect();
        Ok(Evaluator {
            levels,
            cells,
            tables,
            axis_pow,
        })
    }

    fn n(&self) -> usize {
        self.levels.len()
    }

    /// `|R|^{alpha/n - m} * prod_i ∫_R |f_i|` for the rectangle `[lo, hi)`
    /// in cell units (optionally pre-shifted by `-t` for translated inputs).
    #[inline]
    fn rect_value(&self, lo: &[i64], hi: &[i64], widths: &[u32]) -> f64 {
        let mut v = 1.0f64;
        for (j, &w) in widths.iter().enumerate() {
            v *= self.axis_pow[j][w as usize];
        }
        for table in &self.tables {
            v *= table.clipped_integral(lo, hi);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// Max over dyadic rectangles containing the (possibly shifted) point
    /// `y`, with integrals taken over the rectangle translated by `-t`
    /// (zero extension). `y` must lie inside the box.
    fn dyadic_max_at(&self, y: &[u32], t: &[i64]) -> f64 {
        let n = self.n();
        let mut best = 0.0f64;
        // Odometer over per-axis ancestor depths d_j (side 2^{d_j} cells).
        let mut depth = [0u8; MAX_DIMS];
        loop {
            let mut lo = [0i64; MAX_DIMS];
            let mut hi = [0i64; MAX_DIMS];
            let mut widths = [0u32; MAX_DIMS];
            for j in 0..n {
                let d = depth[j];
                let w = 1u32 << d;
                let a = (y[j] >> d) << d;
                lo[j] = a as i64 - t[j];
                hi[j] = (a + w) as i64 - t[j];
                widths[j] = w;
            }
            let v = self.rect_value(&lo[..n], &hi[..n], &widths[..n]);
            if v > best {
                best = v;
            }
            // Advance the odometer.
            let mut j = 0;
            loop {
                if j == n {
                    return best;
                }
                if depth[j] < self.levels[j] {
                    depth[j] += 1;
                    break;
                }
                depth[j] = 0;
                j += 1;
            }
        }
    }

    /// Max over all cell-aligned rectangles containing `x` with per-axis
    /// width at most `cap[j]` cells (`0` caps give an empty family → 0).
    fn full_max_at(&self, x: &[u32], cap: &[u32]) -> f64 {
        let n = self.n();
        // Per-axis candidate ranges (a, b] enumerated lazily via an odometer
        // over (start, end) pairs; store the candidate list per axis first.
        let mut cands: [Vec<(u32, u32)>; MAX_DIMS] = Default::default();
        for j in 0..n {
            let g = self.cells[j];
            let mut v = Vec::new();
            for a in 0..=x[j] {
                let b_max = (a + cap[j]).min(g);
                for b in (x[j] + 1)..=b_max {
                    v.push((a, b));
                }
            }
            if v.is_empty() {
                return 0.0;
            }
            cands[j] = v;
        }
        let mut best = 0.0f64;
        let mut pos = [0usize; MAX_DIMS];
        loop {
            let mut lo = [0i64; MAX_DIMS];
            let mut hi = [0i64; MAX_DIMS];
            let mut widths = [0u32; MAX_DIMS];
            for j in 0..n {
                let (a, b) = cands[j][pos[j]];
                lo[j] = a as i64;
                hi[j] = b as i64;
                widths[j] = b - a;
            }
            let v = self.rect_value(&lo[..n], &hi[..n], &widths[..n]);
            if v > best {
                best = v;
            }
            let mut j = 0;
            loop {
                if j == n {
                    return best;
                }
                pos[j] += 1;
                if pos[j] < cands[j].len() {
                    break;
                }
                pos[j] = 0;
                j += 1;
            }
        }
    }

    /// Max over rectangles containing `x` with one shared per-axis cell
    /// count; `dyadic` restricts to equal-depth dyadic ancestors.
    fn cube_max_at(&self, x: &[u32], dyadic: bool) -> f64 {
        let n = self.n();
        let mut best = 0.0f64;
        if dyadic {
            let max_depth = self.levels.iter().copied().min().unwrap();
            for d in 0..=max_depth {
                let w = 1u32 << d;
                let mut lo = [0i64; MAX_DIMS];
                let mut hi = [0i64; MAX_DIMS];
                let mut widths = [0u32; MAX_DIMS];
                for j in 0..n {
                    let a = (x[j] >> d) << d;
                    lo[j] = a as i64;
                    hi[j] = (a + w) as i64;
                    widths[j] = w;
                }
                let v = self.rect_value(&lo[..n], &hi[..n], &widths[..n]);
                if v > best {
                    best = v;
                }
            }
            return best;
        }
        let max_w = self.cells.iter().copied().min().unwrap();
        let mut starts: [Vec<u32>; MAX_DIMS] = Default::default();
        for w in 1..=max_w {
            for j in 0..n {
                let lo = (x[j] + 1).saturating_sub(w);
                let hi = x[j].min(self.cells[j] - w);
                starts[j] = (lo..=hi).collect();
            }
            let mut pos = [0usize; MAX_DIMS];
            'odometer: loop {
                let mut lo = [0i64; MAX_DIMS];
                let mut hi = [0i64; MAX_DIMS];
                let mut widths = [0u32; MAX_DIMS];
                for j in 0..n {
                    let a = starts[j][pos[j]];
                    lo[j] = a as i64;
                    hi[j] = (a + w) as i64;
                    widths[j] = w;
                }
                let v = self.rect_value(&lo[..n], &hi[..n], &widths[..n]);
                if v > best {
                    best = v;
                }
                let mut j = 0;
                loop {
                    if j == n {
                        break 'odometer;
                    }
                    pos[j] += 1;
                    if pos[j] < starts[j].len() {
                        break;
                    }
                    pos[j] = 0;
                    j += 1;
                }
            }
        }
        best
    }

    /// Runs `per_cell` at every cell in parallel and assembles the output on
    /// the input grid (order-deterministic).
    fn map_cells<F>(&self, model: &GridFunction, per_cell: F) -> GridFunction
    where
        F: Fn(&[u32]) -> f64 + Sync,
    {
        let levels = model.levels().to_vec();
        let values: Vec<f64> = (0..model.total_cells())
            .into_par_iter()
            .map(|lin| {
                let mut idx = [0u32; MAX_DIMS];
                let n = levels.len();
                let mut rem = lin;
                for j in (0..n).rev() {
                    let cells = 1usize << levels[j];
                    idx[j] = (rem & (cells - 1)) as u32;
                    rem >>= levels[j];
                }
                per_cell(&idx[..n])
            })
            .collect();
        GridFunction::new(model.levels(), model.origin(), values)
            .expect("output grid mirrors validated input grid")
    }
}

/// Strong maximal operator over all cell-aligned rectangles.
pub fn strong_maximal(fs: &[GridFunction], prof: &ExponentProfile) -> Result<GridFunction> {
    let ev = Evaluator::prepare(fs, prof)?;
    let cap: Vec<u32> = ev.cells.clone();
    Ok(ev.map_cells(&fs[0], |x| ev.full_max_at(x, &cap)))
}

/// Strong maximal operator over dyadic rectangles.
pub fn strong_maximal_dyadic(fs: &[GridFunction], prof: &ExponentProfile) -> Result<GridFunction> {
    let ev = Evaluator::prepare(fs, prof)?;
    Ok(ev.map_cells(&fs[0], |x| ev.dyadic_max_at(x, &[0i64; MAX_DIMS])))
}

/// Truncated strong maximal operator: cell-aligned rectangles with every
/// side length at most `2^k` (an empty family, i.e. `2^k` below one cell
/// width on some axis, gives the zero function).
pub fn strong_maximal_truncated(
    fs: &[GridFunction],
    prof: &ExponentProfile,
    k: i32,
) -> Result<GridFunction> {
    let ev = Evaluator::prepare(fs, prof)?;
    let cap: Vec<u32> = ev
        .levels
        .iter()
        .zip(&ev.cells)
        .map(|(&l, &g)| {
            let e = k + l as i32;
            if e < 0 {
                0
            } else if e >= 31 {
                g
            } else {
                (1u32 << e).min(g)
            }
        })
        .collect();
    Ok(ev.map_cells(&fs[0], |x| ev.full_max_at(x, &cap)))
}

/// Cube maximal operator: rectangles with one shared per-axis cell count.
pub fn cube_maximal(fs: &[GridFunction], prof: &ExponentProfile) -> Result<GridFunction> {
    let ev = Evaluator::prepare(fs, prof)?;
    Ok(ev.map_cells(&fs[0], |x| ev.cube_max_at(x, false)))
}

/// Dyadic cube maximal operator: equal-depth dyadic ancestors.
pub fn cube_maximal_dyadic(fs: &[GridFunction], prof: &ExponentProfile) -> Result<GridFunction> {
    let ev = Evaluator::prepare(fs, prof)?;
    Ok(ev.map_cells(&fs[0], |x| ev.cube_max_at(x, true)))
}

/// Shift-averaged dyadic operator: the average over `t ∈ shifts` of
/// `τ_{-t} ∘ M^d ∘ τ_t` applied to the tuple, with translations acting by
/// whole cells and zero extension outside the box. Cells `x` with `x + t`
/// outside the box contribute 0 for that `t` (they are still counted in the
/// average). `k` fixes the intended shift cube `[-2^{k+2}, 2^{k+2}]^n`;
/// shifts outside it are rejected.
pub fn shift_averaged_dyadic(
    fs: &[GridFunction],
    prof: &ExponentProfile,
    k: i32,
    shifts: &[Vec<i64>],
) -> Result<GridFunction> {
    let ev = Evaluator::prepare(fs, prof)?;
    if shifts.is_empty() {
        return Err(Error::InvalidArgument("need at least one shift".into()));
    }
    let n = ev.n();
    for t in shifts {
        if t.len() != n {
            return Err(Error::ShapeMismatch(
                "every shift must have one entry per axis".into(),
            ));
        }
        for (j, &tj) in t.iter().enumerate() {
            let radius = lattice_radius(ev.levels[j], k);
            if tj.abs() > radius {
                return Err(Error::OutOfBounds(format!(
                    "shift {tj} on axis {j} exceeds the k={k} cube radius {radius}"
                )));
            }
        }
    }
    let inv = 1.0 / shifts.len() as f64;
    Ok(ev.map_cells(&fs[0], |x| {
        let mut acc = CompensatedSum::new();
        let mut y = [0u32; MAX_DIMS];
        'shifts: for t in shifts {
            for j in 0..n {
                let yj = x[j] as i64 + t[j];
                if yj < 0 || yj >= ev.cells[j] as i64 {
                    continue 'shifts;
                }
                y[j] = yj as u32;
            }
            acc.add(ev.dyadic_max_at(&y[..n], t));
        }
        acc.value() * inv
    }))
}

/// Cell-shift radius on one axis for the cube `[-2^{k+2}, 2^{k+2}]^n`
/// intersected with the grid extent.
fn lattice_radius(level: u8, k: i32) -> i64 {
    let e = k + 2 + level as i32;
    if e < 0 {
        0
    } else {
        (1i64 << e.min(40)).min(1i64 << level)
    }
}

/// Full integer shift lattice inside `[-2^{k+2}, 2^{k+2}]^n` clipped to the
/// grid extent, in deterministic row-major order.
pub fn shift_lattice(levels: &[u8], k: i32) -> Vec<Vec<i64>> {
    let radii: Vec<i64> = levels.iter().map(|&l| lattice_radius(l, k)).collect();
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for &r in &radii {
        let mut next = Vec::with_capacity(out.len() * (2 * r as usize + 1));
        for prefix in &out {
            for s in -r..=r {
                let mut row = prefix.clone();
                row.push(s);
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// Linear indices of cells at distance at least `2^{k+2}` from the box
/// boundary (where every lattice shift keeps the cell inside the box).
pub fn interior_cell_indices(levels: &[u8], k: i32) -> Vec<usize> {
    let n = levels.len();
    let margins: Vec<i64> = levels.iter().map(|&l| lattice_radius(l, k)).collect();
    let cells: Vec<i64> = levels.iter().map(|&l| 1i64 << l).collect();
    let total: usize = levels.iter().map(|&l| 1usize << l).product();
    let mut out = Vec::new();
    let mut idx = vec![0u32; n];
    for lin in 0..total {
        let mut rem = lin;
        for j in (0..n).rev() {
            idx[j] = (rem & ((1usize << levels[j]) - 1)) as u32;
            rem >>= levels[j];
        }
        let inside = (0..n).all(|j| {
            let i = idx[j] as i64;
            i >= margins[j] && i < cells[j] - margins[j]
        });
        if inside {
            out.push(lin);
        }
    }
    out
}

/// Restricted weak-type estimate of `g` against the measure with density
/// `nu`: the maximum over the distinct positive values `v` taken by `g` of
/// `v * nu({g >= v})^{1/q}`. Exact for piecewise-constant `g` since the
/// supremum over continuous thresholds is attained at a value of `g`.
pub fn weak_norm_estimate(g: &GridFunction, nu: &GridFunction, q: f64) -> Result<f64> {
    if !g.same_grid(nu) {
        return Err(Error::ShapeMismatch(
            "function and density must share a grid".into(),
        ));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "q must lie in (0, ∞), got {q}"
        )));
    }
    if !nu.is_nonnegative() {
        return Err(Error::Domain("density must be nonnegative".into()));
    }
    let mut order: Vec<usize> = (0..g.total_cells()).collect();
    order.sort_by(|&a, &b| {
        g.values()[b]
            .partial_cmp(&g.values()[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let vol = g.cell_volume();
    let mut mass = CompensatedSum::new();
    let mut best = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let v = g.values()[order[i]];
        // Absorb the whole group of cells sharing this value.
        while i < order.len() && g.values()[order[i]] == v {
            mass.add(nu.values()[order[i]] * vol);
            i += 1;
        }
        if v > 0.0 {
            let cand = v * mass.value().powf(1.0 / q);
            if cand > best {
                best = cand;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, levels: &[u8]) -> GridFunction {
        let total: usize = levels.iter().map(|&l| 1usize << l).product();
        let values: Vec<f64> = (0..total).map(|_| rng.random_range(0.0..4.0)).collect();
        GridFunction::new(levels, &vec![0.0; levels.len()], values).unwrap()
    }

    #[test]
    fn profile_scaling_relation() {
        let prof = ExponentProfile::one_weight(1, 0.25, &[4.0, 4.0]).unwrap();
        assert_eq!(prof.p(), 2.0);
        assert!((prof.q() - 4.0).abs() < 1e-12);
        assert!(prof.is_one_weight());
        assert!((1.0 / prof.q() - (1.0 / prof.p() - prof.alpha() / 1.0)).abs() <= 1e-12);
        assert!(prof.p() < prof.q());
    }

    #[test]
    fn profile_rejects_bad_input() {
        assert!(ExponentProfile::new(1, -0.1, &[2.0], 2.0).is_err());
        assert!(ExponentProfile::new(1, 1.0, &[2.0], 2.0).is_err()); // alpha = mn
        assert!(ExponentProfile::new(1, 0.5, &[1.0], 2.0).is_err()); // p_i = 1
        assert!(ExponentProfile::new(1, 0.5, &[2.0], 0.0).is_err());
        assert!(ExponentProfile::one_weight(1, 0.0, &[2.0]).is_err());
        assert!(ExponentProfile::one_weight(1, 0.6, &[2.0]).is_err()); // alpha/n >= 1/p
    }

    #[test]
    fn dyadic_single_function_hand_value() {
        // Two cells (2, 0), alpha = 1/2: candidates for the left cell are
        // the box (value 1) and the left half ((1/2)^{-1/2} * 1 = sqrt 2).
        let f = GridFunction::new(&[1], &[0.0], vec![2.0, 0.0]).unwrap();
        let prof = ExponentProfile::new(1, 0.5, &[2.0], 2.0).unwrap();
        let out = strong_maximal_dyadic(std::slice::from_ref(&f), &prof).unwrap();
        assert!((out.values()[0] - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((out.values()[1] - 1.0).abs() < 1e-12);
        // At L = 1 the dyadic and full families coincide.
        let full = strong_maximal(&[f], &prof).unwrap();
        assert_eq!(out.values(), full.values());
    }

    #[test]
    fn bilinear_disjoint_supports_hand_value() {
        // f1 = (2, 0), f2 = (0, 2), alpha = 1: only the whole box sees both
        // supports, and it gives 1^{1/1 - 2} * 1 * 1 = 1 everywhere.
        let f1 = GridFunction::new(&[1], &[0.0], vec![2.0, 0.0]).unwrap();
        let f2 = GridFunction::new(&[1], &[0.0], vec![0.0, 2.0]).unwrap();
        let prof = ExponentProfile::new(1, 1.0, &[2.0, 2.0], 2.0).unwrap();
        let out = strong_maximal(&[f1, f2], &prof).unwrap();
        assert_eq!(out.values(), &[1.0, 1.0]);
    }

    #[test]
    fn constant_tuple_maps_to_one() {
        // For f_i ≡ 1 the value at any rectangle is |R|^{alpha/n}, maximised
        // by the whole box, so every operator returns 1 (up to powf rounding
        // on the competing rectangles).
        for alpha in [0.0, 0.3, 1.2] {
            let prof = ExponentProfile::new(2, alpha, &[2.0, 3.0], 2.0).unwrap();
            let aniso = vec![
                GridFunction::constant(&[3, 2], 1.0).unwrap(),
                GridFunction::constant(&[3, 2], 1.0).unwrap(),
            ];
            for out in [
                strong_maximal(&aniso, &prof).unwrap(),
                strong_maximal_dyadic(&aniso, &prof).unwrap(),
            ] {
                assert!(out.values().iter().all(|&v| (v - 1.0).abs() <= 1e-12));
            }
            // Cube families only reach the full box on isotropic grids.
            let iso = vec![
                GridFunction::constant(&[2, 2], 1.0).unwrap(),
                GridFunction::constant(&[2, 2], 1.0).unwrap(),
            ];
            for out in [
                cube_maximal(&iso, &prof).unwrap(),
                cube_maximal_dyadic(&iso, &prof).unwrap(),
            ] {
                assert!(out.values().iter().all(|&v| (v - 1.0).abs() <= 1e-12));
            }
        }
    }

    #[test]
    fn pointwise_orderings() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let fs = vec![
                random_grid(&mut rng, &[3, 2]),
                random_grid(&mut rng, &[3, 2]),
            ];
            let prof = ExponentProfile::new(2, 0.75, &[2.0, 2.0], 2.0).unwrap();
            let full = strong_maximal(&fs, &prof).unwrap();
            let dyadic = strong_maximal_dyadic(&fs, &prof).unwrap();
            let cube = cube_maximal(&fs, &prof).unwrap();
            let cube_d = cube_maximal_dyadic(&fs, &prof).unwrap();
            for i in 0..full.total_cells() {
                assert!(dyadic.values()[i] <= full.values()[i] + 1e-12);
                assert!(cube.values()[i] <= full.values()[i] + 1e-12);
                assert!(cube_d.values()[i] <= dyadic.values()[i] + 1e-12);
                assert!(full.values()[i] >= 0.0);
            }
        }
    }

    #[test]
    fn truncated_is_monotone_in_k_and_caps_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fs = vec![random_grid(&mut rng, &[4])];
        let prof = ExponentProfile::new(1, 0.5, &[2.0], 2.0).unwrap();
        let full = strong_maximal(&fs, &prof).unwrap();
        let mut prev = strong_maximal_truncated(&fs, &prof, -6).unwrap();
        for k in -5..=0 {
            let cur = strong_maximal_truncated(&fs, &prof, k).unwrap();
            for i in 0..cur.total_cells() {
                assert!(prev.values()[i] <= cur.values()[i] + 1e-12);
            }
            prev = cur;
        }
        // k = 0 allows sides up to the whole box.
        assert_eq!(prev.values(), full.values());
        // Below one cell width the family is empty.
        let empty = strong_maximal_truncated(&fs, &prof, -5).unwrap();
        assert!(empty.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn homogeneity_is_exact_for_binary_scalars() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let fs = vec![random_grid(&mut rng, &[3]), random_grid(&mut rng, &[3])];
        let prof = ExponentProfile::new(1, 0.5, &[2.0, 4.0], 3.0).unwrap();
        let base = strong_maximal(&fs, &prof).unwrap();
        let scaled = vec![fs[0].map(|v| 4.0 * v), fs[1].map(|v| 0.5 * v)];
        let out = strong_maximal(&scaled, &prof).unwrap();
        for i in 0..out.total_cells() {
            assert_eq!(out.values()[i], 2.0 * base.values()[i]);
        }
    }

    #[test]
    fn shift_average_of_ones_is_one_on_interior() {
        // With alpha = 0 the dyadic value of the own cell is exactly 1, so
        // the average equals 1 wherever every shift stays inside the box.
        let levels = [5u8];
        let prof = ExponentProfile::new(1, 0.0, &[2.0], 2.0).unwrap();
        let ones = vec![GridFunction::constant(&levels, 1.0).unwrap()];
        let k = -4;
        let shifts = shift_lattice(&levels, k);
        assert_eq!(shifts.len(), 2 * 8 + 1);
        let avg = shift_averaged_dyadic(&ones, &prof, k, &shifts).unwrap();
        let interior = interior_cell_indices(&levels, k);
        assert!(!interior.is_empty());
        for &i in &interior {
            assert!(
                (avg.values()[i] - 1.0).abs() <= 1e-12,
                "interior cell {i}: {}",
                avg.values()[i]
            );
        }
        // Boundary cells lose mass to the zero extension.
        assert!(avg.values()[0] < 1.0);
    }

    #[test]
    fn truncated_dominated_by_shift_average() {
        // Discrete form of the truncation-domination bound with constant
        // 2^{n+1} 4^{mn - alpha} at interior cells.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let levels = [5u8];
        let prof = ExponentProfile::new(1, 0.5, &[2.0, 2.0], 2.0).unwrap();
        let fs = vec![
            random_grid(&mut rng, &levels),
            random_grid(&mut rng, &levels),
        ];
        let k = -4;
        let truncated = strong_maximal_truncated(&fs, &prof, k).unwrap();
        let shifts = shift_lattice(&levels, k);
        let avg = shift_averaged_dyadic(&fs, &prof, k, &shifts).unwrap();
        let c = (2.0f64).powi(1 + 1) * (4.0f64).powf(2.0 - 0.5);
        for &i in &interior_cell_indices(&levels, k) {
            assert!(
                truncated.values()[i] <= c * avg.values()[i] + 1e-12,
                "cell {i}: {} vs {}",
                truncated.values()[i],
                c * avg.values()[i]
            );
        }
    }

    #[test]
    fn weak_norm_hand_value_and_scaling() {
        let g = GridFunction::new(&[1], &[0.0], vec![2.0, 0.0]).unwrap();
        let nu = GridFunction::constant(&[1], 1.0).unwrap();
        // Only positive value 2 with nu({g >= 2}) = 1/2.
        let est = weak_norm_estimate(&g, &nu, 1.0).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
        let est2 = weak_norm_estimate(&g.map(|v| 2.0 * v), &nu, 1.0).unwrap();
        assert_eq!(est2, 2.0 * est);
        // Zero function -> zero estimate.
        let z = GridFunction::constant(&[1], 0.0).unwrap();
        assert_eq!(weak_norm_estimate(&z, &nu, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_inputs_error() {
        let f1 = GridFunction::constant(&[2], 1.0).unwrap();
        let f2 = GridFunction::constant(&[3], 1.0).unwrap();
        let prof = ExponentProfile::new(1, 0.5, &[2.0, 2.0], 2.0).unwrap();
        assert!(strong_maximal(&[f1.clone(), f2], &prof).is_err());
        assert!(strong_maximal(std::slice::from_ref(&f1), &prof).is_err());
        let prof2 = ExponentProfile::new(2, 0.5, &[2.0], 2.0).unwrap();
        assert!(strong_maximal(&[f1], &prof2).is_err());
    }
}
