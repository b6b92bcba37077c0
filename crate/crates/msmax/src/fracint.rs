//! Fractional integrals of function tuples by direct quadrature, plus the
//! distribution-level machinery that compares them against the cube maximal
//! operator: per-threshold mass margins with an empirical local-density
//! constant, a parameter recipe that makes the margins nonnegative, strong
//! and weak norm-comparison ratios, and a self-contained experiment showing
//! why the comparison fails for the dyadic cube family.
//!
//! The integral of an `m`-tuple at a cell centre `x` is the sum over
//! `m`-tuples of source cells of
//! `prod_i f_i(y_i) * (|x-y_1| + ... + |x-y_m|)^{alpha-mn} * vol^m`,
//! with `|.|` the Euclidean norm per factor and `vol` the cell volume.  The
//! all-diagonal tuple (every `y_i` equal to the `x` cell) has distance zero
//! and is evaluated with the distance replaced by half the smallest cell
//! width: bounded, shrinking with resolution, and only one of the `N^m`
//! terms.  Cost is `O(N * prod_i |supp f_i|)`, parallel over output cells.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{weighted_power_integral, CompensatedSum, GridFunction, GridRectangle};
use crate::maximal::{cube_maximal, weak_norm_estimate, ExponentProfile};

/// Shared validation for tuple arguments: the tuple length must match the
/// profile, all functions must live on one grid of the profile's dimension.
fn check_tuple(fs: &[GridFunction], prof: &ExponentProfile) -> Result<()> {
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
    Ok(())
}

/// Precomputed quadrature state: flattened cell centres, the nonzero cells of
/// each input (index, value), and the kernel constants.
struct Quadrature {
    n: usize,
    kernel_exp: f64,
    singular_distance: f64,
    volume_power: f64,
    centers: Vec<f64>,
    supports: Vec<Vec<(usize, f64)>>,
}

impl Quadrature {
    fn prepare(fs: &[GridFunction], prof: &ExponentProfile) -> Result<Quadrature> {
        check_tuple(fs, prof)?;
        let mn = (prof.m() * prof.n()) as f64;
        if !(prof.alpha() > 0.0 && prof.alpha() < mn) {
            return Err(Error::InvalidArgument(format!(
                "integral order must lie in (0, mn) = (0, {mn}), got {}",
                prof.alpha()
            )));
        }
        let base = &fs[0];
        let n = base.dims();
        let mut centers = Vec::with_capacity(base.total_cells() * n);
        let mut idx = vec![0u32; n];
        for lin in 0..base.total_cells() {
            base.multi_index(lin, &mut idx);
            centers.extend(base.cell_center(&idx));
        }
        let supports = fs
            .iter()
            .map(|f| {
                f.values()
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect();
        let min_width = (0..n)
            .map(|j| base.cell_width(j))
            .fold(f64::INFINITY, f64::min);
        Ok(Quadrature {
            n,
            kernel_exp: prof.alpha() - mn,
            singular_distance: 0.5 * min_width,
            volume_power: base.cell_volume().powi(prof.m() as i32),
            centers,
            supports,
        })
    }

    /// Quadrature value at the cell with linear index `lin`.  The tuple loop
    /// runs in a fixed row-major order with compensated accumulation, so the
    /// result is independent of how output cells are scheduled.
    fn value_at(&self, lin: usize) -> f64 {
        if self.supports.iter().any(|s| s.is_empty()) {
            return 0.0;
        }
        let x = &self.centers[lin * self.n..(lin + 1) * self.n];
        let mut acc = CompensatedSum::new();
        let mut pos = vec![0usize; self.supports.len()];
        'tuples: loop {
            let mut weight = 1.0f64;
            let mut dist = 0.0f64;
            for (i, &k) in pos.iter().enumerate() {
                let (cell, v) = self.supports[i][k];
                weight *= v;
                let y = &self.centers[cell * self.n..(cell + 1) * self.n];
                let mut d2 = 0.0;
                for j in 0..self.n {
                    let t = x[j] - y[j];
                    d2 += t * t;
                }
                dist += d2.sqrt();
            }
            if dist == 0.0 {
                dist = self.singular_distance;
            }
            acc.add(weight * dist.powf(self.kernel_exp));
            let mut slot = pos.len();
            loop {
                if slot == 0 {
                    break 'tuples;
                }
                slot -= 1;
                pos[slot] += 1;
                if pos[slot] < self.supports[slot].len() {
                    break;
                }
                pos[slot] = 0;
            }
        }
        acc.value() * self.volume_power
    }
}

/// Fractional integral of the tuple on the tuple's own grid, evaluated at
/// every cell centre.  Linear in each slot; nonnegative inputs give a
/// nonnegative output.  Requires an order strictly inside `(0, mn)`.
pub fn fractional_integral(fs: &[GridFunction], prof: &ExponentProfile) -> Result<GridFunction> {
    let quad = Quadrature::prepare(fs, prof)?;
    let base = &fs[0];
    let values: Vec<f64> = (0..base.total_cells())
        .into_par_iter()
        .map(|lin| quad.value_at(lin))
        .collect();
    GridFunction::new(base.levels(), base.origin(), values)
}

/// Fractional integral at a single cell, for callers that need a handful of
/// point values without paying for the whole grid.  Bit-identical to the
/// corresponding entry of [`fractional_integral`].
pub fn fractional_integral_at(
    fs: &[GridFunction],
    prof: &ExponentProfile,
    cell: &[u32],
) -> Result<f64> {
    let quad = Quadrature::prepare(fs, prof)?;
    let base = &fs[0];
    if cell.len() != base.dims() {
        return Err(Error::ShapeMismatch(format!(
            "cell index has {} axes, grid has {}",
            cell.len(),
            base.dims()
        )));
    }
    for (j, &c) in cell.iter().enumerate() {
        if c >= base.cells(j) {
            return Err(Error::OutOfBounds(format!(
                "cell index {c} exceeds axis {j} with {} cells",
                base.cells(j)
            )));
        }
    }
    Ok(quad.value_at(base.linear_index(cell)))
}

/// Parameters of the distributional comparison between the fractional
/// integral and the cube maximal operator.
#[derive(Clone, Debug)]
pub struct GoodLambdaParams {
    /// Upper-level multiplier: the integral side is tested at `lambda * b`.
    /// Must satisfy `b >= 1`.
    pub b: f64,
    /// Maximal-side multiplier: the maximal side is tested at `lambda * d`.
    /// Must be positive.
    pub d: f64,
    /// Threshold grid; positive, strictly increasing, nonempty.
    pub lambdas: Vec<f64>,
    /// Depth of the dyadic-cube partition used for the local density
    /// statistic; cubes have side `2^{-cube_level}` and must contain at
    /// least one whole cell per axis.
    pub cube_level: u8,
}

impl GoodLambdaParams {
    fn validate(&self, levels: &[u8]) -> Result<()> {
        if !(self.b >= 1.0) || !self.b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "upper-level multiplier must lie in [1, ∞), got {}",
                self.b
            )));
        }
        if !(self.d > 0.0) || !self.d.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "maximal-side multiplier must be positive, got {}",
                self.d
            )));
        }
        if self.lambdas.is_empty() {
            return Err(Error::InvalidArgument("threshold grid is empty".into()));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument(
                "thresholds must be positive and finite".into(),
            ));
        }
        if !self.lambdas.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "thresholds must be strictly increasing".into(),
            ));
        }
        let max_depth = levels.iter().copied().min().unwrap_or(0);
        if self.cube_level > max_depth {
            return Err(Error::InvalidArgument(format!(
                "cube depth {} exceeds the finest shared axis depth {max_depth}",
                self.cube_level
            )));
        }
        Ok(())
    }
}

/// Geometric grid of `count >= 2` thresholds from `lo` to `hi` inclusive.
pub fn log_lambda_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need 0 < lo < hi < ∞, got [{lo}, {hi}]"
        )));
    }
    if count < 2 {
        return Err(Error::InvalidArgument(
            "need at least two thresholds".into(),
        ));
    }
    let span = (hi / lo).ln();
    let mut out: Vec<f64> = (0..count)
        .map(|k| lo * (span * k as f64 / (count - 1) as f64).exp())
        .collect();
    out[0] = lo;
    out[count - 1] = hi;
    if !out.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "threshold grid too fine to stay strictly increasing".into(),
        ));
    }
    Ok(out)
}

/// Masses entering the distributional inequality at one threshold:
/// `omega({I > lambda b}) <= omega({M > lambda d}) + b^{-q}/2 * omega({I > lambda})`,
/// together with its margin (right side minus left side).
#[derive(Clone, Copy, Debug)]
pub struct LambdaMargin {
    pub lambda: f64,
    /// `omega`-mass of the set where the integral exceeds `lambda * b`.
    pub upper_mass: f64,
    /// `omega`-mass of the set where the maximal function exceeds `lambda * d`.
    pub maximal_mass: f64,
    /// Absorbed share `b^{-q}/2` of the mass where the integral exceeds `lambda`.
    pub tail_mass: f64,
    /// `maximal_mass + tail_mass - upper_mass`; nonnegative means the
    /// inequality holds at this threshold.
    pub margin: f64,
}

/// Outcome of the distributional comparison for one `(b, d, lambdas)` choice.
#[derive(Clone, Debug)]
pub struct GoodLambdaReport {
    pub b: f64,
    pub d: f64,
    /// Largest observed `|E| / (|Q| (d/b)^{n/(mn-alpha)})` over thresholds
    /// and partition cubes `Q` satisfying the local premise, where `E` is the
    /// set of cells of `Q` with integral `>= lambda b` and maximal
    /// `<= lambda d`.  Zero when no premise pair produced a nonempty `E`.
    pub empirical_k: f64,
    /// Threshold and cube attaining `empirical_k` (first in scan order on
    /// ties); `None` when no pair satisfied the premise.
    pub k_witness: Option<(f64, GridRectangle)>,
    /// Number of (threshold, cube) pairs that entered the density statistic.
    pub cubes_checked: usize,
    /// Pairs skipped because no cell of the enlarged cube (four times the
    /// side, clipped to the box) had integral `<= lambda`.
    pub cubes_skipped: usize,
    /// Smallest `b` that would empty every exceptional set `E` on this grid:
    /// the max over thresholds of `sup{integral on {maximal <= lambda d}} / lambda`.
    pub emptying_threshold: f64,
    /// One entry per threshold, in grid order.
    pub margins: Vec<LambdaMargin>,
    /// Smallest margin over the grid.
    pub min_margin: f64,
}

impl GoodLambdaReport {
    /// True when the inequality held at every threshold.
    pub fn all_margins_nonnegative(&self) -> bool {
        self.min_margin >= 0.0
    }
}

/// Visit every linear index of the cell box `prod_j [lo_j, hi_j)`.
fn scan_box<F: FnMut(usize)>(g: &GridFunction, ranges: &[(u32, u32)], mut visit: F) {
    if ranges.iter().any(|&(lo, hi)| lo >= hi) {
        return;
    }
    let mut idx: Vec<u32> = ranges.iter().map(|r| r.0).collect();
    loop {
        visit(g.linear_index(&idx));
        let mut j = ranges.len();
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < ranges[j].1 {
                break;
            }
            idx[j] = ranges[j].0;
        }
    }
}

/// Does any cell of the box satisfy the predicate?
fn box_any<P: Fn(usize) -> bool>(g: &GridFunction, ranges: &[(u32, u32)], pred: P) -> bool {
    if ranges.iter().any(|&(lo, hi)| lo >= hi) {
        return false;
    }
    let mut idx: Vec<u32> = ranges.iter().map(|r| r.0).collect();
    loop {
        if pred(g.linear_index(&idx)) {
            return true;
        }
        let mut j = ranges.len();
        loop {
            if j == 0 {
                return false;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < ranges[j].1 {
                break;
            }
            idx[j] = ranges[j].0;
        }
    }
}

/// Per-axis cell ranges of all dyadic cubes of side `2^{-depth}` tiling the
/// box, in row-major position order.
fn cube_ranges(levels: &[u8], depth: u8) -> Vec<Vec<(u32, u32)>> {
    let n = levels.len();
    let count = 1u32 << depth;
    let widths: Vec<u32> = levels.iter().map(|&l| 1u32 << (l - depth)).collect();
    let mut out = Vec::with_capacity((count as usize).pow(n as u32));
    let mut pos = vec![0u32; n];
    loop {
        out.push(
            (0..n)
                .map(|j| (pos[j] * widths[j], (pos[j] + 1) * widths[j]))
                .collect(),
        );
        let mut j = n;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            pos[j] += 1;
            if pos[j] < count {
                break;
            }
            pos[j] = 0;
        }
    }
}

/// Clip the fourfold enlargement of a cube's cell range to the box: same
/// centre, four times the side, expressed as the covering cell range.
fn enlarged_ranges(ranges: &[(u32, u32)], cells: &[u32]) -> Vec<(u32, u32)> {
    ranges
        .iter()
        .zip(cells)
        .map(|(&(lo, hi), &g)| {
            let w = (hi - lo) as i64;
            let lo_half = 2 * lo as i64 - 3 * w;
            let hi_half = 2 * lo as i64 + 5 * w;
            let lo_cell = lo_half.div_euclid(2).clamp(0, g as i64) as u32;
            let hi_cell = (hi_half + 1).div_euclid(2).clamp(0, g as i64) as u32;
            (lo_cell, hi_cell)
        })
        .collect()
}

/// Distributional comparison on precomputed integral and maximal functions.
///
/// Part one scans the dyadic-cube partition at `params.cube_level`: for each
/// threshold and each cube whose fourfold enlargement contains a cell with
/// integral `<= lambda`, it measures the cells where the integral is at least
/// `lambda b` while the maximal function is at most `lambda d`, and reports
/// the largest such measure relative to `|Q| (d/b)^{n/(mn-alpha)}`.  Part two
/// reports, per threshold, the mass margin of
/// `omega({I > lambda b}) <= omega({M > lambda d}) + b^{-q}/2 omega({I > lambda})`
/// with `q` taken from the profile.
pub fn good_lambda_margins(
    i_alpha: &GridFunction,
    m_alpha: &GridFunction,
    omega: &GridFunction,
    prof: &ExponentProfile,
    params: &GoodLambdaParams,
) -> Result<GoodLambdaReport> {
    if !i_alpha.same_grid(m_alpha) || !i_alpha.same_grid(omega) {
        return Err(Error::ShapeMismatch(
            "integral, maximal function, and weight must share one grid".into(),
        ));
    }
    if i_alpha.dims() != prof.n() {
        return Err(Error::ShapeMismatch(format!(
            "profile dimension {} does not match grid dimension {}",
            prof.n(),
            i_alpha.dims()
        )));
    }
    if !omega.is_nonnegative() {
        return Err(Error::Domain("weight must be nonnegative".into()));
    }
    params.validate(i_alpha.levels())?;

    let iv = i_alpha.values();
    let mv = m_alpha.values();
    let wv = omega.values();
    let vol = i_alpha.cell_volume();
    let n = prof.n() as f64;
    let mn = (prof.m() * prof.n()) as f64;
    let kappa = n / (mn - prof.alpha());
    let b = params.b;
    let d = params.d;
    let absorb = 0.5 * b.powf(-prof.q());

    // Per-threshold masses and the emptying statistic, one pass per threshold.
    let mut margins = Vec::with_capacity(params.lambdas.len());
    let mut min_margin = f64::INFINITY;
    let mut emptying = 0.0f64;
    for &lambda in &params.lambdas {
        let mut upper = CompensatedSum::new();
        let mut maximal = CompensatedSum::new();
        let mut tail = CompensatedSum::new();
        let mut calm_peak = 0.0f64;
        for c in 0..iv.len() {
            if iv[c] > lambda * b {
                upper.add(wv[c]);
            }
            if mv[c] > lambda * d {
                maximal.add(wv[c]);
            }
            if iv[c] > lambda {
                tail.add(wv[c]);
            }
            if mv[c] <= lambda * d && iv[c] > calm_peak {
                calm_peak = iv[c];
            }
        }
        emptying = emptying.max(calm_peak / lambda);
        let upper_mass = upper.value() * vol;
        let maximal_mass = maximal.value() * vol;
        let tail_mass = absorb * tail.value() * vol;
        let margin = maximal_mass + tail_mass - upper_mass;
        min_margin = min_margin.min(margin);
        margins.push(LambdaMargin {
            lambda,
            upper_mass,
            maximal_mass,
            tail_mass,
            margin,
        });
    }

    // Local density statistic over the cube partition.
    let cells: Vec<u32> = (0..i_alpha.dims()).map(|j| i_alpha.cells(j)).collect();
    let cubes = cube_ranges(i_alpha.levels(), params.cube_level);
    let cube_measure: f64 = cubes[0]
        .iter()
        .zip(i_alpha.levels())
        .map(|(&(lo, hi), &l)| (hi - lo) as f64 * (0.5f64).powi(l as i32))
        .product();
    let density_scale = (d / b).powf(kappa);
    let mut best = f64::NEG_INFINITY;
    let mut witness: Option<(f64, GridRectangle)> = None;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for &lambda in &params.lambdas {
        for ranges in &cubes {
            let near = enlarged_ranges(ranges, &cells);
            if !box_any(i_alpha, &near, |c| iv[c] <= lambda) {
                skipped += 1;
                continue;
            }
            checked += 1;
            let mut count = 0usize;
            scan_box(i_alpha, ranges, |c| {
                if iv[c] >= lambda * b && mv[c] <= lambda * d {
                    count += 1;
                }
            });
            let ratio = count as f64 * vol / (cube_measure * density_scale);
            if ratio > best {
                best = ratio;
                witness = Some((lambda, GridRectangle::new(ranges.clone())?));
            }
        }
    }

    Ok(GoodLambdaReport {
        b,
        d,
        empirical_k: if witness.is_some() { best } else { 0.0 },
        k_witness: witness,
        cubes_checked: checked,
        cubes_skipped: skipped,
        emptying_threshold: emptying,
        margins,
        min_margin,
    })
}

/// Convenience wrapper: computes the fractional integral and the cube
/// maximal function of a nonnegative tuple, then runs
/// [`good_lambda_margins`].
pub fn good_lambda_check(
    fs: &[GridFunction],
    prof: &ExponentProfile,
    omega: &GridFunction,
    params: &GoodLambdaParams,
) -> Result<GoodLambdaReport> {
    for f in fs {
        if !f.is_nonnegative() {
            return Err(Error::Domain(
                "distributional comparison needs nonnegative inputs".into(),
            ));
        }
    }
    let i_alpha = fractional_integral(fs, prof)?;
    let m_alpha = cube_maximal(fs, prof)?;
    good_lambda_margins(&i_alpha, &m_alpha, omega, prof, params)
}

/// Largest measure fraction `delta` such that, within every dyadic cube of
/// the grid, every union of whole cells occupying at most a `delta` fraction
/// of the cube carries at most an `epsilon` fraction of its `omega`-mass.
/// Worst subsets take the heaviest cells first; the returned fraction sits
/// half a cell below the first violating count, so it is strictly feasible.
/// Cubes with zero mass impose no constraint, and `epsilon >= 1` gives 1.
pub fn empirical_delta(omega: &GridFunction, epsilon: f64) -> Result<f64> {
    if !omega.is_nonnegative() {
        return Err(Error::Domain("weight must be nonnegative".into()));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "mass share must be positive and finite, got {epsilon}"
        )));
    }
    if epsilon >= 1.0 {
        return Ok(1.0);
    }
    let min_level = omega.levels().iter().copied().min().unwrap_or(0);
    let mut delta = 1.0f64;
    for depth in 0..=min_level {
        for ranges in cube_ranges(omega.levels(), depth) {
            let mut cells: Vec<f64> = Vec::new();
            scan_box(omega, &ranges, |c| cells.push(omega.values()[c]));
            let mut total = CompensatedSum::new();
            for &v in &cells {
                total.add(v);
            }
            if total.value() <= 0.0 {
                continue;
            }
            cells.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let limit = epsilon * total.value();
            let mut run = CompensatedSum::new();
            let mut feasible = 0usize;
            for (k, &v) in cells.iter().enumerate() {
                run.add(v);
                if run.value() <= limit {
                    feasible = k + 1;
                } else {
                    break;
                }
            }
            delta = delta.min((feasible as f64 + 0.5) / cells.len() as f64);
        }
    }
    Ok(delta)
}

/// Parameter recipe for the distributional comparison.  Fixes `b = 2`, sets
/// the absorbed share `epsilon = b^{-q}/2`, measures the density modulus
/// `delta = empirical_delta(omega, epsilon)`, probes the local density
/// constant at `d = b/4`, solves
/// `delta = K * 4^n * (D/b)^{n/(mn-alpha)}` for `D` (the fourfold factor
/// accounts for the enlarged-cube overlap when local pieces are summed), and
/// finally halves `d` from `min(D, b/4)` until every margin is nonnegative.
/// The halving terminates: once `lambda * d` falls below the smallest
/// positive value of the maximal function, the maximal-side set contains
/// every cell where the data is alive, so the margin is at least the tail.
/// Thresholds form a geometric grid spanning the positive range of the
/// integral with a factor of two of slack at both ends.
pub fn good_lambda_recipe(
    i_alpha: &GridFunction,
    m_alpha: &GridFunction,
    omega: &GridFunction,
    prof: &ExponentProfile,
    lambda_count: usize,
    cube_level: u8,
) -> Result<GoodLambdaParams> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &v in i_alpha.values() {
        if v > 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let lambdas = if hi > 0.0 {
        log_lambda_grid(0.5 * lo, 2.0 * hi, lambda_count.max(2))?
    } else {
        log_lambda_grid(1.0, 2.0, lambda_count.max(2))?
    };
    let b = 2.0f64;
    let epsilon = 0.5 * b.powf(-prof.q());
    let delta = empirical_delta(omega, epsilon)?;
    let probe = GoodLambdaParams {
        b,
        d: 0.25 * b,
        lambdas: lambdas.clone(),
        cube_level,
    };
    let probe_report = good_lambda_margins(i_alpha, m_alpha, omega, prof, &probe)?;
    let n = prof.n() as f64;
    let mn = (prof.m() * prof.n()) as f64;
    let kappa = n / (mn - prof.alpha());
    let mut d = if probe_report.empirical_k > 0.0 && delta > 0.0 {
        let overlap = 4.0f64.powi(prof.n() as i32);
        let solved = b * (delta / (probe_report.empirical_k * overlap)).powf(1.0 / kappa);
        solved.min(0.25 * b)
    } else {
        0.25 * b
    };
    for _ in 0..200 {
        let params = GoodLambdaParams {
            b,
            d,
            lambdas: lambdas.clone(),
            cube_level,
        };
        let report = good_lambda_margins(i_alpha, m_alpha, omega, prof, &params)?;
        if report.all_margins_nonnegative() {
            return Ok(params);
        }
        d *= 0.5;
    }
    Err(Error::Domain(
        "no maximal-side multiplier closed the margins after 200 halvings".into(),
    ))
}

/// Strong and weak norm-comparison ratios of the fractional integral against
/// the cube maximal function, both with respect to the measure with density
/// `omega`:
///
/// * strong: `∫ I^q omega / ∫ M^q omega`;
/// * weak: the quotient of the best `lambda * mass({.. > lambda})^{1/q}`
///   estimates, raised to the `q`.
///
/// A zero tuple gives `(0, 0)` by convention.  A vanishing maximal side with
/// a live integral side is reported as a domain error (it cannot happen for
/// the cube family when every input is nonzero; see
/// [`remark53_experiment`] for the dyadic analogue that does break).
pub fn comparison_ratios(
    fs: &[GridFunction],
    prof: &ExponentProfile,
    omega: &GridFunction,
    q: f64,
) -> Result<(f64, f64)> {
    check_tuple(fs, prof)?;
    for f in fs {
        if !f.is_nonnegative() {
            return Err(Error::Domain(
                "norm comparison needs nonnegative inputs".into(),
            ));
        }
    }
    if !omega.same_grid(&fs[0]) {
        return Err(Error::ShapeMismatch(
            "weight must share the tuple's grid".into(),
        ));
    }
    if !omega.is_nonnegative() {
        return Err(Error::Domain("weight must be nonnegative".into()));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "q must lie in (0, ∞), got {q}"
        )));
    }
    let i_alpha = fractional_integral(fs, prof)?;
    let m_alpha = cube_maximal(fs, prof)?;
    let strong_num = weighted_power_integral(&i_alpha, q, Some(omega))?;
    let strong_den = weighted_power_integral(&m_alpha, q, Some(omega))?;
    let strong = if strong_den > 0.0 {
        strong_num / strong_den
    } else if strong_num == 0.0 {
        0.0
    } else {
        return Err(Error::Domain(
            "maximal side vanishes in the weighted norm while the integral side does not".into(),
        ));
    };
    let weak_num = weak_norm_estimate(&i_alpha, omega, q)?;
    let weak_den = weak_norm_estimate(&m_alpha, omega, q)?;
    let weak = if weak_den > 0.0 {
        (weak_num / weak_den).powf(q)
    } else if weak_num == 0.0 {
        0.0
    } else {
        return Err(Error::Domain(
            "maximal side vanishes in the weak norm while the integral side does not".into(),
        ));
    };
    Ok((strong, weak))
}

/// Outcome of the dyadic-failure experiment on `[-1, 1)^n`.
#[derive(Clone, Debug)]
pub struct Remark53Report {
    /// The three grid resolutions used; cells have width `2^{-resolution}`.
    pub resolutions: [u8; 3],
    /// Largest dyadic cube maximal value over the positive orthant at each
    /// resolution.  Exactly `0.0` when the vanishing claim holds: every
    /// anchored dyadic cube meeting `[0,1)^n` stays inside it, where the
    /// data vanishes.
    pub dyadic_sup: [f64; 3],
    /// Quadrature of the fractional integral at the positive-orthant cell
    /// nearest the origin, per resolution.  Strictly increasing growth is
    /// the finite-grid shadow of the blow-up at the origin.
    pub origin_values: [f64; 3],
    /// Quadrature at the far corner cell of the positive orthant at the base
    /// resolution; positive and finite.
    pub far_corner: f64,
    /// All three assertions combined: exact vanishing, strict growth, and a
    /// positive finite far-corner value.
    pub passed: bool,
}

/// Single-function experiment showing that no distributional comparison
/// against the *dyadic* cube family is possible.  On `[-1, 1)^n`, with the
/// dyadic structure anchored at the origin (the level-0 cubes are the `2^n`
/// orthants), the data `f(x) = |x|^{-alpha}` on the negative orthant and `0`
/// elsewhere gives a dyadic cube maximal function that vanishes identically
/// on the positive orthant — every anchored cube meeting it is disjoint from
/// the support — while the fractional integral blows up towards the origin.
/// Runs at resolutions `l`, `l+1`, `l+2` (cell width `2^{-l}` and finer) and
/// checks the vanishing exactly, the origin growth strictly, and that the
/// integral stays finite away from the singularity.
///
/// The grid here is built internally (the box has side 2, unlike
/// [`GridFunction`]'s unit box) with `1 <= l <= 12`, `1 <= n <= 3`, and
/// `0 < alpha < n`.
pub fn remark53_experiment(alpha: f64, l: u8, n: usize) -> Result<Remark53Report> {
    if n == 0 || n > 3 {
        return Err(Error::InvalidArgument(format!(
            "dimension must be 1..=3, got {n}"
        )));
    }
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::InvalidArgument(format!(
            "order must lie in (0, n) = (0, {n}), got {alpha}"
        )));
    }
    if !(1..=12).contains(&l) || n as u32 * (l as u32 + 3) > 22 {
        return Err(Error::InvalidArgument(format!(
            "resolution {l} out of range for dimension {n}"
        )));
    }
    let resolutions = [l, l + 1, l + 2];
    let mut dyadic_sup = [0.0f64; 3];
    let mut origin_values = [0.0f64; 3];
    let mut far_corner = 0.0f64;
    for (slot, &res) in resolutions.iter().enumerate() {
        let (sup, origin, corner) = orthant_run(alpha, res, n);
        dyadic_sup[slot] = sup;
        origin_values[slot] = origin;
        if slot == 0 {
            far_corner = corner;
        }
    }
    let increasing = origin_values[0] < origin_values[1] && origin_values[1] < origin_values[2];
    let passed = dyadic_sup.iter().all(|&v| v == 0.0)
        && increasing
        && far_corner > 0.0
        && far_corner.is_finite();
    Ok(Remark53Report {
        resolutions,
        dyadic_sup,
        origin_values,
        far_corner,
        passed,
    })
}

/// One resolution of the dyadic-failure experiment: the sup of the dyadic
/// cube maximal over the positive orthant, the integral quadrature at the
/// positive cell nearest the origin, and at the far corner cell.
fn orthant_run(alpha: f64, res: u8, n: usize) -> (f64, f64, f64) {
    let per_axis = 1usize << (res + 1);
    let half = per_axis / 2;
    let h = (0.5f64).powi(res as i32);
    let center = |i: usize| -1.0 + (i as f64 + 0.5) * h;
    let total = per_axis.pow(n as u32);
    let mut idx = vec![0usize; n];
    let decode = |lin: usize, idx: &mut [usize]| {
        let mut rest = lin;
        for j in (0..n).rev() {
            idx[j] = rest % per_axis;
            rest /= per_axis;
        }
    };
    let mut values = vec![0.0f64; total];
    for (lin, v) in values.iter_mut().enumerate() {
        decode(lin, &mut idx);
        if idx.iter().all(|&i| i < half) {
            let norm2: f64 = (0..n).map(|j| center(idx[j]).powi(2)).sum();
            *v = norm2.sqrt().powf(-alpha);
        }
    }

    // Dyadic cube maximal over the positive orthant: anchored cubes of side
    // 2^{-depth} for depth 0..=res, each contained in the orthant, valued as
    // |Q|^{alpha/n - 1} times the integral of the data over Q.
    let mut sup = f64::NEG_INFINITY;
    let vol = h.powi(n as i32);
    for depth in 0..=res {
        let w = 1usize << (res - depth);
        let count = 1usize << depth;
        let measure = (0.5f64).powi(depth as i32 * n as i32);
        let factor = measure.powf(alpha / n as f64 - 1.0);
        let mut pos = vec![0usize; n];
        'cubes: loop {
            let mut mass = CompensatedSum::new();
            let mut cell = vec![0usize; n];
            'cells: loop {
                let mut lin = 0usize;
                for j in 0..n {
                    lin = lin * per_axis + half + pos[j] * w + cell[j];
                }
                mass.add(values[lin]);
                let mut j = n;
                loop {
                    if j == 0 {
                        break 'cells;
                    }
                    j -= 1;
                    cell[j] += 1;
                    if cell[j] < w {
                        break;
                    }
                    cell[j] = 0;
                }
            }
            sup = sup.max(factor * mass.value() * vol);
            let mut j = n;
            loop {
                if j == 0 {
                    break 'cubes;
                }
                j -= 1;
                pos[j] += 1;
                if pos[j] < count {
                    break;
                }
                pos[j] = 0;
            }
        }
    }

    // Integral quadrature at a point: sum over support cells (the negative
    // orthant), kernel distance from cell centre to cell centre.
    let quadrature = |x: &[f64]| -> f64 {
        let mut acc = CompensatedSum::new();
        let mut idx = vec![0usize; n];
        for (lin, &v) in values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            decode(lin, &mut idx);
            let dist2: f64 = (0..n).map(|j| (x[j] - center(idx[j])).powi(2)).sum();
            acc.add(v * dist2.sqrt().powf(alpha - n as f64));
        }
        acc.value() * vol
    };
    let origin_cell: Vec<f64> = vec![center(half); n];
    let corner_cell: Vec<f64> = vec![center(per_axis - 1); n];
    (sup, quadrature(&origin_cell), quadrature(&corner_cell))
}
