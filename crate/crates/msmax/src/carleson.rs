//! Convexity-gap inequality on averaged triples and dyadic Carleson sums.
//!
//! Three related pieces live here:
//!
//! * [`elementary_inequality_gap`] — empirical infimum of the gap in a
//!   convexity inequality over `2^n`-tuples of admissible triples
//!   `(F, f, ν)` whose means reproduce the parent triple. A positive
//!   infimum is expected for `p < q`; for `p >= q` a canonical all-ones
//!   tuple drives the gap to (or below) zero and is always evaluated.
//! * [`embedding_ratio`] / [`embedding_sup`] — dyadic embedding sums
//!   `Σ_I (∫_I ω^{1-p'})^{-q/p'} (∫_I f)^q` over the sub-rectangles of a
//!   dyadic root, normalised by `(∫ f^p ω)^{q/p}`.
//! * [`CarlesonSequence`] with [`carleson_condition_constant`] and
//!   [`carleson_embedding_check`] — equivalence evidence between the
//!   testing condition `μ_I <= C_2 ω(I)^{q/p}` and the embedding
//!   `Σ_I μ_I (avg_I f)^q <= C_1 (∫ f^p ω)^{q/p}`, with indicator test
//!   functions giving the exact direction `C_1 >= C_2`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{
    indicator, weighted_power_integral, CompensatedSum, DyadicRectangle, GridFunction, SumTable,
};
use crate::maximal::conjugate;

/// A triple `(energy, mean, dual)` constrained to the admissible region
/// `energy >= 0`, `dual > 0`, `0 <= mean <= energy^{1/p} dual^{1/p'}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleSample {
    /// Upper bound datum `F` (an averaged p-th power in applications).
    pub energy: f64,
    /// Middle datum `f` (an averaged function value).
    pub mean: f64,
    /// Dual datum `ν` (an averaged dual-weight value), strictly positive.
    pub dual: f64,
}

impl TripleSample {
    pub fn new(energy: f64, mean: f64, dual: f64) -> Self {
        Self { energy, mean, dual }
    }

    /// Membership in the admissible region for the exponent `p`.
    pub fn admissible(&self, p: f64) -> bool {
        self.energy >= 0.0
            && self.dual > 0.0
            && self.mean >= 0.0
            && self.mean <= self.energy.powf(1.0 / p) * self.dual.powf(1.0 / conjugate(p))
    }
}

/// Outcome of an [`elementary_inequality_gap`] scan.
#[derive(Clone, Debug)]
pub struct GapReport {
    /// Empirical infimum of the normalised gap over evaluated tuples.
    pub gap: f64,
    /// The minimising tuple.
    pub witness: Vec<TripleSample>,
    /// Tuples that entered the infimum.
    pub evaluated: usize,
    /// Tuples rejected for violating admissibility or the `dual <= b·mean`
    /// comparability guard.
    pub rejected: usize,
    /// Tuples skipped because their mean datum vanished (no constraint).
    pub skipped_zero: usize,
}

/// Gap of one tuple: `[(F - f^p/(2ν^{p/p'}))^{q/p}
/// - 2^{-nq/p} Σ_i (F_i - f_i^p/(2ν_i^{p/p'}))^{q/p}] · ν^{q/p'} / f^q`,
/// where `(F, f, ν)` are the tuple means. `None` when `f = 0`.
fn tuple_gap(p: f64, q: f64, n: usize, tuple: &[TripleSample]) -> Option<f64> {
    let size = tuple.len() as f64;
    let pc = conjugate(p);
    let mean = |get: fn(&TripleSample) -> f64| tuple.iter().map(get).sum::<f64>() / size;
    let big_f = mean(|t| t.energy);
    let f = mean(|t| t.mean);
    let nu = mean(|t| t.dual);
    if f == 0.0 {
        return None;
    }
    let reduced = |t: &TripleSample| t.energy - t.mean.powf(p) / (2.0 * t.dual.powf(p / pc));
    let lhs = (big_f - f.powf(p) / (2.0 * nu.powf(p / pc))).powf(q / p);
    let scale = (2.0f64).powf(-(n as f64) * q / p);
    let sum: f64 = tuple.iter().map(|t| reduced(t).powf(q / p)).sum();
    Some((lhs - scale * sum) * nu.powf(q / pc) / f.powf(q))
}

/// Scans `2^n`-tuples of admissible triples for the smallest normalised gap
/// in the convexity inequality (see module docs). Tuples must have length
/// `2^n`; the parent triple is always the tuple mean, so the averaging
/// identities hold exactly by construction. Tuples violating admissibility
/// or `dual_i <= b · (mean of duals)` are rejected and counted. For
/// `p >= q` the all-ones tuple is appended as a canonical witness (it shows
/// the gap cannot be positive there).
pub fn elementary_inequality_gap(
    p: f64,
    q: f64,
    n: usize,
    b: f64,
    samples: &[Vec<TripleSample>],
) -> Result<GapReport> {
    if !(p > 1.0) || !q.is_finite() || !(q > 0.0) {
        return Err(Error::InvalidArgument(
            "exponents must satisfy p > 1, q > 0".into(),
        ));
    }
    if n == 0 || n > crate::grid::MAX_DIMS {
        return Err(Error::InvalidArgument("dimension must be 1..=3".into()));
    }
    let size = 1usize << n;
    if !(b > 0.0) || b >= size as f64 {
        return Err(Error::InvalidArgument(format!(
            "comparability bound must lie in (0, 2^n) = (0, {size}), got {b}"
        )));
    }

    let mut best: Option<(f64, Vec<TripleSample>)> = None;
    let mut evaluated = 0usize;
    let mut rejected = 0usize;
    let mut skipped_zero = 0usize;

    let consider = |tuple: &[TripleSample],
                    best: &mut Option<(f64, Vec<TripleSample>)>,
                    evaluated: &mut usize,
                    skipped_zero: &mut usize| {
        match tuple_gap(p, q, n, tuple) {
            Some(g) => {
                *evaluated += 1;
                if best.as_ref().is_none_or(|(bg, _)| g < *bg) {
                    *best = Some((g, tuple.to_vec()));
                }
            }
            None => *skipped_zero += 1,
        }
    };

    for tuple in samples {
        if tuple.len() != size {
            rejected += 1;
            continue;
        }
        let nu_mean = tuple.iter().map(|t| t.dual).sum::<f64>() / size as f64;
        let ok =
            tuple.iter().all(|t| t.admissible(p)) && tuple.iter().all(|t| t.dual <= b * nu_mean);
        if !ok {
            rejected += 1;
            continue;
        }
        consider(tuple, &mut best, &mut evaluated, &mut skipped_zero);
    }

    if p >= q {
        let ones = vec![TripleSample::new(1.0, 1.0, 1.0); size];
        consider(&ones, &mut best, &mut evaluated, &mut skipped_zero);
    }

    match best {
        Some((gap, witness)) => Ok(GapReport {
            gap,
            witness,
            evaluated,
            rejected,
            skipped_zero,
        }),
        None => Err(Error::Domain(
            "no admissible tuple with a nonzero mean datum".into(),
        )),
    }
}

/// Draws `count` admissible tuples for [`elementary_inequality_gap`]:
/// `energy` and `dual` log-uniform over `[1e-3, 1e3]`, `mean` uniform over
/// the admissible interval, tuples violating `dual_i <= b · mean-of-duals`
/// redrawn (broad coverage without boundary bias).
pub fn sample_admissible_tuples<R: Rng>(
    p: f64,
    n: usize,
    b: f64,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<TripleSample>> {
    let size = 1usize << n;
    let pc = conjugate(p);
    let log_span = (1e3f64 / 1e-3).ln();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let max_attempts = count.saturating_mul(1000).max(1000);
    while out.len() < count && attempts < max_attempts {
        attempts += 1;
        let tuple: Vec<TripleSample> = (0..size)
            .map(|_| {
                let energy = 1e-3 * (rng.random::<f64>() * log_span).exp();
                let dual = 1e-3 * (rng.random::<f64>() * log_span).exp();
                let cap = energy.powf(1.0 / p) * dual.powf(1.0 / pc);
                let mean = rng.random::<f64>() * cap;
                TripleSample::new(energy, mean, dual)
            })
            .collect();
        let nu_mean = tuple.iter().map(|t| t.dual).sum::<f64>() / size as f64;
        if tuple.iter().all(|t| t.dual <= b * nu_mean) {
            out.push(tuple);
        }
    }
    out
}

/// Dyadic sub-rectangles of `root` representable on a grid with the given
/// exponents (including `root` itself), in deterministic order.
pub fn dyadic_within(root: &DyadicRectangle, levels: &[u8]) -> Result<Vec<DyadicRectangle>> {
    if root.dims() != levels.len() {
        return Err(Error::ShapeMismatch(
            "root dimension must match grid".into(),
        ));
    }
    root.to_grid_rectangle(levels)?; // validates it fits
    let per_axis: Vec<Vec<(u8, u32)>> = root
        .axes()
        .iter()
        .enumerate()
        .map(|(j, &(rl, rk))| {
            let mut v = Vec::new();
            for l in rl..=levels[j] {
                let base = rk << (l - rl);
                for k in 0..(1u32 << (l - rl)) {
                    v.push((l, base + k));
                }
            }
            v
        })
        .collect();
    let mut out: Vec<Vec<(u8, u32)>> = vec![Vec::new()];
    for axis in &per_axis {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &item in axis {
                let mut row = prefix.clone();
                row.push(item);
                next.push(row);
            }
        }
        out = next;
    }
    out.into_iter().map(DyadicRectangle::new).collect()
}

/// Both forms of the dyadic embedding sum plus the normaliser.
#[derive(Clone, Copy, Debug)]
pub struct EmbeddingBreakdown {
    /// `Σ_I (∫_I ω^{1-p'})^{-q/p'} (∫_I f)^q` — the form used by
    /// [`embedding_ratio`].
    pub integral_sum: f64,
    /// `Σ_I (∫_I ω^{1-p'})^{-q/p'} (avg_I f)^q` — the averaged variant,
    /// reported alongside for comparison.
    pub average_sum: f64,
    /// `(∫ f^p ω)^{q/p}`.
    pub normaliser: f64,
}

/// Computes both embedding sums over the dyadic sub-rectangles of `root`.
pub fn embedding_terms(
    w: &GridFunction,
    f: &GridFunction,
    p: f64,
    q: f64,
    root: &DyadicRectangle,
) -> Result<EmbeddingBreakdown> {
    if !(p > 1.0 && q > p) {
        return Err(Error::InvalidArgument(
            "embedding sums need 1 < p < q".into(),
        ));
    }
    if !w.same_grid(f) {
        return Err(Error::ShapeMismatch(
            "weight and function must share a grid".into(),
        ));
    }
    if !w.values().iter().all(|&v| v > 0.0) {
        return Err(Error::Domain("weight must be strictly positive".into()));
    }
    if !f.is_nonnegative() {
        return Err(Error::Domain("function must be nonnegative".into()));
    }
    let normaliser = weighted_power_integral(f, p, Some(w))?.powf(q / p);
    if normaliser == 0.0 {
        return Err(Error::Domain("function must not vanish identically".into()));
    }
    let pc = conjugate(p);
    let dual_table = SumTable::build(&w.map(|v| v.powf(1.0 - pc)));
    let f_table = SumTable::build(f);
    let mut integral_sum = CompensatedSum::new();
    let mut average_sum = CompensatedSum::new();
    for rect in dyadic_within(root, w.levels())? {
        let dual_mass = dual_table.dyadic_integral(&rect)?;
        let f_mass = f_table.dyadic_integral(&rect)?;
        let factor = dual_mass.powf(-q / pc);
        integral_sum.add(factor * f_mass.powf(q));
        average_sum.add(factor * (f_mass / rect.measure()).powf(q));
    }
    Ok(EmbeddingBreakdown {
        integral_sum: integral_sum.value(),
        average_sum: average_sum.value(),
        normaliser,
    })
}

/// Ratio of the dyadic embedding sum to its normaliser (see module docs);
/// invariant under positive scaling of `f`.
pub fn embedding_ratio(
    w: &GridFunction,
    f: &GridFunction,
    p: f64,
    q: f64,
    root: &DyadicRectangle,
) -> Result<f64> {
    let terms = embedding_terms(w, f, p, q, root)?;
    Ok(terms.integral_sum / terms.normaliser)
}

/// Largest embedding ratio over a corpus, with the index of the maximiser.
/// Members that vanish identically are skipped.
pub fn embedding_sup(
    w: &GridFunction,
    p: f64,
    q: f64,
    root: &DyadicRectangle,
    corpus: &[GridFunction],
) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, f) in corpus.iter().enumerate() {
        match embedding_ratio(w, f, p, q, root) {
            Ok(r) => {
                if best.is_none_or(|(bv, _)| r > bv) {
                    best = Some((r, i));
                }
            }
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| Error::Domain("corpus has no usable member".into()))
}

/// Nonnegative numbers attached to dyadic rectangles of a box.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CarlesonSequence {
    map: BTreeMap<DyadicRectangle, f64>,
}

impl CarlesonSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a sequence from a function over every dyadic rectangle of the
    /// grid with the given exponents.
    pub fn from_fn<F: Fn(&DyadicRectangle) -> f64>(levels: &[u8], f: F) -> Result<Self> {
        let mut seq = Self::new();
        for rect in crate::grid::enumerate_dyadic(levels) {
            let v = f(&rect);
            seq.insert(rect, v)?;
        }
        Ok(seq)
    }

    pub fn insert(&mut self, rect: DyadicRectangle, value: f64) -> Result<()> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sequence values must be finite and nonnegative, got {value}"
            )));
        }
        self.map.insert(rect, value);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicRectangle, f64)> {
        self.map.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Checks that every key is representable on the grid.
    pub fn fits(&self, levels: &[u8]) -> bool {
        self.map.keys().all(|r| r.to_grid_rectangle(levels).is_ok())
    }

    /// Reads the line format `level-vector index-vector value`, e.g.
    /// `1,2 0,3 0.75` (comments start with `#`).
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut seq = Self::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (levels, indices, value) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `levels indices value`",
                        ln + 1
                    )))
                }
            };
            let levels: Vec<u8> = levels
                .split(',')
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Parse(format!("bad level `{t}`")))
                })
                .collect::<Result<_>>()?;
            let indices: Vec<u32> = indices
                .split(',')
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Parse(format!("bad index `{t}`")))
                })
                .collect::<Result<_>>()?;
            if levels.len() != indices.len() {
                return Err(Error::Parse(format!(
                    "line {}: level/index arity mismatch",
                    ln + 1
                )));
            }
            let value: f64 = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad value `{value}`")))?;
            let rect = DyadicRectangle::new(levels.into_iter().zip(indices).collect())?;
            seq.insert(rect, value)?;
        }
        Ok(seq)
    }

    /// Writes the format accepted by [`CarlesonSequence::read`].
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (rect, value) in self.iter() {
            let levels: Vec<String> = rect.axes().iter().map(|&(l, _)| l.to_string()).collect();
            let indices: Vec<String> = rect.axes().iter().map(|&(_, k)| k.to_string()).collect();
            out.push_str(&format!(
                "{} {} {value:?}\n",
                levels.join(","),
                indices.join(",")
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Testing-condition constant `sup_I μ_I / ω(I)^{q/p}` (0 for an empty or
/// identically-zero sequence).
pub fn carleson_condition_constant(
    mu: &CarlesonSequence,
    w: &GridFunction,
    p: f64,
    q: f64,
) -> Result<f64> {
    if !(p > 1.0 && q > 0.0) {
        return Err(Error::InvalidArgument("need p > 1 and q > 0".into()));
    }
    if !mu.fits(w.levels()) {
        return Err(Error::OutOfBounds(
            "sequence key exceeds the weight grid".into(),
        ));
    }
    if !w.values().iter().all(|&v| v > 0.0) {
        return Err(Error::Domain("weight must be strictly positive".into()));
    }
    let table = SumTable::build(w);
    let mut best = 0.0f64;
    for (rect, value) in mu.iter() {
        let mass = table.dyadic_integral(rect)?;
        let quotient = value / mass.powf(q / p);
        if quotient > best {
            best = quotient;
        }
    }
    Ok(best)
}

/// Outcome of [`carleson_embedding_check`].
#[derive(Clone, Debug)]
pub struct CarlesonCheck {
    /// Empirical embedding constant `C_1` over corpus ∪ indicators.
    pub embedding_constant: f64,
    /// Testing-condition constant `C_2`.
    pub condition_constant: f64,
    /// Description of the maximising test function.
    pub argmax: String,
    /// Indicator inequality `Σ_J μ_J (avg_J χ_I)^q >= μ_I` held for every
    /// key `I` (it is a single nonnegative term of the sum, so failure
    /// indicates an implementation bug, not a mathematical one).
    pub indicator_inequality_ok: bool,
    /// Corpus members skipped for vanishing identically.
    pub skipped_zero: usize,
}

/// Empirical two-sided Carleson check: computes `C_2`, evaluates the
/// embedding quotient `Σ_I μ_I (avg_I f)^q / (∫ f^p ω)^{q/p}` over the
/// corpus extended by the indicator of every key rectangle, and verifies
/// the exact indicator direction which forces `C_1 >= C_2`.
pub fn carleson_embedding_check(
    mu: &CarlesonSequence,
    w: &GridFunction,
    p: f64,
    q: f64,
    corpus: &[GridFunction],
) -> Result<CarlesonCheck> {
    let condition_constant = carleson_condition_constant(mu, w, p, q)?;
    let levels = w.levels();

    let quotient = |f: &GridFunction| -> Result<Option<(f64, f64)>> {
        if !f.same_grid(w) {
            return Err(Error::ShapeMismatch(
                "corpus member must share the weight grid".into(),
            ));
        }
        let normaliser = weighted_power_integral(f, p, Some(w))?.powf(q / p);
        if normaliser == 0.0 {
            return Ok(None);
        }
        let table = SumTable::build(&f.abs());
        let mut sum = CompensatedSum::new();
        for (rect, value) in mu.iter() {
            let avg = table.dyadic_integral(rect)? / rect.measure();
            sum.add(value * avg.powf(q));
        }
        Ok(Some((sum.value(), sum.value() / normaliser)))
    };

    let mut best: Option<(f64, String)> = None;
    let mut skipped_zero = 0usize;
    for (i, f) in corpus.iter().enumerate() {
        match quotient(f)? {
            Some((_, ratio)) => {
                if best.as_ref().is_none_or(|(bv, _)| ratio > *bv) {
                    best = Some((ratio, format!("corpus[{i}]")));
                }
            }
            None => skipped_zero += 1,
        }
    }

    let mass_table = SumTable::build(w);
    let mut indicator_inequality_ok = true;
    for (rect, value) in mu.iter() {
        let chi = indicator(levels, w.origin(), &rect.to_grid_rectangle(levels)?)?;
        let (lhs_sum, ratio) = quotient(&chi)?.expect("indicators have positive mass");
        if lhs_sum + 1e-12 * value.max(1.0) < value {
            indicator_inequality_ok = false;
        }
        if best.as_ref().is_none_or(|(bv, _)| ratio > *bv) {
            best = Some((ratio, format!("chi {}", rect.display_key())));
        }
        // Re-derivable lower bound: ratio >= μ_I / ω(I)^{q/p}.
        debug_assert!(ratio + 1e-9 >= value / mass_table.dyadic_integral(rect)?.powf(q / p));
    }

    let (embedding_constant, argmax) = best.unwrap_or((0.0, "none".into()));
    Ok(CarlesonCheck {
        embedding_constant,
        condition_constant,
        argmax,
        indicator_inequality_ok,
        skipped_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_ones_tuple_gap_is_zero_at_equal_exponents() {
        // Mean triple (1, 1, 1): LHS (1 - 1/2)^1 = 1/2, subtracted sum
        // 2^{-1} * 2 * 1/2 = 1/2, gap exactly 0.
        let report = elementary_inequality_gap(2.0, 2.0, 1, 1.5, &[]).unwrap();
        assert_eq!(report.gap, 0.0);
        assert_eq!(report.witness.len(), 2);
        // Strictly larger p drives the gap negative.
        let report = elementary_inequality_gap(4.0, 2.0, 1, 1.5, &[]).unwrap();
        assert!(report.gap < 0.0);
    }

    #[test]
    fn random_scan_is_positive_below_the_critical_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples = sample_admissible_tuples(2.0, 1, 1.9, 20_000, &mut rng);
        assert_eq!(samples.len(), 20_000);
        let report = elementary_inequality_gap(2.0, 4.0, 1, 1.9, &samples).unwrap();
        assert!(report.gap > 0.0, "gap {}", report.gap);
        assert_eq!(report.evaluated + report.skipped_zero, 20_000);
        assert_eq!(report.rejected, 0);
    }

    #[test]
    fn degenerate_and_invalid_tuples_are_counted() {
        let zero = vec![TripleSample::new(1.0, 0.0, 1.0); 2];
        let bad_len = vec![TripleSample::new(1.0, 0.5, 1.0); 3];
        let inadmissible = vec![TripleSample::new(1.0, 5.0, 1.0); 2];
        let lopsided = vec![
            TripleSample::new(1.0, 0.1, 10.0),
            TripleSample::new(1.0, 0.1, 0.1),
        ];
        let good = vec![TripleSample::new(2.0, 0.5, 1.0); 2];
        let report = elementary_inequality_gap(
            2.0,
            4.0,
            1,
            1.5,
            &[zero, bad_len, inadmissible, lopsided, good],
        )
        .unwrap();
        assert_eq!(report.skipped_zero, 1);
        assert_eq!(report.rejected, 3);
        assert_eq!(report.evaluated, 1);
        assert!(elementary_inequality_gap(2.0, 4.0, 1, 2.0, &[]).is_err());
        assert!(elementary_inequality_gap(2.0, 4.0, 1, 0.0, &[]).is_err());
    }

    #[test]
    fn embedding_closed_form() {
        // ω ≡ 1, f ≡ 1, p = 2, q = 4: each level-l interval contributes
        // (2^{-l})^{-2} (2^{-l})^4 = 4^{-l}, and there are 2^l of them.
        for levels in [3u8, 5, 7] {
            let w = GridFunction::constant(&[levels], 1.0).unwrap();
            let f = GridFunction::constant(&[levels], 1.0).unwrap();
            let root = DyadicRectangle::root(1).unwrap();
            let ratio = embedding_ratio(&w, &f, 2.0, 4.0, &root).unwrap();
            let expect = 2.0 - (0.5f64).powi(levels as i32);
            assert!(
                (ratio - expect).abs() <= 1e-12,
                "L={levels}: {ratio} vs {expect}"
            );
        }
    }

    #[test]
    fn embedding_matches_direct_summation() {
        // Independent direct-summation oracle on a small grid.
        let w = crate::weights::dyadic_martingale_weight(3, 3, 0.3, 0.7, &[3]).unwrap();
        let mut f = GridFunction::constant(&[3], 0.0).unwrap();
        for (i, v) in [1.0, 2.0, 0.0, 0.5, 0.0, 0.0, 3.0, 1.0].iter().enumerate() {
            f.values_mut()[i] = *v;
        }
        let (p, q) = (2.0, 4.0);
        let pc = conjugate(p);
        let root = DyadicRectangle::root(1).unwrap();
        let fast = embedding_ratio(&w, &f, p, q, &root).unwrap();
        let vol = w.cell_volume();
        let mut lhs = 0.0;
        for l in 0..=3u8 {
            let span = 1usize << (3 - l);
            for k in 0..(1usize << l) {
                let cells = (k * span)..((k + 1) * span);
                let dual: f64 = cells
                    .clone()
                    .map(|i| w.values()[i].powf(1.0 - pc))
                    .sum::<f64>()
                    * vol;
                let fmass: f64 = cells.map(|i| f.values()[i]).sum::<f64>() * vol;
                lhs += dual.powf(-q / pc) * fmass.powf(q);
            }
        }
        let rhs: f64 = (0..8)
            .map(|i| f.values()[i].powf(p) * w.values()[i])
            .sum::<f64>()
            * vol;
        let expect = lhs / rhs.powf(q / p);
        assert!((fast - expect).abs() <= 1e-9 * expect.abs());
        // Scaling invariance.
        let scaled = embedding_ratio(&w, &f.map(|v| 3.0 * v), p, q, &root).unwrap();
        assert!((scaled - fast).abs() <= 1e-9 * fast);
    }

    #[test]
    fn embedding_sup_over_corpus() {
        let w = GridFunction::constant(&[4], 1.0).unwrap();
        let root = DyadicRectangle::root(1).unwrap();
        let ones = GridFunction::constant(&[4], 1.0).unwrap();
        let zero = GridFunction::constant(&[4], 0.0).unwrap();
        let corpus = vec![zero, ones.clone(), ones.map(|v| 2.0 * v)];
        let (sup, idx) = embedding_sup(&w, 2.0, 4.0, &root, &corpus).unwrap();
        let single = embedding_ratio(&w, &ones, 2.0, 4.0, &root).unwrap();
        assert!((sup - single).abs() <= 1e-12);
        assert!(idx == 1 || idx == 2);
        assert!(embedding_sup(&w, 2.0, 4.0, &root, &corpus[..1]).is_err());
    }

    #[test]
    fn condition_constant_basics() {
        let w = GridFunction::constant(&[3], 1.0).unwrap();
        let table = SumTable::build(&w);
        let (p, q) = (2.0, 4.0);
        let matched = CarlesonSequence::from_fn(&[3], |rect| {
            table.dyadic_integral(rect).unwrap().powf(q / p)
        })
        .unwrap();
        let c2 = carleson_condition_constant(&matched, &w, p, q).unwrap();
        assert!((c2 - 1.0).abs() <= 1e-12);
        let zero = CarlesonSequence::from_fn(&[3], |_| 0.0).unwrap();
        assert_eq!(carleson_condition_constant(&zero, &w, p, q).unwrap(), 0.0);
    }

    #[test]
    fn embedding_check_indicator_direction() {
        let w = crate::weights::dyadic_martingale_weight(7, 3, 0.3, 0.7, &[4]).unwrap();
        let table = SumTable::build(&w);
        let (p, q) = (2.0, 4.0);
        let mu = CarlesonSequence::from_fn(&[4], |rect| {
            table.dyadic_integral(rect).unwrap().powf(q / p)
        })
        .unwrap();
        let corpus = vec![GridFunction::constant(&[4], 1.0).unwrap()];
        let check = carleson_embedding_check(&mu, &w, p, q, &corpus).unwrap();
        assert!(check.indicator_inequality_ok);
        assert!((check.condition_constant - 1.0).abs() <= 1e-12);
        // Indicator tests force C_1 >= C_2.
        assert!(check.embedding_constant >= check.condition_constant - 1e-12);
    }

    #[test]
    fn sequence_file_round_trip() {
        let dir = std::env::temp_dir().join("msmax-carleson-io");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("seq.txt");
        let mut seq = CarlesonSequence::new();
        seq.insert(DyadicRectangle::new(vec![(1, 0), (2, 3)]).unwrap(), 0.75)
            .unwrap();
        seq.insert(DyadicRectangle::new(vec![(0, 0), (0, 0)]).unwrap(), 2.0)
            .unwrap();
        seq.write(&path).unwrap();
        let back = CarlesonSequence::read(&path).unwrap();
        assert_eq!(seq, back);
        assert!(back.fits(&[3, 3]));
        assert!(!back.fits(&[1, 1]));
    }

    #[test]
    fn dyadic_within_counts() {
        // Under the root: full dyadic family.
        let root = DyadicRectangle::root(1).unwrap();
        assert_eq!(dyadic_within(&root, &[3]).unwrap().len(), 15);
        // Under a child: its own subtree only.
        let child = DyadicRectangle::new(vec![(1, 1)]).unwrap();
        let subtree = dyadic_within(&child, &[3]).unwrap();
        assert_eq!(subtree.len(), 7);
        assert!(subtree.iter().all(|r| child.contains(r)));
    }
}
