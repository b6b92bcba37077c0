//! Scenario-driven verification harness: parses a scenario description,
//! realises weights and a seeded function corpus on the requested grids,
//! dispatches to one of the named end-to-end checks, and assembles a
//! deterministic plain-text report.
//!
//! Reports are byte-identical across runs of the same scenario and seed;
//! the only nondeterministic content (timing) goes into `# `-prefixed
//! footer lines that comparisons are expected to strip.

mod checks;

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::maximal::{ExponentProfile, Family};
use crate::weights::{WeightSpec, WeightVector};

/// The check identifiers [`run_scenario`] understands.
pub const CHECK_IDS: [&str; 12] = [
    "lemma31",
    "carleson",
    "cor43",
    "shiftdom",
    "thm21",
    "thm22",
    "prop41",
    "prop42",
    "goodlambda",
    "prop51",
    "remark53",
    "constants",
];

fn default_seed() -> u64 {
    42
}

fn default_resolutions() -> Vec<u8> {
    vec![4, 5]
}

fn default_family() -> String {
    "all".into()
}

fn default_count() -> usize {
    64
}

fn default_kinds() -> Vec<String> {
    vec!["indicator".into(), "power".into(), "martingale".into()]
}

fn default_identity_tol() -> f64 {
    1e-9
}

fn default_quadrature_tol() -> f64 {
    0.05
}

fn default_growth_tol() -> f64 {
    1.5
}

/// Exponent block of a scenario.  Either `q` is given explicitly or
/// `one_weight = true` derives it from the scaling relation; exactly one of
/// the two must be chosen.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub n: usize,
    pub alpha: f64,
    pub p: Vec<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub one_weight: bool,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            n: 1,
            alpha: 0.25,
            p: vec![4.0, 4.0],
            q: None,
            one_weight: true,
        }
    }
}

impl ProfileSpec {
    pub fn build(&self) -> Result<ExponentProfile> {
        match (self.q, self.one_weight) {
            (Some(_), true) => Err(Error::InvalidArgument(
                "profile must choose either an explicit q or one_weight, not both".into(),
            )),
            (Some(q), false) => ExponentProfile::new(self.n, self.alpha, &self.p, q),
            (None, true) => ExponentProfile::one_weight(self.n, self.alpha, &self.p),
            (None, false) => Err(Error::InvalidArgument(
                "profile needs an explicit q or one_weight = true".into(),
            )),
        }
    }
}

/// Weight block: one spec string per function slot (empty means all-ones)
/// plus an optional target density (`None` means the product of the slots).
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsBlock {
    #[serde(default)]
    pub omega: Vec<String>,
    #[serde(default)]
    pub nu: Option<String>,
}

/// Corpus block: how many random functions to draw and from which kinds.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<String>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            count: default_count(),
            kinds: default_kinds(),
        }
    }
}

/// Comparison tolerances.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Algebraic identities (relative).
    #[serde(default = "default_identity_tol")]
    pub identity: f64,
    /// Quadrature against closed forms (relative).
    #[serde(default = "default_quadrature_tol")]
    pub quadrature: f64,
    /// Largest acceptable growth factor of a constant across refinements.
    #[serde(default = "default_growth_tol")]
    pub growth: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: default_identity_tol(),
            quadrature: default_quadrature_tol(),
            growth: default_growth_tol(),
        }
    }
}

/// Check-specific knobs; unset fields take per-check defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Truncation depth for the shift-domination check (default -4).
    pub k: Option<i32>,
    /// Dual-spread guard for the convexity-gap check (default 1.9).
    pub b: Option<f64>,
    /// Sample count for the convexity-gap check (default 20000).
    pub samples: Option<usize>,
    /// Threshold-grid size for the distributional comparison (default 32).
    pub lambda_count: Option<usize>,
    /// Partition depth for the distributional comparison (default 2).
    pub cube_level: Option<u8>,
    /// Sequence source for the embedding checks: `random` or `power`.
    pub mu: Option<String>,
}

/// A parsed scenario: which check to run, on which exponents, weights,
/// corpus, resolutions, and tolerances.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub check: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub weights: WeightsBlock,
    #[serde(default)]
    pub corpus: CorpusSpec,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<u8>,
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: Params,
}

impl Scenario {
    /// Parses a scenario file and validates its cross-field invariants.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses scenario text.
    pub fn parse(text: &str) -> Result<Scenario> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Ready-made scenario for `msmax verify <check>`; the shipped scenario
    /// files mirror these defaults.
    pub fn default_for(check: &str) -> Result<Scenario> {
        let mut s = Scenario {
            check: check.to_string(),
            seed: default_seed(),
            profile: ProfileSpec::default(),
            weights: WeightsBlock::default(),
            corpus: CorpusSpec::default(),
            resolutions: default_resolutions(),
            family: default_family(),
            tolerances: Tolerances::default(),
            params: Params::default(),
        };
        match check {
            "lemma31" => {
                // A strict exponent gap is the substantive case; the
                // equal-exponent edge is covered by a shipped scenario.
                s.profile = ProfileSpec {
                    n: 1,
                    alpha: 0.25,
                    p: vec![2.0],
                    q: Some(4.0),
                    one_weight: false,
                };
            }
            "carleson" => {
                s.profile = ProfileSpec {
                    n: 1,
                    alpha: 0.25,
                    p: vec![2.0],
                    q: Some(4.0),
                    one_weight: false,
                };
                s.weights.omega = vec!["martingale:seed=5".into()];
                s.resolutions = vec![4, 5, 6];
            }
            "cor43" => {
                s.profile = ProfileSpec {
                    n: 1,
                    alpha: 0.25,
                    p: vec![2.0],
                    q: Some(4.0),
                    one_weight: false,
                };
                s.weights.omega = vec!["martingale:seed=5".into()];
                s.resolutions = vec![5];
                s.corpus.count = 32;
                s.params.mu = Some("power".into());
            }
            "shiftdom" => {
                s.profile = ProfileSpec {
                    n: 1,
                    alpha: 0.5,
                    p: vec![4.0, 4.0],
                    q: Some(2.0),
                    one_weight: false,
                };
                s.resolutions = vec![6];
                s.corpus.count = 8;
            }
            "thm21" => {
                s.profile = ProfileSpec {
                    n: 1,
                    alpha: 0.25,
                    p: vec![4.0, 4.0],
                    q: Some(3.0),
                    one_weight: false,
                };
                s.weights.omega = vec!["martingale:seed=1".into(), "martingale:seed=2".into()];
                s.resolutions = vec![4, 5];
                s.corpus.count = 16;
            }
            "thm22" => {
                s.weights.omega = vec!["martingale:seed=1".into(), "martingale:seed=2".into()];
                s.resolutions = vec![4, 5];
                s.corpus.count = 16;
            }
            "prop41" | "prop42" => {
                s.resolutions = vec![5];
                s.corpus.count = 20;
            }
            "goodlambda" => {
                s.profile = ProfileSpec {
                    n: 1,
                    alpha: 0.5,
                    p: vec![2.0],
                    q: Some(2.0),
                    one_weight: false,
                };
                s.weights.omega = vec!["power:a=0.5".into()];
                s.resolutions = vec![6];
                s.corpus.count = 10;
            }
            "prop51" => {
                s.profile = ProfileSpec {
                    n: 1,
                    alpha: 0.5,
                    p: vec![2.0],
                    q: Some(2.0),
                    one_weight: false,
                };
                // A genuinely nonconstant measure keeps the stability
                // certificate from being vacuous.
                s.weights.omega = vec!["power:a=0.5".into()];
                s.resolutions = vec![5, 6, 7];
                s.corpus.count = 8;
                // Observed quotients drift more than weight constants do.
                s.tolerances.growth = 2.0;
            }
            "remark53" => {
                s.profile = ProfileSpec {
                    n: 1,
                    alpha: 0.5,
                    p: vec![2.0],
                    q: Some(2.0),
                    one_weight: false,
                };
                s.resolutions = vec![4];
            }
            "constants" => {
                s.weights.omega = vec!["martingale:seed=1".into(), "martingale:seed=2".into()];
                s.resolutions = vec![4];
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown check `{other}` (expected one of {CHECK_IDS:?})"
                )));
            }
        }
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !CHECK_IDS.contains(&self.check.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "unknown check `{}` (expected one of {CHECK_IDS:?})",
                self.check
            )));
        }
        if self.resolutions.is_empty() {
            return Err(Error::InvalidArgument(
                "resolutions must not be empty".into(),
            ));
        }
        if !self.resolutions.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "resolutions must be strictly ascending".into(),
            ));
        }
        if self.corpus.count == 0 {
            return Err(Error::InvalidArgument(
                "corpus count must be positive".into(),
            ));
        }
        if self.corpus.kinds.is_empty() {
            return Err(Error::InvalidArgument(
                "corpus kinds must not be empty".into(),
            ));
        }
        for kind in &self.corpus.kinds {
            if !["indicator", "power", "martingale"].contains(&kind.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "unknown corpus kind `{kind}`"
                )));
            }
        }
        self.profile.build()?;
        self.family()?;
        self.weight_specs()?;
        Ok(())
    }

    pub fn family(&self) -> Result<Family> {
        self.family.parse()
    }

    /// Per-slot weight specs: parses the `omega` strings (all-ones when
    /// empty) and pins every unset martingale depth to the coarsest
    /// scenario resolution, so refinements see the same weight.
    pub fn weight_specs(&self) -> Result<Vec<WeightSpec>> {
        let prof = self.profile.build()?;
        let mut specs = if self.weights.omega.is_empty() {
            vec![WeightSpec::Const { c: 1.0 }; prof.m()]
        } else {
            self.weights
                .omega
                .iter()
                .map(|s| WeightSpec::parse(s))
                .collect::<Result<Vec<_>>>()?
        };
        if specs.len() != prof.m() {
            return Err(Error::InvalidArgument(format!(
                "{} weight specs for {} function slots",
                specs.len(),
                prof.m()
            )));
        }
        let base = self.resolutions[0];
        for spec in &mut specs {
            if let WeightSpec::Martingale { depth, .. } = spec {
                if depth.is_none() {
                    *depth = Some(base);
                }
            }
        }
        Ok(specs)
    }

    /// Realises the weight tuple on an isotropic grid at `resolution`.
    pub fn weights_at(&self, resolution: u8) -> Result<WeightVector> {
        let prof = self.profile.build()?;
        let levels = vec![resolution; prof.n()];
        let origin = vec![0.0; prof.n()];
        let ws = self
            .weight_specs()?
            .iter()
            .map(|spec| spec.generate(&levels, &origin))
            .collect::<Result<Vec<_>>>()?;
        WeightVector::new(ws)
    }

    /// Target density at `resolution`: the `nu` spec when given, else the
    /// product of the weight slots.
    pub fn nu_at(&self, wv: &WeightVector, resolution: u8) -> Result<GridFunction> {
        let prof = self.profile.build()?;
        match &self.weights.nu {
            Some(spec) => {
                let mut parsed = WeightSpec::parse(spec)?;
                if let WeightSpec::Martingale { depth, .. } = &mut parsed {
                    if depth.is_none() {
                        *depth = Some(self.resolutions[0]);
                    }
                }
                parsed.generate(&vec![resolution; prof.n()], &vec![0.0; prof.n()])
            }
            None => Ok(wv.nu_prod().clone()),
        }
    }
}

/// Resolution-free description of one corpus member; [`CorpusItem::realize`]
/// samples it on a concrete grid.  Drawing descriptors once and realising
/// them per resolution keeps refinement sweeps comparable: every grid sees
/// the same underlying function.
#[derive(Clone, Debug)]
pub enum CorpusItem {
    /// Sum of boxes: per box a height and, per axis, a dyadic depth and a
    /// position index at that depth.
    Boxes(Vec<(f64, Vec<(u8, u32)>)>),
    /// `height * |x - anchor|^a` with the anchor on the coarse grid's
    /// corner lattice (so cell centres never hit it).
    PowerBump {
        height: f64,
        a: f64,
        anchor: Vec<f64>,
    },
    /// Multiplicative cascade noise with a fixed depth.
    Cascade {
        seed: u64,
        depth: u8,
        amp: f64,
        decay: f64,
    },
}

impl CorpusItem {
    /// Samples the member on an isotropic grid with the given per-axis
    /// resolutions; every resolution at least the descriptor's base depth
    /// realises the same function.
    pub fn realize(&self, levels: &[u8], origin: &[f64]) -> Result<GridFunction> {
        match self {
            CorpusItem::Boxes(boxes) => {
                let total: usize = levels.iter().map(|&l| 1usize << l).product();
                let mut g = GridFunction::new(levels, origin, vec![0.0; total])?;
                let mut idx = vec![0u32; levels.len()];
                for (height, axes) in boxes {
                    let ranges = axes
                        .iter()
                        .zip(levels)
                        .map(|(&(depth, pos), &l)| {
                            if depth > l {
                                return Err(Error::InvalidArgument(format!(
                                    "box depth {depth} exceeds resolution {l}"
                                )));
                            }
                            let w = 1u32 << (l - depth);
                            Ok((pos * w, (pos + 1) * w))
                        })
                        .collect::<Result<Vec<(u32, u32)>>>()?;
                    for lin in 0..g.total_cells() {
                        g.multi_index(lin, &mut idx);
                        if idx
                            .iter()
                            .zip(&ranges)
                            .all(|(&i, &(lo, hi))| i >= lo && i < hi)
                        {
                            g.values_mut()[lin] += height;
                        }
                    }
                }
                Ok(g)
            }
            CorpusItem::PowerBump { height, a, anchor } => {
                let h = *height;
                let e = *a;
                let anchor = anchor.clone();
                GridFunction::from_fn(levels, origin, move |x| {
                    let d2: f64 = x
                        .iter()
                        .zip(&anchor)
                        .map(|(&xi, &ai)| (xi - ai) * (xi - ai))
                        .sum();
                    h * d2.sqrt().powf(e)
                })
            }
            CorpusItem::Cascade {
                seed,
                depth,
                amp,
                decay,
            } => {
                let spec = WeightSpec::Martingale {
                    seed: *seed,
                    depth: Some(*depth),
                    amp: *amp,
                    decay: *decay,
                };
                spec.generate(levels, origin)
            }
        }
    }
}

/// Draws `count` corpus descriptors with shapes anchored at `base_depth`
/// (the coarsest resolution they must realise on).
pub fn draw_corpus(
    rng: &mut ChaCha8Rng,
    spec: &CorpusSpec,
    n: usize,
    base_depth: u8,
) -> Vec<CorpusItem> {
    let mut out = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let kind = &spec.kinds[i % spec.kinds.len()];
        out.push(draw_item(rng, kind, n, base_depth));
    }
    out
}

fn draw_item(rng: &mut ChaCha8Rng, kind: &str, n: usize, base_depth: u8) -> CorpusItem {
    let log_height = |rng: &mut ChaCha8Rng| 0.1 * (rng.random::<f64>() * 100.0f64.ln()).exp();
    match kind {
        "indicator" => {
            let boxes = 1 + rng.random_range(0..3usize);
            let items = (0..boxes)
                .map(|_| {
                    let height = log_height(rng);
                    let axes = (0..n)
                        .map(|_| {
                            let depth = rng.random_range(0..=base_depth as u32) as u8;
                            let pos = rng.random_range(0..(1u32 << depth));
                            (depth, pos)
                        })
                        .collect();
                    (height, axes)
                })
                .collect();
            CorpusItem::Boxes(items)
        }
        "power" => {
            let lattice = 1u32 << base_depth;
            CorpusItem::PowerBump {
                height: log_height(rng),
                a: -0.4 + 1.6 * rng.random::<f64>(),
                anchor: (0..n)
                    .map(|_| rng.random_range(0..=lattice) as f64 / lattice as f64)
                    .collect(),
            }
        }
        "martingale" => CorpusItem::Cascade {
            seed: rng.random(),
            depth: base_depth,
            amp: 0.1 + 0.4 * rng.random::<f64>(),
            decay: 0.7,
        },
        other => unreachable!("corpus kinds validated at load time: {other}"),
    }
}

/// Draws `count` tuples of `m` corpus descriptors each, cycling the kinds
/// across slots and tuples.
pub fn draw_tuples(
    rng: &mut ChaCha8Rng,
    spec: &CorpusSpec,
    n: usize,
    m: usize,
    base_depth: u8,
) -> Vec<Vec<CorpusItem>> {
    (0..spec.count)
        .map(|t| {
            (0..m)
                .map(|slot| {
                    let kind = &spec.kinds[(t * m + slot) % spec.kinds.len()];
                    draw_item(rng, kind, n, base_depth)
                })
                .collect()
        })
        .collect()
}

/// Severity of one report line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// An asserted check that held.
    Pass,
    /// An asserted check that failed; the run fails.
    Fail,
    /// Informational measurement, never asserted.
    Evidence,
}

/// One labelled report line.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub label: String,
    pub status: Status,
    pub detail: String,
}

/// One named constant with an optional witness description.
#[derive(Clone, Debug)]
pub struct ConstantLine {
    pub name: String,
    pub value: f64,
    pub witness: Option<String>,
}

/// Deterministic result of one scenario run.
#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub check: String,
    pub seed: u64,
    /// Scenario echo lines (profile, family, resolutions).
    pub header: Vec<String>,
    pub constants: Vec<ConstantLine>,
    pub lines: Vec<CheckLine>,
    /// Informational footer lines, rendered with a `# ` prefix and excluded
    /// from determinism comparisons (timing lives here).
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(scenario: &Scenario) -> Result<VerificationReport> {
        let prof = scenario.profile.build()?;
        let header = vec![
            format!(
                "profile n={} m={} alpha={:?} p={:?} q={:?} p_joint={:?}",
                prof.n(),
                prof.m(),
                prof.alpha(),
                prof.p_vec(),
                prof.q(),
                prof.p()
            ),
            format!("family {}", scenario.family),
            format!("resolutions {:?}", scenario.resolutions),
        ];
        Ok(VerificationReport {
            check: scenario.check.clone(),
            seed: scenario.seed,
            header,
            constants: Vec::new(),
            lines: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn constant(&mut self, name: impl Into<String>, value: f64, witness: Option<String>) {
        self.constants.push(ConstantLine {
            name: name.into(),
            value,
            witness,
        });
    }

    pub fn assert_check(&mut self, label: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.lines.push(CheckLine {
            label: label.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        });
    }

    pub fn evidence(&mut self, label: impl Into<String>, detail: impl Into<String>) {
        self.lines.push(CheckLine {
            label: label.into(),
            status: Status::Evidence,
            detail: detail.into(),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// True when every asserted line passed.
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.status != Status::Fail)
    }

    /// Plain-text rendering; stable given (scenario, seed) apart from the
    /// `# ` footer lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("msmax report v1\n");
        out.push_str(&format!("check {}\n", self.check));
        out.push_str(&format!("seed {}\n", self.seed));
        for line in &self.header {
            out.push_str(line);
            out.push('\n');
        }
        for c in &self.constants {
            match &c.witness {
                Some(w) => out.push_str(&format!(
                    "constant {} {:?} witness {}\n",
                    c.name, c.value, w
                )),
                None => out.push_str(&format!("constant {} {:?}\n", c.name, c.value)),
            }
        }
        for l in &self.lines {
            let tag = match l.status {
                Status::Pass => "check",
                Status::Fail => "check",
                Status::Evidence => "evidence",
            };
            let verdict = match l.status {
                Status::Pass => " pass",
                Status::Fail => " FAIL",
                Status::Evidence => "",
            };
            out.push_str(&format!("{tag} {}{verdict} {}\n", l.label, l.detail));
        }
        out.push_str(&format!(
            "result {}\n",
            if self.passed() { "pass" } else { "fail" }
        ));
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        out
    }

    /// Flat tab-separated export of the constants.
    pub fn constants_tsv(&self) -> String {
        let mut out = String::from("name\tvalue\twitness\n");
        for c in &self.constants {
            out.push_str(&format!(
                "{}\t{:?}\t{}\n",
                c.name,
                c.value,
                c.witness.as_deref().unwrap_or("-")
            ));
        }
        out
    }

    /// Strips `# ` footer lines — the part of a rendering that determinism
    /// comparisons should ignore.
    pub fn strip_notes(rendered: &str) -> String {
        rendered
            .lines()
            .filter(|l| !l.starts_with("# "))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }
}

/// Runs a scenario.  `Err` means the scenario itself is unusable
/// (configuration error, exit code 2); an `Ok` report may still have
/// failing checks (exit code 1).
pub fn run_scenario(scenario: &Scenario) -> Result<VerificationReport> {
    scenario.validate()?;
    let started = std::time::Instant::now();
    let mut report = VerificationReport::new(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    match scenario.check.as_str() {
        "lemma31" => checks::convexity_gap(scenario, &mut rng, &mut report)?,
        "carleson" => checks::embedding(scenario, &mut rng, &mut report)?,
        "cor43" => checks::sequence_from_mass(scenario, &mut rng, &mut report)?,
        "shiftdom" => checks::shift_domination(scenario, &mut rng, &mut report)?,
        "thm21" => checks::two_weight_characterization(scenario, &mut rng, &mut report)?,
        "thm22" => checks::one_weight_characterization(scenario, &mut rng, &mut report)?,
        "prop41" => checks::dual_reverse_doubling(scenario, &mut rng, &mut report)?,
        "prop42" => checks::weight_reverse_doubling(scenario, &mut rng, &mut report)?,
        "goodlambda" => checks::distribution_comparison(scenario, &mut rng, &mut report)?,
        "prop51" => checks::norm_comparison(scenario, &mut rng, &mut report)?,
        "remark53" => checks::dyadic_failure(scenario, &mut report)?,
        "constants" => checks::constants_survey(scenario, &mut report)?,
        other => {
            return Err(Error::InvalidArgument(format!("unknown check `{other}`")));
        }
    }
    report.note(format!("elapsed_ms {}", started.elapsed().as_millis()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::weighted_power_integral;

    #[test]
    fn scenario_parsing_defaults_and_rejections() {
        let s = Scenario::parse(
            r#"
check = "thm21"
seed = 7

[profile]
n = 1
alpha = 0.25
p = [4.0, 4.0]
q = 3.0
"#,
        )
        .unwrap();
        assert_eq!(s.check, "thm21");
        assert_eq!(s.seed, 7);
        assert_eq!(s.resolutions, vec![4, 5]);
        assert_eq!(s.family, "all");
        assert_eq!(s.corpus.count, 64);
        assert!((s.tolerances.identity - 1e-9).abs() < 1e-24);
        assert!(s.profile.build().is_ok());

        // Unknown check id.
        assert!(Scenario::parse("check = \"nope\"").is_err());
        // Unknown field.
        assert!(Scenario::parse("check = \"constants\"\nbogus = 1").is_err());
        // Both q and one_weight.
        assert!(Scenario::parse(
            "check = \"constants\"\n[profile]\nn = 1\nalpha = 0.25\np = [2.0]\nq = 2.0\none_weight = true"
        )
        .is_err());
        // Neither q nor one_weight.
        assert!(Scenario::parse(
            "check = \"constants\"\n[profile]\nn = 1\nalpha = 0.25\np = [2.0]"
        )
        .is_err());
        // Descending resolutions.
        assert!(Scenario::parse("check = \"constants\"\nresolutions = [5, 4]").is_err());
        // Wrong number of weight slots for the profile.
        assert!(
            Scenario::parse("check = \"constants\"\n[weights]\nomega = [\"const:c=1\"]").is_err()
        );
    }

    #[test]
    fn default_scenarios_exist_for_every_check() {
        for id in CHECK_IDS {
            let s = Scenario::default_for(id).unwrap();
            assert_eq!(s.check, id);
        }
        assert!(Scenario::default_for("nope").is_err());
    }

    #[test]
    fn corpus_realizations_are_consistent_across_resolutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = CorpusSpec::default();
        let items = draw_corpus(&mut rng, &spec, 2, 3);
        assert_eq!(items.len(), spec.count);
        let origin = [0.0, 0.0];
        for item in &items {
            let coarse = item.realize(&[3, 3], &origin).unwrap();
            let fine = item.realize(&[4, 4], &origin).unwrap();
            assert!(coarse.is_nonnegative() && fine.is_nonnegative());
            // Box sums and pinned-depth cascades realise the same function,
            // so their integrals agree exactly; center-sampled bumps only
            // approximately.
            let ic = weighted_power_integral(&coarse, 1.0, None).unwrap();
            let fc = weighted_power_integral(&fine, 1.0, None).unwrap();
            match item {
                CorpusItem::PowerBump { .. } => {
                    assert!((ic - fc).abs() <= 0.2 * ic.abs().max(fc.abs()))
                }
                _ => assert!((ic - fc).abs() <= 1e-12 * ic.abs().max(1.0)),
            }
        }
        // All three kinds appear.
        assert!(items.iter().any(|i| matches!(i, CorpusItem::Boxes(_))));
        assert!(items
            .iter()
            .any(|i| matches!(i, CorpusItem::PowerBump { .. })));
        assert!(items
            .iter()
            .any(|i| matches!(i, CorpusItem::Cascade { .. })));
    }

    #[test]
    fn reports_are_deterministic_and_note_stripping_works() {
        let mut s = Scenario::default_for("remark53").unwrap();
        s.seed = 11;
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert!(a.passed());
        assert_eq!(
            VerificationReport::strip_notes(&a.render()),
            VerificationReport::strip_notes(&b.render())
        );
        let rendered = a.render();
        assert!(rendered.starts_with("msmax report v1\ncheck remark53\nseed 11\n"));
        assert!(rendered.contains("\nresult pass\n"));
        assert!(rendered.lines().any(|l| l.starts_with("# elapsed_ms ")));
        assert!(!VerificationReport::strip_notes(&rendered).contains("# elapsed_ms"));
    }

    #[test]
    fn failing_lines_flip_the_verdict() {
        let s = Scenario::default_for("constants").unwrap();
        let mut rep = VerificationReport::new(&s).unwrap();
        rep.constant("c", 1.5, Some("witness".into()));
        rep.evidence("info", "detail");
        assert!(rep.passed());
        rep.assert_check("must-hold", false, "broken");
        assert!(!rep.passed());
        let rendered = rep.render();
        assert!(rendered.contains("constant c 1.5 witness witness\n"));
        assert!(rendered.contains("evidence info detail\n"));
        assert!(rendered.contains("check must-hold FAIL broken\n"));
        assert!(rendered.ends_with("result fail\n"));
        let tsv = rep.constants_tsv();
        assert_eq!(tsv, "name\tvalue\twitness\nc\t1.5\twitness\n");
    }

    #[test]
    fn martingale_depth_is_pinned_to_the_coarsest_resolution() {
        let s = Scenario::parse(
            "check = \"constants\"\nresolutions = [3, 5]\n[profile]\nn = 1\nalpha = 0.25\np = [2.0]\nq = 2.0\n[weights]\nomega = [\"martingale:seed=4\"]",
        )
        .unwrap();
        let specs = s.weight_specs().unwrap();
        match &specs[0] {
            WeightSpec::Martingale { depth, .. } => assert_eq!(*depth, Some(3)),
            other => panic!("expected a cascade spec, got {other}"),
        }
        // Same underlying weight on both grids: the fine grid refines the
        // coarse one cell-by-cell.
        let coarse = s.weights_at(3).unwrap();
        let fine = s.weights_at(5).unwrap();
        let c = coarse.weight(0);
        let f = fine.weight(0);
        for (lin, &cv) in c.values().iter().enumerate() {
            for sub in 0..4 {
                assert_eq!(f.values()[lin * 4 + sub], cv);
            }
        }
    }
}
