//! Rate models for bilateral birth-death processes.
//!
//! A [`RateModel`] assigns every integer state `i` a birth intensity
//! `λ_i(t)` (jump `i → i+1`) and a death intensity `μ_i(t)` (jump `i → i-1`).
//! Intensities are built from a small family: a single-frequency
//! trigonometric time profile ([`RateExpr`]) multiplied by a state factor
//! ([`StateFactor`]), attached to integer intervals ([`RateBand`]).
//!
//! The family is closed enough that per-state maxima are analytic and the
//! rates become independent of the state beyond a declared horizon, which is
//! what makes the infimum over all states in the ergodicity bound computable.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("rate expression can go negative: base {base} < amplitude {amplitude}")]
    NegativeRate { base: f64, amplitude: f64 },
    #[error("{direction} bands do not cover the integers: {detail}")]
    NonCovering { direction: &'static str, detail: String },
    #[error("model is missing a positive horizon")]
    MissingHorizon,
    #[error("{direction} rates still depend on the state beyond horizon {horizon}: {detail}")]
    HorizonViolated {
        direction: &'static str,
        horizon: i64,
        detail: String,
    },
}

/// Time profile `base + sin_amp·sin(2π·freq·t) + cos_amp·cos(2π·freq·t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateExpr {
    pub base: f64,
    pub sin_amp: f64,
    pub cos_amp: f64,
    pub freq: f64,
}

impl RateExpr {
    pub fn new(base: f64, sin_amp: f64, cos_amp: f64, freq: f64) -> Result<Self, ModelError> {
        let expr = RateExpr {
            base,
            sin_amp,
            cos_amp,
            freq,
        };
        if ![base, sin_amp, cos_amp, freq].iter().all(|v| v.is_finite()) {
            return Err(ModelError::Schema(format!("non-finite rate coefficient in {expr}")));
        }
        if base < expr.amplitude() {
            return Err(ModelError::NegativeRate {
                base,
                amplitude: expr.amplitude(),
            });
        }
        Ok(expr)
    }

    pub fn constant(value: f64) -> Result<Self, ModelError> {
        Self::new(value, 0.0, 0.0, 1.0)
    }

    pub fn amplitude(&self) -> f64 {
        self.sin_amp.hypot(self.cos_amp)
    }

    pub fn is_constant(&self) -> bool {
        self.sin_amp == 0.0 && self.cos_amp == 0.0
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if self.is_constant() {
            return self.base;
        }
        let (s, c) = (TAU * self.freq * t).sin_cos();
        self.base + self.sin_amp * s + self.cos_amp * c
    }

    /// Exact supremum over `t`.
    pub fn max(&self) -> f64 {
        self.base + self.amplitude()
    }
}

impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} + {}·sin(2π·{}t) + {}·cos(2π·{}t)",
            self.base, self.sin_amp, self.freq, self.cos_amp, self.freq
        )
    }
}

/// State-dependent multiplier of a band's time profile.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFactor {
    One,
    /// `min(|i|, cap)`, the number of busy servers in an `M/M/S` queue.
    MinLinear {
        cap: u32,
    },
    Table {
        entries: BTreeMap<i64, f64>,
        default: f64,
    },
}

impl StateFactor {
    #[inline]
    pub fn eval(&self, i: i64) -> f64 {
        match self {
            StateFactor::One => 1.0,
            StateFactor::MinLinear { cap } => i.unsigned_abs().min(*cap as u64) as f64,
            StateFactor::Table { entries, default } => *entries.get(&i).unwrap_or(default),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match self {
            StateFactor::One => Ok(()),
            StateFactor::MinLinear { cap } if *cap == 0 => {
                Err(ModelError::Schema("min_linear cap must be positive".into()))
            }
            StateFactor::MinLinear { .. } => Ok(()),
            StateFactor::Table { entries, default } => {
                let bad = std::iter::once(default)
                    .chain(entries.values())
                    .any(|v| !v.is_finite() || *v < 0.0);
                if bad {
                    Err(ModelError::Schema(
                        "table factors must be finite and nonnegative".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Whether `eval(i) == eval(j)` for all `i, j` with `|i|, |j| >= from` on the given side.
    fn constant_beyond(&self, from: i64, positive: bool) -> bool {
        match self {
            StateFactor::One => true,
            StateFactor::MinLinear { cap } => from >= *cap as i64,
            StateFactor::Table { entries, default } => entries
                .iter()
                .filter(|(k, _)| if positive { **k >= from } else { **k <= -from })
                .all(|(_, v)| v == default),
        }
    }
}

/// Rate attached to the integer interval `lo..=hi`; `i64::MIN` / `i64::MAX`
/// stand for `-∞` / `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBand {
    pub lo: i64,
    pub hi: i64,
    pub expr: RateExpr,
    pub factor: StateFactor,
}

impl RateBand {
    pub fn new(lo: i64, hi: i64, expr: RateExpr, factor: StateFactor) -> Self {
        RateBand { lo, hi, expr, factor }
    }

    pub fn everywhere(expr: RateExpr) -> Self {
        Self::new(i64::MIN, i64::MAX, expr, StateFactor::One)
    }

    #[inline]
    pub fn contains(&self, i: i64) -> bool {
        self.lo <= i && i <= self.hi
    }

    #[inline]
    pub fn rate(&self, i: i64, t: f64) -> f64 {
        let factor = self.factor.eval(i);
        if factor == 0.0 {
            0.0
        } else {
            factor * self.expr.eval(t)
        }
    }

    pub fn bound(&self, i: i64) -> f64 {
        self.factor.eval(i) * self.expr.max()
    }

    /// Largest `factor × max(expr)` over the band.
    fn band_max(&self) -> f64 {
        let fmax = match &self.factor {
            StateFactor::One => 1.0,
            StateFactor::MinLinear { cap } => {
                let widest = self.lo.unsigned_abs().max(self.hi.unsigned_abs());
                widest.min(*cap as u64) as f64
            }
            StateFactor::Table { entries, default } => {
                let inside = entries.iter().filter(|(k, _)| self.contains(**k)).map(|(_, v)| *v);
                // the default applies somewhere unless the table covers the whole band
                let covered = self.hi != i64::MAX
                    && self.lo != i64::MIN
                    && (self.hi - self.lo + 1) as usize == entries.keys().filter(|k| self.contains(**k)).count();
                let seed = if covered { 0.0 } else { *default };
                inside.fold(seed, f64::max)
            }
        };
        fmax * self.expr.max()
    }
}

/// Read access to birth/death intensities, shared by full and truncated models.
pub trait Rates {
    /// `λ_i(t)`, the intensity of `i → i+1`.
    fn birth_rate(&self, i: i64, t: f64) -> f64;
    /// `μ_i(t)`, the intensity of `i → i-1`.
    fn death_rate(&self, i: i64, t: f64) -> f64;
    fn birth_bound(&self, i: i64) -> f64;
    fn death_bound(&self, i: i64) -> f64;
    /// `H` such that rates at `|i| >= H` equal the rates at `±H`.
    ///
    /// For a truncated model this holds in the interior of the window only.
    fn horizon(&self) -> i64;
    /// Finite state window, if the process is confined to one.
    fn window(&self) -> Option<(i64, i64)> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateModel {
    pub name: String,
    pub horizon: i64,
    pub birth: Vec<RateBand>,
    pub death: Vec<RateBand>,
}

impl RateModel {
    pub fn new(
        name: impl Into<String>,
        horizon: i64,
        birth: Vec<RateBand>,
        death: Vec<RateBand>,
    ) -> Result<Self, ModelError> {
        let mut model = RateModel {
            name: name.into(),
            horizon,
            birth,
            death,
        };
        model.birth.sort_by_key(|b| b.lo);
        model.death.sort_by_key(|b| b.lo);
        model.validate()?;
        Ok(model)
    }

    /// State-independent constant rates; `X(t)` is then a difference of two
    /// Poisson counts.
    pub fn constant(birth: f64, death: f64) -> Result<Self, ModelError> {
        Self::new(
            format!("const(λ={birth},μ={death})"),
            1,
            vec![RateBand::everywhere(RateExpr::constant(birth)?)],
            vec![RateBand::everywhere(RateExpr::constant(death)?)],
        )
    }

    /// Randomized random walk: `λ(t) = 1 + sin(2πt)` away from the origin,
    /// `3·min(|i|, 2)` toward it, mirrored about 0, and both directions at
    /// rate `λ(t)` from the origin itself.
    pub fn example_random_walk() -> Self {
        let lambda = RateExpr::new(1.0, 1.0, 0.0, 1.0).expect("valid");
        let service = RateExpr::constant(3.0).expect("valid");
        let servers = StateFactor::MinLinear { cap: 2 };
        Self::new(
            "ex1",
            2,
            vec![
                RateBand::new(i64::MIN, -1, service, servers.clone()),
                RateBand::new(0, i64::MAX, lambda, StateFactor::One),
            ],
            vec![
                RateBand::new(i64::MIN, 0, lambda, StateFactor::One),
                RateBand::new(1, i64::MAX, service, servers),
            ],
        )
        .expect("built-in model is valid")
    }

    /// Double-ended taxi/passenger queue: passengers arrive at
    /// `2 + sin(2πt)/4`; taxis at `1 + sin(2πt)/8` while no passenger waits
    /// (`i <= 0`) and at `4 + cos(2πt)/4` otherwise.
    pub fn example_taxi_queue() -> Self {
        let passengers = RateExpr::new(2.0, 0.25, 0.0, 1.0).expect("valid");
        let idle_taxis = RateExpr::new(1.0, 0.125, 0.0, 1.0).expect("valid");
        let busy_taxis = RateExpr::new(4.0, 0.0, 0.25, 1.0).expect("valid");
        Self::new(
            "ex2",
            1,
            vec![RateBand::everywhere(passengers)],
            vec![
                RateBand::new(i64::MIN, 0, idle_taxis, StateFactor::One),
                RateBand::new(1, i64::MAX, busy_taxis, StateFactor::One),
            ],
        )
        .expect("built-in model is valid")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ex1" => Some(Self::example_random_walk()),
            "ex2" => Some(Self::example_taxi_queue()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.horizon < 1 {
            return Err(ModelError::MissingHorizon);
        }
        for (direction, bands) in [("birth", &self.birth), ("death", &self.death)] {
            check_cover(direction, bands)?;
            for band in bands.iter() {
                band.factor.validate()?;
                if band.expr.base < band.expr.amplitude() {
                    return Err(ModelError::NegativeRate {
                        base: band.expr.base,
                        amplitude: band.expr.amplitude(),
                    });
                }
            }
            for (positive, edge) in [(true, self.horizon), (false, -self.horizon)] {
                let band = find_band(bands, edge);
                let open = if positive {
                    band.hi == i64::MAX
                } else {
                    band.lo == i64::MIN
                };
                if !open {
                    return Err(ModelError::HorizonViolated {
                        direction,
                        horizon: self.horizon,
                        detail: format!("band [{}, {}] ends beyond the horizon", band.lo, band.hi),
                    });
                }
                if !band.factor.constant_beyond(self.horizon, positive) {
                    return Err(ModelError::HorizonViolated {
                        direction,
                        horizon: self.horizon,
                        detail: format!("state factor {:?} still varies", band.factor),
                    });
                }
            }
        }
        Ok(())
    }

    /// `(λ̄_i, μ̄_i)`, tight for the trigonometric family.
    pub fn rate_upper_bounds(&self, i: i64) -> (f64, f64) {
        (find_band(&self.birth, i).bound(i), find_band(&self.death, i).bound(i))
    }

    /// `Δ = sup_i max(λ̄_i, μ̄_i)`.
    pub fn global_bound(&self) -> f64 {
        self.birth
            .iter()
            .chain(self.death.iter())
            .map(RateBand::band_max)
            .fold(0.0, f64::max)
    }

    /// Smallest period shared by every time profile, or `None` if the
    /// frequencies are incommensurable. Constant models report period 1.
    pub fn common_period(&self) -> Option<f64> {
        let freqs: Vec<f64> = self
            .birth
            .iter()
            .chain(self.death.iter())
            .filter(|b| !b.expr.is_constant())
            .map(|b| b.expr.freq.abs())
            .collect();
        let Some(fmin) = freqs.iter().copied().reduce(f64::min) else {
            return Some(1.0);
        };
        (1..=1000).map(|k| k as f64 / fmin).find(|&p| {
            freqs.iter().all(|f| {
                let cycles = p * f;
                (cycles - cycles.round()).abs() < 1e-9 * cycles.max(1.0)
            })
        })
    }

    /// Canonical JSON form; `load_model` reads it back.
    pub fn to_json(&self) -> String {
        let doc = config::ModelDoc::from(self);
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub(crate) fn birth_band(&self, i: i64) -> &RateBand {
        find_band(&self.birth, i)
    }

    pub(crate) fn death_band(&self, i: i64) -> &RateBand {
        find_band(&self.death, i)
    }
}

impl Rates for RateModel {
    fn birth_rate(&self, i: i64, t: f64) -> f64 {
        find_band(&self.birth, i).rate(i, t)
    }

    fn death_rate(&self, i: i64, t: f64) -> f64 {
        find_band(&self.death, i).rate(i, t)
    }

    fn birth_bound(&self, i: i64) -> f64 {
        find_band(&self.birth, i).bound(i)
    }

    fn death_bound(&self, i: i64) -> f64 {
        find_band(&self.death, i).bound(i)
    }

    fn horizon(&self) -> i64 {
        self.horizon
    }
}

/// The process confined to `n1..=n2`: births out of `n2` and deaths out of
/// `n1` are switched off, every other intensity is inherited.
#[derive(Debug, Clone, Copy)]
pub struct Truncated<'a> {
    pub model: &'a RateModel,
    pub n1: i64,
    pub n2: i64,
}

impl<'a> Truncated<'a> {
    pub fn new(model: &'a RateModel, n1: i64, n2: i64) -> Self {
        assert!(n1 < 0 && n2 > 0, "truncation window must straddle 0");
        Truncated { model, n1, n2 }
    }

    #[inline]
    fn births_on(&self, i: i64) -> bool {
        self.n1 <= i && i < self.n2
    }

    #[inline]
    fn deaths_on(&self, i: i64) -> bool {
        self.n1 < i && i <= self.n2
    }
}

impl Rates for Truncated<'_> {
    fn birth_rate(&self, i: i64, t: f64) -> f64 {
        if self.births_on(i) {
            self.model.birth_rate(i, t)
        } else {
            0.0
        }
    }

    fn death_rate(&self, i: i64, t: f64) -> f64 {
        if self.deaths_on(i) {
            self.model.death_rate(i, t)
        } else {
            0.0
        }
    }

    fn birth_bound(&self, i: i64) -> f64 {
        if self.births_on(i) {
            self.model.birth_bound(i)
        } else {
            0.0
        }
    }

    fn death_bound(&self, i: i64) -> f64 {
        if self.deaths_on(i) {
            self.model.death_bound(i)
        } else {
            0.0
        }
    }

    fn horizon(&self) -> i64 {
        self.model.horizon
    }

    fn window(&self) -> Option<(i64, i64)> {
        Some((self.n1, self.n2))
    }
}

#[inline]
fn find_band(bands: &[RateBand], i: i64) -> &RateBand {
    bands.iter().find(|b| b.contains(i)).expect("bands cover the integers")
}

fn check_cover(direction: &'static str, bands: &[RateBand]) -> Result<(), ModelError> {
    let fail = |detail: String| ModelError::NonCovering { direction, detail };
    let first = bands.first().ok_or_else(|| fail("no bands".into()))?;
    if first.lo != i64::MIN {
        return Err(fail(format!("nothing below {}", first.lo)));
    }
    for pair in bands.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.lo > a.hi {
            return Err(fail(format!("empty band [{}, {}]", a.lo, a.hi)));
        }
        if a.hi == i64::MAX || a.hi + 1 != b.lo {
            return Err(fail(format!(
                "bands [{}, {}] and [{}, {}] overlap or leave a gap",
                a.lo, a.hi, b.lo, b.hi
            )));
        }
    }
    let last = bands.last().expect("nonempty");
    if last.lo > last.hi || last.hi != i64::MAX {
        return Err(fail(format!("nothing above {}", last.hi)));
    }
    Ok(())
}

/// Parses a model: the built-in names `ex1` / `ex2`, or a JSON document.
pub fn load_model(source: &str) -> Result<RateModel, ModelError> {
    if let Some(model) = RateModel::builtin(source.trim()) {
        return Ok(model);
    }
    let doc: config::ModelDoc = serde_json::from_str(source)?;
    doc.try_into()
}

mod config {
    use super::*;

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub(super) struct ModelDoc {
        name: String,
        horizon: Option<i64>,
        birth: Vec<BandDoc>,
        death: Vec<BandDoc>,
    }

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(untagged)]
    enum Endpoint {
        Int(i64),
        Inf(String),
    }

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct BandDoc {
        lo: Endpoint,
        hi: Endpoint,
        base: f64,
        #[serde(default)]
        sin_amp: f64,
        #[serde(default)]
        cos_amp: f64,
        #[serde(default = "unit")]
        freq: f64,
        #[serde(default)]
        factor: FactorDoc,
    }

    fn unit() -> f64 {
        1.0
    }

    #[derive(Debug, Default, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct FactorDoc {
        kind: FactorKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        entries: Option<BTreeMap<String, f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<f64>,
    }

    #[derive(Debug, Default, Serialize, Deserialize)]
    #[serde(rename_all = "snake_case")]
    enum FactorKind {
        #[default]
        One,
        MinLinear,
        Table,
    }

    fn endpoint(e: &Endpoint, side: &str) -> Result<i64, ModelError> {
        match e {
            Endpoint::Int(v) => Ok(*v),
            Endpoint::Inf(s) if s == "-inf" && side == "lo" => Ok(i64::MIN),
            Endpoint::Inf(s) if s == "+inf" && side == "hi" => Ok(i64::MAX),
            Endpoint::Inf(s) => Err(ModelError::Schema(format!("bad {side} endpoint {s:?}"))),
        }
    }

    fn to_endpoint(v: i64) -> Endpoint {
        match v {
            i64::MIN => Endpoint::Inf("-inf".into()),
            i64::MAX => Endpoint::Inf("+inf".into()),
            v => Endpoint::Int(v),
        }
    }

    impl TryFrom<&BandDoc> for RateBand {
        type Error = ModelError;

        fn try_from(doc: &BandDoc) -> Result<Self, ModelError> {
            let expr = RateExpr::new(doc.base, doc.sin_amp, doc.cos_amp, doc.freq)?;
            let factor = match doc.factor.kind {
                FactorKind::One => StateFactor::One,
                FactorKind::MinLinear => StateFactor::MinLinear {
                    cap: doc
                        .factor
                        .cap
                        .ok_or_else(|| ModelError::Schema("min_linear factor needs a cap".into()))?,
                },
                FactorKind::Table => {
                    let mut entries = BTreeMap::new();
                    for (k, v) in doc.factor.entries.iter().flatten() {
                        let state = k
                            .trim()
                            .parse::<i64>()
                            .map_err(|_| ModelError::Schema(format!("table key {k:?} is not an integer")))?;
                        entries.insert(state, *v);
                    }
                    StateFactor::Table {
                        entries,
                        default: doc.factor.default.unwrap_or(0.0),
                    }
                }
            };
            Ok(RateBand::new(
                endpoint(&doc.lo, "lo")?,
                endpoint(&doc.hi, "hi")?,
                expr,
                factor,
            ))
        }
    }

    impl From<&RateBand> for BandDoc {
        fn from(b: &RateBand) -> Self {
            let factor = match &b.factor {
                StateFactor::One => FactorDoc::default(),
                StateFactor::MinLinear { cap } => FactorDoc {
                    kind: FactorKind::MinLinear,
                    cap: Some(*cap),
                    ..FactorDoc::default()
                },
                StateFactor::Table { entries, default } => FactorDoc {
                    kind: FactorKind::Table,
                    entries: Some(entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()),
                    default: Some(*default),
                    cap: None,
                },
            };
            BandDoc {
                lo: to_endpoint(b.lo),
                hi: to_endpoint(b.hi),
                base: b.expr.base,
                sin_amp: b.expr.sin_amp,
                cos_amp: b.expr.cos_amp,
                freq: b.expr.freq,
                factor,
            }
        }
    }

    impl From<&RateModel> for ModelDoc {
        fn from(m: &RateModel) -> Self {
            ModelDoc {
                name: m.name.clone(),
                horizon: Some(m.horizon),
                birth: m.birth.iter().map(BandDoc::from).collect(),
                death: m.death.iter().map(BandDoc::from).collect(),
            }
        }
    }

    impl TryFrom<ModelDoc> for RateModel {
        type Error = ModelError;

        fn try_from(doc: ModelDoc) -> Result<Self, ModelError> {
            let horizon = doc.horizon.ok_or(ModelError::MissingHorizon)?;
            let birth = doc.birth.iter().map(RateBand::try_from).collect::<Result<_, _>>()?;
            let death = doc.death.iter().map(RateBand::try_from).collect::<Result<_, _>>()?;
            RateModel::new(doc.name, horizon, birth, death)
        }
    }
}
