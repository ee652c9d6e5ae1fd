//! Degree-sequence families: the type census a graph family is built from,
//! per-`n` materialization, and the deterministic exponents and time scales
//! attached to a family.
//!
//! Everything here is pure arithmetic on the degree data; nothing is random.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::Kahan;

/// Exact fraction type used for the type census.
pub type Fraction = Ratio<i64>;

/// Degrees are stored as 16-bit integers; max degree is capped at 2^15 since
/// the whole analysis assumes bounded degrees.
pub const MAX_DEGREE: u16 = 1 << 15;

/// A vertex type `(i, j)`: in-degree `i`, out-degree `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegreeType {
    pub in_deg: u16,
    pub out_deg: u16,
}

impl DegreeType {
    pub fn new(in_deg: u16, out_deg: u16) -> Self {
        assert!(in_deg >= 1 && out_deg >= 1, "degrees must be positive");
        DegreeType { in_deg, out_deg }
    }
}

impl fmt::Display for DegreeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.in_deg, self.out_deg)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model has no types")]
    Empty,
    #[error("fraction for type {0} must lie in (0,1], got {1}")]
    FractionRange(DegreeType, Fraction),
    #[error("fractions sum to {0}, expected exactly 1")]
    FractionSum(Fraction),
    #[error("unbalanced family: sum fraction*in = {gin}, sum fraction*out = {gout}")]
    Unbalanced { gin: Fraction, gout: Fraction },
    #[error("linear type {0} does not appear in the census")]
    UnknownLinearType(DegreeType),
    #[error("duplicate type {0} in the census")]
    DuplicateType(DegreeType),
    #[error("type {0}: degrees below 2 are not allowed at the model level")]
    DegreeTooSmall(DegreeType),
    #[error("type {0}: degree exceeds the cap {MAX_DEGREE}")]
    DegreeTooLarge(DegreeType),
    #[error("cannot parse fraction {0:?} as an exact decimal")]
    BadFraction(String),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A family of degree sequences: the census of types with their asymptotic
/// fractions, the declared linear-size subset, and (optionally) declared
/// sublinear size exponents per type.
///
/// Linear size is a property of the family, not of one instance, so it is
/// declared rather than measured; the same goes for the sublinear exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeModel {
    entries: Vec<(DegreeType, Fraction)>,
    linear: Vec<DegreeType>,
    sublinear: Option<BTreeMap<DegreeType, f64>>,
}

impl DegreeModel {
    /// Build and validate a model. `linear` empty defaults to all types
    /// (fixed positive fractions make every present type linear).
    pub fn new(
        mut entries: Vec<(DegreeType, Fraction)>,
        linear: Vec<DegreeType>,
        sublinear: Option<BTreeMap<DegreeType, f64>>,
    ) -> Result<Self, ModelError> {
        entries.sort_by_key(|(t, _)| *t);
        let linear = if linear.is_empty() {
            entries.iter().map(|(t, _)| *t).collect()
        } else {
            linear
        };
        let model = DegreeModel {
            entries,
            linear,
            sublinear,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.entries.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut sum = Fraction::new(0, 1);
        let mut gin = Fraction::new(0, 1);
        let mut gout = Fraction::new(0, 1);
        for w in self.entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ModelError::DuplicateType(w[0].0));
            }
        }
        for &(t, f) in &self.entries {
            if f <= Fraction::new(0, 1) || f > Fraction::new(1, 1) {
                return Err(ModelError::FractionRange(t, f));
            }
            if t.in_deg < 2 || t.out_deg < 2 {
                return Err(ModelError::DegreeTooSmall(t));
            }
            if t.in_deg > MAX_DEGREE || t.out_deg > MAX_DEGREE {
                return Err(ModelError::DegreeTooLarge(t));
            }
            sum += f;
            gin += f * Fraction::from(t.in_deg as i64);
            gout += f * Fraction::from(t.out_deg as i64);
        }
        if sum != Fraction::new(1, 1) {
            return Err(ModelError::FractionSum(sum));
        }
        if gin != gout {
            return Err(ModelError::Unbalanced { gin, gout });
        }
        for t in &self.linear {
            if !self.entries.iter().any(|(u, _)| u == t) {
                return Err(ModelError::UnknownLinearType(*t));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[(DegreeType, Fraction)] {
        &self.entries
    }

    pub fn linear_types(&self) -> &[DegreeType] {
        &self.linear
    }

    pub fn sublinear_exponents(&self) -> Option<&BTreeMap<DegreeType, f64>> {
        self.sublinear.as_ref()
    }

    /// All in-degrees equal all out-degrees type by type.
    pub fn is_eulerian(&self) -> bool {
        self.entries.iter().all(|(t, _)| t.in_deg == t.out_deg)
    }

    /// Average degree `sum fraction * out` (equals the in-side by balance).
    pub fn mean_degree(&self) -> f64 {
        let mut d = Fraction::new(0, 1);
        for &(t, f) in &self.entries {
            d += f * Fraction::from(t.out_deg as i64);
        }
        ratio_to_f64(d)
    }

    /// The `(2,3)(3,2)` half-half family used throughout the experiments.
    pub fn two_three() -> Self {
        DegreeModel::new(
            vec![
                (DegreeType::new(2, 3), Fraction::new(1, 2)),
                (DegreeType::new(3, 2), Fraction::new(1, 2)),
            ],
            vec![],
            None,
        )
        .unwrap()
    }

    /// The Eulerian family with degrees {2,3} half-half, both types declared
    /// with size exponent 1.
    pub fn eulerian_two_three() -> Self {
        let mut sub = BTreeMap::new();
        sub.insert(DegreeType::new(2, 2), 1.0);
        sub.insert(DegreeType::new(3, 3), 1.0);
        DegreeModel::new(
            vec![
                (DegreeType::new(2, 2), Fraction::new(1, 2)),
                (DegreeType::new(3, 3), Fraction::new(1, 2)),
            ],
            vec![],
            Some(sub),
        )
        .unwrap()
    }

    /// The d-regular family (all vertices of type `(d,d)`).
    pub fn regular(d: u16) -> Self {
        DegreeModel::new(
            vec![(DegreeType::new(d, d), Fraction::new(1, 1))],
            vec![],
            None,
        )
        .unwrap()
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let raw: ModelFile = serde_json::from_str(s)?;
        raw.into_model()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String, ModelError> {
        let raw = ModelFile::from_model(self)?;
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}

/// On-disk model schema. Fractions are decimal strings so that the census
/// survives a round trip without float drift.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(default = "default_schema")]
    schema: u32,
    types: Vec<TypeEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    linear: Vec<[u16; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_d: Option<BTreeMap<String, f64>>,
}

#[derive(Serialize, Deserialize)]
struct TypeEntry {
    #[serde(rename = "in")]
    in_deg: u16,
    #[serde(rename = "out")]
    out_deg: u16,
    fraction: serde_json::Value,
}

fn default_schema() -> u32 {
    1
}

impl ModelFile {
    fn into_model(self) -> Result<DegreeModel, ModelError> {
        if self.schema != 1 {
            return Err(ModelError::Schema(self.schema));
        }
        let mut entries = Vec::new();
        for t in &self.types {
            let frac = match &t.fraction {
                serde_json::Value::String(s) => parse_decimal(s)?,
                // A bare JSON number round-trips through the shortest f64
                // representation, which recovers short literals like 0.25
                // exactly; strings remain the canonical form.
                serde_json::Value::Number(n) => parse_decimal(&n.to_string())?,
                other => return Err(ModelError::BadFraction(other.to_string())),
            };
            entries.push((DegreeType::new(t.in_deg, t.out_deg), frac));
        }
        let linear = self
            .linear
            .iter()
            .map(|&[i, j]| DegreeType::new(i, j))
            .collect();
        let sublinear = self.alpha_d.map(|m| {
            m.into_iter()
                .filter_map(|(k, a)| {
                    k.parse::<u16>().ok().map(|d| (DegreeType::new(d, d), a))
                })
                .collect()
        });
        DegreeModel::new(entries, linear, sublinear)
    }

    fn from_model(model: &DegreeModel) -> Result<Self, ModelError> {
        let mut types = Vec::new();
        for &(t, f) in model.entries() {
            types.push(TypeEntry {
                in_deg: t.in_deg,
                out_deg: t.out_deg,
                fraction: serde_json::Value::String(render_decimal(f)?),
            });
        }
        let alpha_d = model.sublinear.as_ref().map(|m| {
            m.iter()
                .map(|(t, a)| (t.in_deg.to_string(), *a))
                .collect()
        });
        Ok(ModelFile {
            schema: 1,
            types,
            linear: model.linear.iter().map(|t| [t.in_deg, t.out_deg]).collect(),
            alpha_d,
        })
    }
}

/// Parse an exact decimal like "0.5" or "1" into a fraction.
pub fn parse_decimal(s: &str) -> Result<Fraction, ModelError> {
    let bad = || ModelError::BadFraction(s.to_string());
    let s = s.trim();
    let (int_part, frac_part) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if s.len() > 18 || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: String = format!("{int_part}{frac_part}");
    let num: i64 = digits.parse().map_err(|_| bad())?;
    let den = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(bad)?;
    Ok(Fraction::new(num, den))
}

fn render_decimal(f: Fraction) -> Result<String, ModelError> {
    // Terminates only for denominators of the form 2^a 5^b, which covers
    // every fraction that came from a decimal literal.
    let mut den = *f.denom();
    let mut pow10 = 1i64;
    let mut digits = 0u32;
    while den % 2 == 0 {
        den /= 2;
        pow10 = pow10.checked_mul(2).ok_or_else(|| ModelError::BadFraction(f.to_string()))?;
        digits += 1;
    }
    let mut d5 = 0u32;
    while den % 5 == 0 {
        den /= 5;
        d5 += 1;
    }
    if den != 1 {
        return Err(ModelError::BadFraction(f.to_string()));
    }
    digits = digits.max(d5);
    let scale = 10i64.pow(digits);
    let scaled = f * Fraction::from(scale);
    debug_assert!(scaled.is_integer());
    let v = scaled.to_integer();
    if digits == 0 {
        return Ok(v.to_string());
    }
    let whole = v / scale;
    let frac = (v % scale).abs();
    Ok(format!("{whole}.{frac:0width$}", width = digits as usize))
}

fn ratio_to_f64(f: Fraction) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

#[derive(Debug, Error)]
pub enum MaterializeError {
    #[error("n = {n} too small (need n >= 2)")]
    TooSmall { n: usize },
    #[error(
        "no exact balance at n = {n}: residual imbalance {imbalance} \
         (sum in - sum out) not fixable by one vertex move"
    )]
    Infeasible { n: usize, imbalance: i64 },
}

/// How `materialize` copes with an `n` where rounding cannot be balanced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BalanceMode {
    /// Reject with a diagnostic.
    Reject,
    /// Drop to the nearest feasible smaller n and report it.
    ShrinkToFeasible,
}

/// Result of materializing a model at a target size.
#[derive(Clone, Debug)]
pub struct Materialized {
    pub sequence: DegreeSequence,
    /// Set when `ShrinkToFeasible` had to reduce n; holds the requested n.
    pub shrunk_from: Option<usize>,
}

/// A concrete degree sequence: per-vertex in/out degrees with their common
/// total `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence {
    d_minus: Vec<u16>,
    d_plus: Vec<u16>,
    m: u64,
}

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("in/out arrays differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degree sums differ: sum d- = {0}, sum d+ = {1}")]
    SumMismatch(u64, u64),
    #[error("vertex {0} has a zero degree")]
    ZeroDegree(usize),
    #[error("vertex {v}: degree {d} exceeds the cap {MAX_DEGREE}")]
    DegreeTooLarge { v: usize, d: u16 },
    #[error("paper assumptions need min degree >= 2, found {0}")]
    MinDegreeBelowTwo(u16),
}

impl DegreeSequence {
    /// Degrees must be positive with equal sums. Min degree 1 is accepted
    /// here; `validate_paper_mode` adds the stricter assumption.
    pub fn new(d_minus: Vec<u16>, d_plus: Vec<u16>) -> Result<Self, SequenceError> {
        if d_minus.len() != d_plus.len() {
            return Err(SequenceError::LengthMismatch(d_minus.len(), d_plus.len()));
        }
        let mut sin = 0u64;
        let mut sout = 0u64;
        for (v, (&i, &o)) in d_minus.iter().zip(&d_plus).enumerate() {
            if i == 0 || o == 0 {
                return Err(SequenceError::ZeroDegree(v));
            }
            let d = i.max(o);
            if d > MAX_DEGREE {
                return Err(SequenceError::DegreeTooLarge { v, d });
            }
            sin += i as u64;
            sout += o as u64;
        }
        if sin != sout {
            return Err(SequenceError::SumMismatch(sin, sout));
        }
        Ok(DegreeSequence {
            d_minus,
            d_plus,
            m: sin,
        })
    }

    /// The assumption the whole theory rests on: every degree at least 2.
    pub fn validate_paper_mode(&self) -> Result<(), SequenceError> {
        let dmin = self.min_in().min(self.min_out());
        if dmin < 2 {
            return Err(SequenceError::MinDegreeBelowTwo(dmin));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.d_minus.len()
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn in_degrees(&self) -> &[u16] {
        &self.d_minus
    }

    pub fn out_degrees(&self) -> &[u16] {
        &self.d_plus
    }

    pub fn min_in(&self) -> u16 {
        *self.d_minus.iter().min().unwrap()
    }

    pub fn min_out(&self) -> u16 {
        *self.d_plus.iter().min().unwrap()
    }

    pub fn max_in(&self) -> u16 {
        *self.d_minus.iter().max().unwrap()
    }

    pub fn max_out(&self) -> u16 {
        *self.d_plus.iter().max().unwrap()
    }

    /// min(delta-, delta+)
    pub fn min_degree(&self) -> u16 {
        self.min_in().min(self.min_out())
    }

    /// max(Delta-, Delta+)
    pub fn max_degree(&self) -> u16 {
        self.max_in().max(self.max_out())
    }

    pub fn is_eulerian(&self) -> bool {
        self.d_minus == self.d_plus
    }

    /// Count of vertices per type, sorted by type.
    pub fn census(&self) -> BTreeMap<DegreeType, usize> {
        let mut c = BTreeMap::new();
        for (&i, &o) in self.d_minus.iter().zip(&self.d_plus) {
            *c.entry(DegreeType::new(i, o)).or_insert(0) += 1;
        }
        c
    }
}

/// Turn a model into a concrete sequence of length `n`.
///
/// Counts are largest-remainder roundings of `fraction * n` (ties broken by
/// type order), then at most one vertex is moved between two types to restore
/// the exact balance of degree sums. Vertices are laid out in blocks sorted
/// by type, so the result is deterministic.
pub fn materialize(
    model: &DegreeModel,
    n: usize,
    mode: BalanceMode,
) -> Result<Materialized, MaterializeError> {
    if n < 2 {
        return Err(MaterializeError::TooSmall { n });
    }
    match try_counts(model, n) {
        Ok(counts) => Ok(Materialized {
            sequence: sequence_from_counts(model, &counts),
            shrunk_from: None,
        }),
        Err(e) => match mode {
            BalanceMode::Reject => Err(e),
            BalanceMode::ShrinkToFeasible => {
                for smaller in (2..n).rev() {
                    if let Ok(counts) = try_counts(model, smaller) {
                        return Ok(Materialized {
                            sequence: sequence_from_counts(model, &counts),
                            shrunk_from: Some(n),
                        });
                    }
                }
                Err(e)
            }
        },
    }
}

fn try_counts(model: &DegreeModel, n: usize) -> Result<Vec<usize>, MaterializeError> {
    let types = model.entries();
    // Largest-remainder apportionment of n among the types.
    let mut counts: Vec<usize> = Vec::with_capacity(types.len());
    let mut remainders: Vec<(Fraction, usize)> = Vec::with_capacity(types.len());
    let mut assigned = 0usize;
    for (idx, &(_, f)) in types.iter().enumerate() {
        let exact = f * Fraction::from(n as i64);
        let floor = exact.floor().to_integer() as usize;
        counts.push(floor);
        assigned += floor;
        remainders.push((exact - exact.floor(), idx));
    }
    // Ties resolved by type order (entries are sorted by type).
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, idx) in remainders.iter().take(n - assigned) {
        counts[idx] += 1;
    }

    let imbalance = |c: &[usize]| -> i64 {
        c.iter()
            .zip(types)
            .map(|(&k, &(t, _))| k as i64 * (t.in_deg as i64 - t.out_deg as i64))
            .sum()
    };
    let d0 = imbalance(&counts);
    if d0 == 0 {
        return Ok(counts);
    }
    // One vertex moved from type a to type b shifts the imbalance by
    // (in_b - out_b) - (in_a - out_a); try pairs in type order.
    for a in 0..types.len() {
        if counts[a] == 0 {
            continue;
        }
        for b in 0..types.len() {
            if a == b {
                continue;
            }
            let sa = types[a].0.in_deg as i64 - types[a].0.out_deg as i64;
            let sb = types[b].0.in_deg as i64 - types[b].0.out_deg as i64;
            if d0 + (sb - sa) == 0 {
                let mut fixed = counts.clone();
                fixed[a] -= 1;
                fixed[b] += 1;
                return Ok(fixed);
            }
        }
    }
    Err(MaterializeError::Infeasible { n, imbalance: d0 })
}

fn sequence_from_counts(model: &DegreeModel, counts: &[usize]) -> DegreeSequence {
    let n: usize = counts.iter().sum();
    let mut d_minus = Vec::with_capacity(n);
    let mut d_plus = Vec::with_capacity(n);
    for (&(t, _), &c) in model.entries().iter().zip(counts) {
        for _ in 0..c {
            d_minus.push(t.in_deg);
            d_plus.push(t.out_deg);
        }
    }
    DegreeSequence::new(d_minus, d_plus).expect("balanced by construction")
}

/// The deterministic scales of one sequence. All logarithms are natural.
#[derive(Clone, Copy, Debug)]
pub struct ModelScales {
    pub n: usize,
    /// Mean offspring (1/m) sum d- d+; neighborhood growth rate.
    pub nu: f64,
    /// Entropy H = sum (d-/m) log d+.
    pub entropy: f64,
    /// Entropic time log n / H; the mixing scale.
    pub t_ent: f64,
    /// log n / log nu; the diameter scale.
    pub d_star: f64,
    /// (1/5) log n / log Delta; depth to which neighborhoods stay near-trees.
    pub hslash: f64,
    /// log log log n; undefined (None) below n = 16.
    pub theta: Option<f64>,
    /// 4 log log n / log delta.
    pub ell0: f64,
}

impl ModelScales {
    /// (1 - eta) log n / log nu.
    pub fn h_eta(&self, eta: f64) -> f64 {
        (1.0 - eta) * (self.n as f64).ln() / self.nu.ln()
    }
}

/// Compute every scale of a sequence. Order-invariant in the vertex labels.
pub fn scales(seq: &DegreeSequence) -> ModelScales {
    let n = seq.n();
    let m = seq.m() as f64;
    let ln_n = (n as f64).ln();
    let mut nu = Kahan::default();
    let mut h = Kahan::default();
    for (&di, &dout) in seq.in_degrees().iter().zip(seq.out_degrees()) {
        nu.add(di as f64 * dout as f64 / m);
        h.add(di as f64 / m * (dout as f64).ln());
    }
    let nu = nu.value();
    let entropy = h.value();
    let delta = seq.min_degree() as f64;
    let cap = seq.max_degree() as f64;
    ModelScales {
        n,
        nu,
        entropy,
        t_ent: ln_n / entropy,
        d_star: ln_n / nu.ln(),
        hslash: ln_n / (5.0 * cap.ln()),
        theta: if n >= 16 { Some(ln_n.ln().ln()) } else { None },
        ell0: if delta >= 2.0 {
            4.0 * ln_n.ln() / delta.ln()
        } else {
            f64::INFINITY
        },
    }
}

/// The exponents governing the extremal stationary values and the cover time.
#[derive(Clone, Copy, Debug)]
pub struct Exponents {
    /// log Delta+ / log delta-.
    pub gamma0: f64,
    /// max over linear types (k,l) of log l / log k.
    pub gamma1: f64,
    /// log delta+ / log Delta-.
    pub kappa0: f64,
    /// min over linear types (k,l) of log l / log k.
    pub kappa1: f64,
    /// Sharpened gamma0 over the almost-linear set, when declared.
    pub gamma0_prime: Option<f64>,
    /// Sharpened kappa0 over the almost-linear set, when declared.
    pub kappa0_prime: Option<f64>,
    /// Left-tail exponent 1/(gamma1 - 1); None in the regular case gamma1 = 1.
    pub alpha: Option<f64>,
    /// Eulerian cover-time constant mean_degree * max_d alpha_d / d.
    pub beta_euler: Option<f64>,
}

/// Exponents of a validated model with a nonempty linear set.
pub fn exponents(model: &DegreeModel) -> Exponents {
    assert!(
        !model.linear_types().is_empty(),
        "exponents need a nonempty linear set"
    );
    let all = model.entries();
    let dplus_max = all.iter().map(|(t, _)| t.out_deg).max().unwrap() as f64;
    let dplus_min = all.iter().map(|(t, _)| t.out_deg).min().unwrap() as f64;
    let dminus_max = all.iter().map(|(t, _)| t.in_deg).max().unwrap() as f64;
    let dminus_min = all.iter().map(|(t, _)| t.in_deg).min().unwrap() as f64;
    let gamma0 = dplus_max.ln() / dminus_min.ln();
    let kappa0 = dplus_min.ln() / dminus_max.ln();

    let ratio = |t: &DegreeType| (t.out_deg as f64).ln() / (t.in_deg as f64).ln();
    let gamma1 = model
        .linear_types()
        .iter()
        .map(ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let kappa1 = model
        .linear_types()
        .iter()
        .map(ratio)
        .fold(f64::INFINITY, f64::min);

    // The almost-linear set: declared linear types plus any type whose
    // declared size exponent is exactly 1.
    let (gamma0_prime, kappa0_prime) = match model.sublinear_exponents() {
        None => (None, None),
        Some(sub) => {
            let mut l0: Vec<DegreeType> = model.linear_types().to_vec();
            for (&t, &a) in sub {
                if a == 1.0 && !l0.contains(&t) {
                    l0.push(t);
                }
            }
            let lmax = l0.iter().map(|t| t.out_deg).max().unwrap() as f64;
            let lmin = l0.iter().map(|t| t.out_deg).min().unwrap() as f64;
            let kmax = l0.iter().map(|t| t.in_deg).max().unwrap() as f64;
            let kmin = l0.iter().map(|t| t.in_deg).min().unwrap() as f64;
            (Some(lmax.ln() / kmin.ln()), Some(lmin.ln() / kmax.ln()))
        }
    };

    let alpha = if gamma1 > 1.0 {
        Some(1.0 / (gamma1 - 1.0))
    } else {
        None
    };

    let beta_euler = match (model.is_eulerian(), model.sublinear_exponents()) {
        (true, Some(sub)) if all.iter().all(|(t, _)| sub.contains_key(t)) => {
            let best = all
                .iter()
                .map(|(t, _)| sub[t] / t.in_deg as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            Some(model.mean_degree() * best)
        }
        _ => None,
    };

    Exponents {
        gamma0,
        gamma1,
        kappa0,
        kappa1,
        gamma0_prime,
        kappa0_prime,
        alpha,
        beta_euler,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_half() -> DegreeModel {
        DegreeModel::two_three()
    }

    #[test]
    fn materialize_half_half_even() {
        let m = materialize(&half_half(), 10, BalanceMode::Reject).unwrap();
        assert!(m.shrunk_from.is_none());
        let seq = m.sequence;
        assert_eq!(seq.n(), 10);
        assert_eq!(seq.m(), 25);
        let census = seq.census();
        assert_eq!(census[&DegreeType::new(2, 3)], 5);
        assert_eq!(census[&DegreeType::new(3, 2)], 5);
    }

    #[test]
    fn materialize_half_half_odd_is_parity_blocked() {
        let err = materialize(&half_half(), 11, BalanceMode::Reject).unwrap_err();
        match err {
            MaterializeError::Infeasible { n, imbalance } => {
                assert_eq!(n, 11);
                assert_eq!(imbalance.abs(), 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
        let m = materialize(&half_half(), 11, BalanceMode::ShrinkToFeasible).unwrap();
        assert_eq!(m.shrunk_from, Some(11));
        assert_eq!(m.sequence.n(), 10);
        assert_eq!(m.sequence.m(), 25);
    }

    #[test]
    fn materialize_regular() {
        let m = materialize(&DegreeModel::regular(3), 7, BalanceMode::Reject).unwrap();
        assert_eq!(m.sequence.n(), 7);
        assert_eq!(m.sequence.m(), 21);
        assert!(m.sequence.in_degrees().iter().all(|&d| d == 3));
    }

    #[test]
    fn materialize_is_deterministic() {
        let a = materialize(&half_half(), 1000, BalanceMode::Reject).unwrap();
        let b = materialize(&half_half(), 1000, BalanceMode::Reject).unwrap();
        assert_eq!(a.sequence, b.sequence);
    }

    #[test]
    fn scales_match_hand_values() {
        let seq = materialize(&half_half(), 2000, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let s = scales(&seq);
        // nu = (1/2.5n)(n/2*6 + n/2*6) = 2.4
        assert!((s.nu - 2.4).abs() < 1e-12);
        // H = (log 3 + 1.5 log 2)/2.5
        let h = (3f64.ln() + 1.5 * 2f64.ln()) / 2.5;
        assert!((s.entropy - h).abs() < 1e-12);
        assert!((s.entropy - 0.85533).abs() < 1e-5);
        assert!((s.t_ent - (2000f64).ln() / h).abs() < 1e-9);
        assert!((s.d_star - (2000f64).ln() / 2.4f64.ln()).abs() < 1e-9);
        assert!(s.theta.is_some());
    }

    #[test]
    fn scales_regular_hits_jensen_equality() {
        let seq = materialize(&DegreeModel::regular(4), 100, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let s = scales(&seq);
        assert!((s.entropy - 4f64.ln()).abs() < 1e-12);
        assert!((s.entropy - s.nu.ln()).abs() < 1e-12);
        assert!((s.t_ent - s.d_star).abs() < 1e-9);
    }

    #[test]
    fn entropy_below_log_nu_when_not_out_regular() {
        let seq = materialize(&half_half(), 100, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let s = scales(&seq);
        assert!(s.entropy < s.nu.ln() - 1e-6);
    }

    #[test]
    fn scales_are_order_invariant() {
        let seq = materialize(&half_half(), 50, BalanceMode::Reject)
            .unwrap()
            .sequence;
        let mut din = seq.in_degrees().to_vec();
        let mut dout = seq.out_degrees().to_vec();
        // Permute by rotating pairs.
        din.rotate_left(17);
        dout.rotate_left(17);
        let permuted = DegreeSequence::new(din, dout).unwrap();
        let a = scales(&seq);
        let b = scales(&permuted);
        assert_eq!(a.nu, b.nu);
        assert_eq!(a.entropy, b.entropy);
    }

    #[test]
    fn theta_flagged_small_n() {
        let seq = materialize(&half_half(), 10, BalanceMode::Reject)
            .unwrap()
            .sequence;
        assert!(scales(&seq).theta.is_none());
    }

    #[test]
    fn exponents_two_three() {
        let e = exponents(&half_half());
        let g = 3f64.ln() / 2f64.ln();
        let k = 2f64.ln() / 3f64.ln();
        assert!((e.gamma0 - g).abs() < 1e-12);
        assert!((e.gamma1 - g).abs() < 1e-12);
        assert!((e.kappa0 - k).abs() < 1e-12);
        assert!((e.kappa1 - k).abs() < 1e-12);
        assert!((g - 1.58496).abs() < 1e-5);
        assert!((k - 0.63093).abs() < 1e-5);
        let alpha = e.alpha.unwrap();
        assert!((alpha - 1.0 / (g - 1.0)).abs() < 1e-12);
        assert!((alpha - 1.70951).abs() < 1e-5);
    }

    #[test]
    fn exponents_are_ordered() {
        for model in [
            half_half(),
            DegreeModel::eulerian_two_three(),
            DegreeModel::regular(3),
        ] {
            let e = exponents(&model);
            assert!(e.gamma0 >= e.gamma1 - 1e-12);
            assert!(e.gamma1 >= 1.0 - 1e-12);
            assert!(1.0 >= e.kappa1 - 1e-12);
            assert!(e.kappa1 >= e.kappa0 - 1e-12);
        }
    }

    #[test]
    fn regular_alpha_undefined() {
        let e = exponents(&DegreeModel::regular(3));
        assert!(e.alpha.is_none());
        assert_eq!(e.gamma1, 1.0);
    }

    #[test]
    fn eulerian_beta() {
        let e = exponents(&DegreeModel::eulerian_two_three());
        assert!((e.beta_euler.unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn model_json_round_trip() {
        let model = DegreeModel::eulerian_two_three();
        let s = model.to_json_string().unwrap();
        let back = DegreeModel::from_json_str(&s).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn model_json_matches_documented_schema() {
        let s = r#"{
            "types": [
                {"in": 2, "out": 3, "fraction": "0.5"},
                {"in": 3, "out": 2, "fraction": 0.5}
            ],
            "linear": [[2, 3], [3, 2]],
            "alpha_d": {"2": 1.0}
        }"#;
        let m = DegreeModel::from_json_str(s).unwrap();
        assert_eq!(m.entries().len(), 2);
        assert_eq!(m.linear_types().len(), 2);
        assert!(m.sublinear_exponents().is_some());
    }

    #[test]
    fn model_validation_errors() {
        // Fractions not summing to one.
        let err = DegreeModel::new(
            vec![(DegreeType::new(2, 2), Fraction::new(1, 2))],
            vec![],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::FractionSum(_)));
        // Unbalanced in/out.
        let err = DegreeModel::new(
            vec![(DegreeType::new(2, 3), Fraction::new(1, 1))],
            vec![],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Unbalanced { .. }));
        // Linear type not in census.
        let err = DegreeModel::new(
            vec![(DegreeType::new(2, 2), Fraction::new(1, 1))],
            vec![DegreeType::new(3, 3)],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::UnknownLinearType(_)));
        // Model-level minimum degree.
        let err = DegreeModel::new(
            vec![(DegreeType::new(1, 1), Fraction::new(1, 1))],
            vec![],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::DegreeTooSmall(_)));
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_decimal("0.5").unwrap(), Fraction::new(1, 2));
        assert_eq!(parse_decimal("1").unwrap(), Fraction::new(1, 1));
        assert_eq!(parse_decimal("0.125").unwrap(), Fraction::new(1, 8));
        assert!(parse_decimal("x").is_err());
        assert_eq!(render_decimal(Fraction::new(1, 8)).unwrap(), "0.125");
        assert_eq!(render_decimal(Fraction::new(1, 1)).unwrap(), "1");
    }
}
