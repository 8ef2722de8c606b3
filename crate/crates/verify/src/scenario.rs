//! Scenario files: a TOML document describing the duality structure, the
//! scalar target, the taming, the spacetime grid, the fields and candidate
//! duality transformations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use esm_core::exact::{rat, QMatrix, Rational};
use esm_core::local_system::Word;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Result, VerifyError};

/// An exact matrix entry: an integer or a `"p/q"` string.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Exact {
    Integer(i64),
    Fraction(String),
}

impl Exact {
    pub fn to_rational(&self, field: &str) -> Result<Rational> {
        match self {
            Exact::Integer(n) => Ok(rat(*n, 1)),
            Exact::Fraction(s) => {
                let bad = || VerifyError::schema(field, format!("{s:?} is not an integer or p/q fraction"));
                let (num, den) = match s.split_once('/') {
                    Some((p, q)) => (p.trim().parse::<i64>().map_err(|_| bad())?, q.trim().parse::<i64>().map_err(|_| bad())?),
                    None => (s.trim().parse::<i64>().map_err(|_| bad())?, 1),
                };
                if den == 0 {
                    return Err(VerifyError::schema(field, format!("{s:?} has a zero denominator")));
                }
                Ok(rat(num, den))
            }
        }
    }
}

pub type ExactMatrix = Vec<Vec<Exact>>;
pub type FloatMatrix = Vec<Vec<f64>>;

pub fn exact_matrix(rows: &ExactMatrix, field: &str) -> Result<QMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(VerifyError::schema(field, "matrix rows must be nonempty and of equal length"));
    }
    let entries = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter().enumerate().map(|(j, e)| e.to_rational(&format!("{field}[{i}][{j}]"))).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QMatrix::from_rows(entries))
}

pub fn float_matrix(rows: &FloatMatrix, size: usize, field: &str) -> Result<nalgebra::DMatrix<f64>> {
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(VerifyError::schema(field, format!("expected a {size}x{size} matrix")));
    }
    Ok(nalgebra::DMatrix::from_fn(size, size, |r, c| rows[r][c]))
}

/// Parses `"a b^-1 a^2"` (letters separated by spaces or `*`); the empty
/// string and `"1"` are the identity.
pub fn parse_word(text: &str, generators: &[String], field: &str) -> Result<Word> {
    let mut letters = Vec::new();
    for token in text.split(|c: char| c.is_whitespace() || c == '*').filter(|t| !t.is_empty() && *t != "1") {
        let (name, power) = match token.split_once('^') {
            Some((name, p)) => {
                let p = p.trim_start_matches('(').trim_end_matches(')');
                let power = p.parse::<i64>().map_err(|_| VerifyError::schema(field, format!("bad exponent in {token:?}")))?;
                (name, power)
            }
            None => (token, 1),
        };
        let index = generators
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| VerifyError::schema(field, format!("unknown generator {name:?} in {text:?}")))?;
        let sign: i8 = if power < 0 { -1 } else { 1 };
        for _ in 0..power.unsigned_abs() {
            letters.push((index, sign));
        }
    }
    Ok(Word::new(letters).reduced())
}

/// Spells a word with generator names, `"1"` for the identity.
pub fn format_word(word: &Word, generators: &[String]) -> String {
    if word.is_empty() {
        return "1".into();
    }
    let mut parts: Vec<String> = Vec::new();
    let letters = word.letters();
    let mut i = 0;
    while i < letters.len() {
        let (g, s) = letters[i];
        let mut run = 1;
        while i + run < letters.len() && letters[i + run] == (g, s) {
            run += 1;
        }
        let power = run as i64 * i64::from(s);
        let name = generators.get(g).cloned().unwrap_or_else(|| format!("g{g}"));
        parts.push(if power == 1 { name } else { format!("{name}^{power}") });
        i += run;
    }
    parts.join(" ")
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub kappa: Option<f64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

/// Monodromy of the duality structure: one generator per periodic target
/// direction, in order.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonodromySpec {
    /// Half the fiber dimension.
    pub n: usize,
    #[serde(default)]
    pub generators: Vec<String>,
    #[serde(default)]
    pub relations: Vec<String>,
    /// Adds all commutators of the generators to the relations.
    #[serde(default)]
    pub abelian: bool,
    #[serde(default)]
    pub images: Vec<ExactMatrix>,
    /// Symplectic pairing; the standard one when absent.
    pub omega: Option<ExactMatrix>,
    /// Basis of the Dirac lattice as the columns of an integer matrix.
    pub lattice: Option<ExactMatrix>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PeriodSpec {
    Length(f64),
    Open(String),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// One entry per target coordinate: a period or `"open"`.
    pub periods: Vec<PeriodSpec>,
    #[serde(default)]
    pub metric: TargetMetricSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub fd_step: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetMetricSpec {
    #[default]
    Flat,
    Constant { matrix: FloatMatrix },
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `value + 1/2 (y - center)^T hessian (y - center)`.
    Quadratic {
        #[serde(default)]
        value: f64,
        center: Vec<f64>,
        hessian: FloatMatrix,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    /// Points per target direction; periodic directions cover one period.
    pub counts: Vec<usize>,
    /// `[lo, hi]` per direction; ignored for periodic directions.
    #[serde(default)]
    pub ranges: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TamingSpec {
    /// `J0 = Omega` for the standard pairing.
    Standard { samples: SampleSpec },
    Constant { matrix: FloatMatrix, samples: SampleSpec },
    /// `exp(sum y_i X_i) base exp(-sum y_i X_i)` with one generator per
    /// target direction.
    Conjugated { base: Option<FloatMatrix>, generators: Vec<FloatMatrix>, samples: SampleSpec },
    /// One matrix per sample point, in row-major sample order.
    Sampled { values: Vec<FloatMatrix>, samples: SampleSpec },
}

impl TamingSpec {
    pub fn samples(&self) -> &SampleSpec {
        match self {
            TamingSpec::Standard { samples }
            | TamingSpec::Constant { samples, .. }
            | TamingSpec::Conjugated { samples, .. }
            | TamingSpec::Sampled { samples, .. } => samples,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeSpec {
    pub shape: [usize; 4],
    /// Node spacing; exclusive with `extent`.
    pub spacing: Option<[f64; 4]>,
    /// Side lengths: the period for periodic axes, first-to-last node
    /// distance for open ones.
    pub extent: Option<[f64; 4]>,
    #[serde(default)]
    pub origin: [f64; 4],
    #[serde(default)]
    pub periodic: [bool; 4],
    /// Target loop traced by the scalar along each periodic axis.
    #[serde(default)]
    pub winding: Vec<String>,
}

impl SpacetimeSpec {
    /// Node spacing per axis.
    pub fn spacing(&self) -> Result<[f64; 4]> {
        match (self.spacing, self.extent) {
            (Some(h), None) => Ok(h),
            (None, Some(e)) => {
                let mut h = [0.0; 4];
                for m in 0..4 {
                    let n = self.shape[m];
                    h[m] = if self.periodic[m] {
                        e[m] / n as f64
                    } else if n > 1 {
                        e[m] / (n - 1) as f64
                    } else {
                        1.0
                    };
                }
                Ok(h)
            }
            _ => Err(VerifyError::schema("spacetime", "give exactly one of spacing and extent")),
        }
    }

    /// Divides the spacing of the selected axes by `factor`, keeping the
    /// covered extent.
    pub fn refined(&self, factor: usize, axes: [bool; 4]) -> Result<Self> {
        if factor == 0 {
            return Err(VerifyError::schema("refine", "factor must be positive"));
        }
        let mut h = self.spacing()?;
        let mut shape = self.shape;
        for m in 0..4 {
            if !axes[m] || shape[m] <= 1 {
                continue;
            }
            shape[m] = if self.periodic[m] { shape[m] * factor } else { (shape[m] - 1) * factor + 1 };
            h[m] /= factor as f64;
        }
        Ok(SpacetimeSpec { shape, spacing: Some(h), extent: None, ..self.clone() })
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Minkowski,
    /// Schwarzschild metric with mass `mass` in `(t, r, theta, phi)`.
    Schwarzschild { mass: f64 },
    /// Sixteen row-major components per node.
    Sampled {
        #[serde(default)]
        values: Vec<f64>,
        file: Option<String>,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Wave {
    #[serde(default)]
    pub component: usize,
    pub amplitude: f64,
    /// Cycles per unit length along each spacetime axis.
    pub frequency: [f64; 4],
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Constant { value: Vec<f64> },
    /// `offset + slope x + sum amplitude sin(2 pi frequency . x + phase)`.
    Analytic {
        offset: Vec<f64>,
        #[serde(default)]
        slope: Vec<[f64; 4]>,
        #[serde(default)]
        waves: Vec<Wave>,
    },
    /// Target coordinates per node.
    Sampled {
        #[serde(default)]
        values: Vec<f64>,
        file: Option<String>,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairBlock {
    /// Two distinct axis digits, e.g. `"03"`.
    pub pair: String,
    pub values: Vec<f64>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    /// Constant components `W` in every node.
    Constant {
        components: Vec<PairBlock>,
        #[serde(default = "unit")]
        scale: f64,
    },
    /// `V = E(phi) W` with the flat frame `E` of a conjugated taming.
    Frame {
        components: Vec<PairBlock>,
        #[serde(default = "unit")]
        scale: f64,
    },
    /// Six pair blocks of `2n` entries per node, pairs in the order
    /// `01 02 03 12 13 23`.
    Sampled {
        #[serde(default)]
        values: Vec<f64>,
        file: Option<String>,
        #[serde(default = "unit")]
        scale: f64,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetMapSpec {
    Identity,
    Translation { shift: Vec<f64> },
    Linear { matrix: FloatMatrix },
    Affine { matrix: FloatMatrix, shift: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransformationSpec {
    pub name: Option<String>,
    pub f0: TargetMapSpec,
    pub lift: ExactMatrix,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub name: String,
    pub description: Option<String>,
    #[serde(default)]
    pub params: ParamsSpec,
    pub monodromy: Option<MonodromySpec>,
    pub target: Option<TargetSpec>,
    pub taming: Option<TamingSpec>,
    pub spacetime: Option<SpacetimeSpec>,
    pub metric: Option<MetricSpec>,
    pub phi: Option<PhiSpec>,
    pub v: Option<FieldSpec>,
    #[serde(default)]
    pub transformation: Vec<TransformationSpec>,
}

/// A parsed scenario with its content digest.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub doc: ScenarioDocument,
    /// SHA-256 of the canonical JSON form (sorted keys) of the document.
    pub hash: String,
    /// Directory against which sample files are resolved.
    pub base_dir: PathBuf,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

fn parse_error(text: &str, origin: &str, err: &toml::de::Error) -> VerifyError {
    let (line, column) = err.span().map_or((1, 1), |s| line_column(text, s.start));
    VerifyError::Parse { path: origin.to_string(), line, column, message: err.message().to_string() }
}

/// Digest of a TOML document that ignores formatting and key order.
pub fn content_hash(value: &toml::Value) -> String {
    let json = canonical_json(value);
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn canonical_json(value: &toml::Value) -> String {
    match value {
        toml::Value::String(s) => serde_json::Value::String(s.clone()).to_string(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => serde_json::Number::from_f64(*f).map_or_else(|| format!("\"{f}\""), |n| n.to_string()),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Datetime(d) => serde_json::Value::String(d.to_string()).to_string(),
        toml::Value::Array(items) => format!("[{}]", items.iter().map(canonical_json).collect::<Vec<_>>().join(",")),
        toml::Value::Table(table) => {
            let sorted: BTreeMap<&String, &toml::Value> = table.iter().collect();
            let body: Vec<String> = sorted
                .into_iter()
                .map(|(k, v)| format!("{}:{}", serde_json::Value::String(k.clone()), canonical_json(v)))
                .collect();
            format!("{{{}}}", body.join(","))
        }
    }
}

impl Scenario {
    /// Parses scenario text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| parse_error(text, origin, &e))?;
        let doc: ScenarioDocument = toml::from_str(text).map_err(|e| parse_error(text, origin, &e))?;
        Ok(Scenario { doc, hash: content_hash(&value), base_dir: base_dir.into() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| VerifyError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    /// Values of a sampled block: inline numbers or a whitespace-separated
    /// text file relative to the scenario file.
    pub fn sampled_values(&self, values: &[f64], file: &Option<String>, field: &str) -> Result<Vec<f64>> {
        match (file, values.is_empty()) {
            (Some(file), true) => {
                let path = self.base_dir.join(file);
                let text =
                    std::fs::read_to_string(&path).map_err(|source| VerifyError::Io { path: path.clone(), source })?;
                text.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| VerifyError::schema(field, format!("{t:?} in {file} is not a number"))))
                    .collect()
            }
            (None, false) => Ok(values.to_vec()),
            (None, true) => Err(VerifyError::schema(field, "sampled block needs values or file")),
            (Some(_), false) => Err(VerifyError::schema(field, "give either values or file, not both")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_round_trip_through_text() {
        let gens = vec!["a".to_string(), "b".to_string()];
        let w = parse_word("a b^-1 b^-1 a*a", &gens, "w").unwrap();
        assert_eq!(format_word(&w, &gens), "a b^-2 a^2");
        assert!(parse_word("a a^-1", &gens, "w").unwrap().is_empty());
        assert!(parse_word("c", &gens, "w").is_err());
    }

    #[test]
    fn fractions_parse_exactly() {
        assert_eq!(Exact::Fraction("-3/6".into()).to_rational("x").unwrap(), rat(-1, 2));
        assert_eq!(Exact::Integer(4).to_rational("x").unwrap(), rat(4, 1));
        assert!(Exact::Fraction("1/0".into()).to_rational("x").is_err());
        assert!(Exact::Fraction("0.5".into()).to_rational("x").is_err());
    }

    #[test]
    fn hash_ignores_key_order_and_formatting() {
        let a = Scenario::parse("name = \"x\"\n[params]\nkappa = 2.0\n[params.tolerances]\nalg_tol = 1e-9\n", "a", ".").unwrap();
        let b = Scenario::parse("[params]\ntolerances = { alg_tol = 0.000000001 }\nkappa = 2.0\n\n[__]\n", "b", ".");
        assert!(b.is_err());
        let b = Scenario::parse("params = { tolerances = { alg_tol = 0.000000001 }, kappa = 2.0 }\nname = \"x\"\n", "b", ".").unwrap();
        assert_eq!(a.hash, b.hash);
        let c = Scenario::parse("name = \"y\"\n", "c", ".").unwrap();
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn parse_errors_carry_a_location() {
        let err = Scenario::parse("name = \"x\"\n[spacetime]\nshape = [1, 2]\n", "s.toml", ".").unwrap_err();
        match err {
            VerifyError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
