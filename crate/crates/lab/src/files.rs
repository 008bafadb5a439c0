//! Pattern and value files.
//!
//! A pattern file is a JSON object with `rows`, `cols`, `indexing` (always
//! `"1-based"`), `unspecified` as `[i, j]` pairs and an optional `family`
//! descriptor such as `"G(7,3)"`. A family alone is enough; when both are
//! given they must agree.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lowrank_core::complete::PartialMatrix;
use lowrank_core::{EntryPattern, Matrix, PatternFamily};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub const INDEXING: &str = "1-based";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indexing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unspecified: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
}

impl PatternFile {
    pub fn from_pattern(p: &EntryPattern, family: Option<&PatternFamily>) -> Self {
        Self {
            rows: Some(p.rows()),
            cols: Some(p.cols()),
            indexing: Some(INDEXING.to_string()),
            unspecified: Some(p.unspecified().to_vec()),
            family: family.map(PatternFamily::descriptor),
        }
    }

    pub fn to_pattern(&self) -> Result<EntryPattern> {
        if let Some(ix) = &self.indexing {
            if ix != INDEXING {
                bail!("unsupported indexing {ix:?}; pattern files are {INDEXING}");
            }
        }
        let from_family = match &self.family {
            Some(desc) => Some(PatternFamily::parse(desc)?.instantiate()?),
            None => None,
        };
        let explicit = match (self.rows, self.cols, &self.unspecified) {
            (Some(r), Some(c), Some(u)) => Some(EntryPattern::new(r, c, u.iter().copied())?),
            (None, None, None) => None,
            _ => bail!("rows, cols and unspecified must be given together"),
        };
        match (explicit, from_family) {
            (Some(e), Some(f)) if e != f => bail!("explicit entries disagree with family {}", self.family.as_deref().unwrap_or("")),
            (Some(e), _) => Ok(e),
            (None, Some(f)) => Ok(f),
            (None, None) => bail!("pattern file needs explicit entries or a family"),
        }
    }
}

pub fn read_pattern(path: &Path) -> Result<EntryPattern> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: PatternFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.to_pattern().with_context(|| format!("invalid pattern in {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Full-matrix values as nested rows. Unspecified positions may hold
/// anything, including `null`. Rational entries are integers or `"p/q"`
/// strings.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Number(f64),
    Text(String),
    Null,
}

fn read_scalars(path: &Path) -> Result<Vec<Vec<Scalar>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn check_shape(rows: &[Vec<Scalar>], p: &EntryPattern) -> Result<()> {
    if rows.len() != p.rows() || rows.iter().any(|r| r.len() != p.cols()) {
        bail!("values must be a {}x{} nested array", p.rows(), p.cols());
    }
    Ok(())
}

pub fn read_real_values(path: &Path, p: &EntryPattern) -> Result<PartialMatrix<f64>> {
    let rows = read_scalars(path)?;
    check_shape(&rows, p)?;
    let mut values = Matrix::filled(p.rows(), p.cols(), 0.0);
    for (i, j) in p.specified_zero_based() {
        values[(i, j)] = match &rows[i][j] {
            Scalar::Number(v) => *v,
            Scalar::Text(t) => t.trim().parse().with_context(|| format!("entry ({},{})", i + 1, j + 1))?,
            Scalar::Null => bail!("specified entry ({},{}) is null", i + 1, j + 1),
        };
    }
    Ok(PartialMatrix::new(p.clone(), values))
}

pub fn read_rational_values(path: &Path, p: &EntryPattern) -> Result<PartialMatrix<BigRational>> {
    let rows = read_scalars(path)?;
    check_shape(&rows, p)?;
    let mut values = Matrix::filled(p.rows(), p.cols(), BigRational::default());
    for (i, j) in p.specified_zero_based() {
        let at = || format!("entry ({},{})", i + 1, j + 1);
        values[(i, j)] = match &rows[i][j] {
            Scalar::Number(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => BigRational::from_integer((*v as i64).into()),
            Scalar::Number(v) => BigRational::from_float(*v).with_context(at)?,
            Scalar::Text(t) => t.trim().parse().ok().with_context(at)?,
            Scalar::Null => bail!("specified {} is null", at()),
        };
    }
    Ok(PartialMatrix::new(p.clone(), values))
}
