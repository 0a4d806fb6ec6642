use serde::{Deserialize, Serialize};

use crate::error::{Result, WilksError};

/// Which likelihood a fit or test refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "bt")]
    Bt,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Beta => "beta",
            Model::Bt => "bt",
        })
    }
}

/// Model parameters with an optional pinned reference coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    reference: Option<usize>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(WilksError::Domain(format!("parameter {i} is not finite")));
        }
        Ok(ParamVector { values, reference: None })
    }

    /// Parameters whose `reference` entry is pinned to zero.
    pub fn with_reference(values: Vec<f64>, reference: usize) -> Result<Self> {
        let mut p = ParamVector::new(values)?;
        if reference >= p.values.len() {
            return Err(WilksError::DimensionMismatch {
                expected: reference + 1,
                found: p.values.len(),
            });
        }
        if p.values[reference] != 0.0 {
            return Err(WilksError::Domain(format!(
                "reference parameter {reference} must be 0, got {}",
                p.values[reference]
            )));
        }
        p.reference = Some(reference);
        Ok(p)
    }

    pub fn zeros(n: usize) -> Self {
        ParamVector {
            values: vec![0.0; n],
            reference: None,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn reference(&self) -> Option<usize> {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Shifts every entry so the given coordinate becomes zero and marks it as the reference.
    pub fn repinned(&self, reference: usize) -> Result<Self> {
        let shift = *self.values.get(reference).ok_or(WilksError::DimensionMismatch {
            expected: reference + 1,
            found: self.values.len(),
        })?;
        let mut values: Vec<f64> = self.values.iter().map(|v| v - shift).collect();
        values[reference] = 0.0;
        ParamVector::with_reference(values, reference)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NullKind {
    #[serde(rename = "specified")]
    Specified,
    #[serde(rename = "homogeneous")]
    Homogeneous,
}

/// A restriction of the parameter space: either fixing a set of
/// coordinates to known values or tying a set of coordinates together.
#[derive(Debug, Clone, PartialEq)]
pub struct NullHypothesis {
    kind: NullKind,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl NullHypothesis {
    /// `H0: beta[indices[k]] = values[k]`. Pairs are sorted by index.
    pub fn specified(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(WilksError::InvalidNull(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.is_empty() {
            return Err(WilksError::InvalidNull("specified null needs at least one index".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WilksError::InvalidNull("specified values must be finite".into()));
        }
        let mut pairs: Vec<(usize, f64)> = indices.into_iter().zip(values).collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(WilksError::InvalidNull("duplicate index".into()));
        }
        let (indices, values) = pairs.into_iter().unzip();
        Ok(NullHypothesis {
            kind: NullKind::Specified,
            indices,
            values,
        })
    }

    /// `H0: beta[i] equal for all i in indices`.
    pub fn homogeneous(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.len() < 2 {
            return Err(WilksError::InvalidNull("homogeneous null needs at least two distinct indices".into()));
        }
        Ok(NullHypothesis {
            kind: NullKind::Homogeneous,
            indices,
            values: Vec::new(),
        })
    }

    pub fn kind(&self) -> NullKind {
        self.kind
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Specified values aligned with `indices()`; empty for homogeneous nulls.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Size of the tested set.
    pub fn r(&self) -> usize {
        self.indices.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&i) = self.indices.iter().find(|&&i| i >= n) {
            return Err(WilksError::InvalidNull(format!("index {} out of range for n = {n}", i + 1)));
        }
        Ok(())
    }

    /// Checks for a model identified by pinning `reference`.
    pub fn validate_with_reference(&self, n: usize, reference: usize) -> Result<()> {
        self.validate(n)?;
        if self.kind == NullKind::Specified && self.indices.contains(&reference) {
            return Err(WilksError::InvalidNull(format!(
                "specified null may not include the reference item {}",
                reference + 1
            )));
        }
        Ok(())
    }
}

/// Serialized form uses 1-based indices.
impl Serialize for NullHypothesis {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            kind: NullKind,
            indices: Vec<usize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            values: Option<&'a [f64]>,
        }
        Doc {
            kind: self.kind,
            indices: self.indices.iter().map(|i| i + 1).collect(),
            values: (self.kind == NullKind::Specified).then_some(self.values.as_slice()),
        }
        .serialize(serializer)
    }
}
