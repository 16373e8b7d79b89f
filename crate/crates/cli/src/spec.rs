use std::path::PathBuf;

use perclab_core::EventSpec;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Estimate,
    Scan,
    Pc,
    Event,
    Lambda,
    Lgap,
    CountSeq,
    Verify,
}

impl Kind {
    pub fn accepts(self, param: &str) -> bool {
        self.allowed().contains(&param)
    }

    /// Parameters a spec of this kind may set.
    fn allowed(self) -> &'static [&'static str] {
        match self {
            Kind::Estimate => &[
                "n",
                "d",
                "ell",
                "r",
                "p",
                "padded",
                "trials",
                "seed",
                "confidence",
                "workers",
            ],
            Kind::Scan => &[
                "n",
                "n_list",
                "d",
                "ell",
                "r",
                "p_grid",
                "padded",
                "trials",
                "seed",
                "confidence",
                "workers",
            ],
            Kind::Pc => &[
                "n",
                "d",
                "ell",
                "r",
                "alpha",
                "tol",
                "max_trials",
                "padded",
                "trials",
                "seed",
                "confidence",
                "workers",
            ],
            Kind::Event => &[
                "n",
                "d",
                "ell",
                "r",
                "p",
                "a",
                "b",
                "bvec",
                "event",
                "padded",
                "trials",
                "seed",
                "confidence",
                "workers",
            ],
            Kind::Lambda => &["d", "r", "tol"],
            Kind::Lgap => &["m", "ell", "u"],
            Kind::CountSeq => &["p", "d", "c", "m"],
            Kind::Verify => &["suite", "seed"],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// Every tunable of every experiment kind. Which ones a kind accepts is
/// checked by [`ExperimentSpec::validate`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Trials per estimate; for `pc` the first batch at each midpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padded: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bvec: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<EventSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    #[serde(default, alias = "parameters")]
    pub params: Params,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentSpec {
    pub fn new(kind: Kind, params: Params) -> Self {
        ExperimentSpec {
            kind,
            params,
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec = serde_json::from_str(text)
            .map_err(|e| HarnessError::Validation(format!("bad spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Rejects parameters the kind does not use.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let value =
            serde_json::to_value(&self.params).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        let allowed = self.kind.allowed();
        let stray: Vec<&String> = value
            .as_object()
            .into_iter()
            .flat_map(|m| m.keys())
            .filter(|k| !allowed.contains(&k.as_str()))
            .collect();
        if !stray.is_empty() {
            return Err(HarnessError::Validation(format!(
                "parameters {stray:?} do not apply to kind {:?}",
                self.kind
            )));
        }
        Ok(())
    }
}

pub(crate) fn require<T: Clone>(value: &Option<T>, name: &str) -> Result<T, HarnessError> {
    value
        .clone()
        .ok_or_else(|| HarnessError::Validation(format!("missing parameter `{name}`")))
}
