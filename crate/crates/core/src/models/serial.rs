use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BoostVariant, FlatTree, GradientBoostedEnsemble, HyperParams, LinearModel, ModelInner, ModelKind,
    RandomForest, RegressionTree, TrainedModel,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`TrainedModel`]. Trees are stored as flat node arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct ModelDocument<T> {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub params: HyperParams,
    pub seed: u64,
    pub feature_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearModel<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_prediction: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<BoostVariant>,
    #[serde(default)]
    pub trees: Vec<FlatTree<T>>,
}

impl<T: Scalar> From<&TrainedModel<T>> for ModelDocument<T> {
    fn from(m: &TrainedModel<T>) -> Self {
        let mut doc = ModelDocument {
            format_version: FORMAT_VERSION,
            model_kind: m.kind,
            params: m.params,
            seed: m.seed,
            feature_names: m.feature_names.clone(),
            linear: None,
            initial_prediction: None,
            learning_rate: None,
            variant: None,
            trees: m.trees().iter().map(FlatTree::from).collect(),
        };
        match &m.inner {
            ModelInner::Linear(l) => doc.linear = Some(l.clone()),
            ModelInner::Boosted(b) => {
                doc.initial_prediction = Some(b.initial_prediction());
                doc.learning_rate = Some(b.learning_rate());
                doc.variant = Some(b.variant());
            }
            ModelInner::Tree(_) | ModelInner::Forest(_) => {}
        }
        doc
    }
}

impl<T: Scalar> TryFrom<ModelDocument<T>> for TrainedModel<T> {
    type Error = Error;

    fn try_from(doc: ModelDocument<T>) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        let p = doc.feature_names.len();
        let trees = doc
            .trees
            .into_iter()
            .map(RegressionTree::try_from)
            .collect::<Result<Vec<_>>>()?;
        if trees.iter().any(|t| t.n_features() != p) {
            return Err(Error::invalid("tree feature count differs from feature_names"));
        }
        let missing = |what: &str| Error::invalid(format!("model document lacks {what}"));
        let inner = match doc.model_kind {
            ModelKind::Lr => {
                let l = doc.linear.ok_or_else(|| missing("linear"))?;
                if l.coefficients.len() != p {
                    return Err(Error::invalid("coefficient count differs from feature_names"));
                }
                ModelInner::Linear(l)
            }
            ModelKind::Tree => {
                let mut trees = trees;
                if trees.len() != 1 {
                    return Err(Error::invalid("tree model must hold exactly one tree"));
                }
                ModelInner::Tree(trees.pop().unwrap())
            }
            ModelKind::Rf => ModelInner::Forest(RandomForest::from_trees(trees, doc.params, doc.seed)?),
            ModelKind::Gb | ModelKind::Xgb => ModelInner::Boosted(GradientBoostedEnsemble::from_parts(
                doc.initial_prediction.ok_or_else(|| missing("initial_prediction"))?,
                trees,
                doc.learning_rate.ok_or_else(|| missing("learning_rate"))?,
                doc.variant.ok_or_else(|| missing("variant"))?,
                p,
            )?),
        };
        Ok(TrainedModel {
            kind: doc.model_kind,
            params: doc.params,
            seed: doc.seed,
            feature_names: doc.feature_names,
            inner,
        })
    }
}

impl<T: Scalar> TrainedModel<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument<T> = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<TrainedModel<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainedModel::from_json(&text)
}
