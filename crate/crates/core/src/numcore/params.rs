use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::{Gradients, Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Named parameter tensors, ordered by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::Config(format!("missing parameter '{name}'")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Copies every tensor whose name starts with `prefix` into `self`.
    pub fn merge_prefixed(&mut self, other: &ParamSet, prefix: &str) {
        for (k, v) in other.iter().filter(|(k, _)| k.starts_with(prefix)) {
            self.insert(k, v.clone());
        }
    }

    /// Subset of parameters whose names start with `prefix`.
    pub fn with_prefix(&self, prefix: &str) -> ParamSet {
        let mut out = ParamSet::new();
        out.merge_prefixed(self, prefix);
        out
    }

    /// Records every parameter as a graph leaf. Only names accepted by
    /// `trainable` receive gradients; the rest enter as constants.
    pub fn bind(&self, g: &mut Graph, trainable: impl Fn(&str) -> bool) -> BoundParams {
        let vars = self
            .tensors
            .iter()
            .map(|(k, t)| {
                let mut t = t.clone();
                t.set_requires_grad(trainable(k));
                (k.clone(), g.leaf(t))
            })
            .collect();
        BoundParams { vars }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut out = BTreeMap::new();
        for (k, t) in &self.tensors {
            if !t.is_finite() {
                return Err(Error::Numeric(format!("parameter '{k}' is not finite")));
            }
            out.insert(
                k.clone(),
                StoredTensor {
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                },
            );
        }
        Ok(serde_json::to_string(&out)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, StoredTensor> = serde_json::from_str(text)?;
        let mut out = ParamSet::new();
        for (k, s) in raw {
            out.insert(k, Tensor::new(s.shape, s.data)?);
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Graph handles for a bound [`ParamSet`].
#[derive(Clone, Debug)]
pub struct BoundParams {
    vars: BTreeMap<String, Var>,
}

impl BoundParams {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("missing parameter '{name}'")))
    }

    /// Gradients of the parameters that were bound as trainable.
    pub fn gradients(&self, g: &Graph, grads: &Gradients) -> BTreeMap<String, Tensor> {
        self.vars
            .iter()
            .filter(|(_, v)| g.requires_grad(**v))
            .map(|(k, v)| (k.clone(), grads.wrt(*v)))
            .collect()
    }
}
