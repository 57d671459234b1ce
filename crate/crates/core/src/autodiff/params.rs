use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AutodiffError, Result, Tensor};

/// Running statistics of one batch-norm layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnState {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BnState {
    pub fn new(width: usize) -> Self {
        BnState {
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, ..Default::default() }
    }
}

/// Adam moment estimates and the shared step counter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamState {
    pub m: BTreeMap<String, Tensor>,
    pub step: u64,
    pub v: BTreeMap<String, Tensor>,
}

/// Named trainable tensors with their gradients, optimizer state and any
/// batch-norm running statistics. Iteration is lexicographic by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    params: BTreeMap<String, Tensor>,
    grads: BTreeMap<String, Tensor>,
    adam: AdamState,
    bn: BTreeMap<String, BnState>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(AutodiffError::DuplicateParam(name));
        }
        self.params.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.params
            .get(name)
            .ok_or_else(|| AutodiffError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.params
            .get_mut(name)
            .ok_or_else(|| AutodiffError::UnknownParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    pub fn insert_bn(&mut self, name: impl Into<String>, state: BnState) {
        self.bn.insert(name.into(), state);
    }

    pub fn bn(&self, name: &str) -> Result<&BnState> {
        self.bn
            .get(name)
            .ok_or_else(|| AutodiffError::UnknownParam(name.to_string()))
    }

    pub fn bn_mut(&mut self, name: &str) -> Result<&mut BnState> {
        self.bn
            .get_mut(name)
            .ok_or_else(|| AutodiffError::UnknownParam(name.to_string()))
    }

    pub fn bn_states(&self) -> &BTreeMap<String, BnState> {
        &self.bn
    }

    pub fn set_grads(&mut self, grads: BTreeMap<String, Tensor>) -> Result<()> {
        for (name, g) in &grads {
            let p = self.get(name)?;
            if p.shape() != g.shape() {
                return Err(AutodiffError::shape("set_grads", p, g));
            }
        }
        self.grads = grads;
        Ok(())
    }

    pub fn grad(&self, name: &str) -> Option<&Tensor> {
        self.grads.get(name)
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    /// One bias-corrected Adam update of every parameter, in name order.
    pub fn adam_step(&mut self, cfg: &AdamConfig) -> Result<()> {
        if let Some(name) = self.params.keys().find(|n| !self.grads.contains_key(*n)) {
            return Err(AutodiffError::MissingGradient(name.clone()));
        }
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (name, p) in self.params.iter_mut() {
            let g = &self.grads[name];
            let m = self
                .adam
                .m
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(p.rows(), p.cols()));
            let v = self
                .adam
                .v
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(p.rows(), p.cols()));
            for (((w, &gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
                *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }

    /// Serializable snapshot of parameters, optimizer and batch-norm state.
    pub fn to_parts(&self) -> (BTreeMap<String, Tensor>, AdamState, BTreeMap<String, BnState>) {
        (self.params.clone(), self.adam.clone(), self.bn.clone())
    }

    pub fn from_parts(
        params: BTreeMap<String, Tensor>,
        adam: AdamState,
        bn: BTreeMap<String, BnState>,
    ) -> Result<Self> {
        for (name, m) in adam.m.iter().chain(&adam.v) {
            let p = params
                .get(name)
                .ok_or_else(|| AutodiffError::UnknownParam(name.clone()))?;
            if p.shape() != m.shape() {
                return Err(AutodiffError::shape("adam moments", p, m));
            }
        }
        Ok(ParamStore {
            params,
            grads: BTreeMap::new(),
            adam,
            bn,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(value: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("w", Tensor::scalar(value)).unwrap();
        s
    }

    fn grad(g: f64) -> BTreeMap<String, Tensor> {
        BTreeMap::from([("w".to_string(), Tensor::scalar(g))])
    }

    #[test]
    fn first_step_hand_value() {
        let mut s = one(0.0);
        s.set_grads(grad(1.0)).unwrap();
        s.adam_step(&AdamConfig::with_lr(0.1)).unwrap();
        let w = s.get("w").unwrap().get(0, 0);
        let want = -0.1 / (1.0 + 1e-8);
        assert!((w - want).abs() < 1e-15, "{w}");
        assert!((w + 0.09999999).abs() < 1e-8);
        assert_eq!(s.adam_state().step, 1);
    }

    #[test]
    fn zero_gradient_leaves_weight_and_decays_moments() {
        let mut s = one(0.5);
        s.set_grads(grad(2.0)).unwrap();
        s.adam_step(&AdamConfig::default()).unwrap();
        let w1 = s.get("w").unwrap().get(0, 0);
        let (m1, v1) = (s.adam.m["w"].get(0, 0), s.adam.v["w"].get(0, 0));
        s.set_grads(grad(0.0)).unwrap();
        s.adam_step(&AdamConfig::default()).unwrap();
        assert!((s.adam.m["w"].get(0, 0) - 0.9 * m1).abs() < 1e-15);
        assert!((s.adam.v["w"].get(0, 0) - 0.999 * v1).abs() < 1e-15);
        // Nonzero momentum still moves the weight; a fresh store does not.
        assert_ne!(s.get("w").unwrap().get(0, 0), w1);
        let mut fresh = one(0.5);
        fresh.set_grads(grad(0.0)).unwrap();
        fresh.adam_step(&AdamConfig::default()).unwrap();
        assert_eq!(fresh.get("w").unwrap().get(0, 0), 0.5);
    }

    #[test]
    fn identical_stores_stay_identical() {
        let (mut a, mut b) = (one(0.3), one(0.3));
        for g in [0.1, -2.0, 5.0] {
            a.set_grads(grad(g)).unwrap();
            b.set_grads(grad(g)).unwrap();
            a.adam_step(&AdamConfig::default()).unwrap();
            b.adam_step(&AdamConfig::default()).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn missing_gradient() {
        let mut s = one(0.0);
        assert!(matches!(
            s.adam_step(&AdamConfig::default()),
            Err(AutodiffError::MissingGradient(n)) if n == "w"
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut s = one(0.0);
        assert!(s.insert("w", Tensor::scalar(1.0)).is_err());
    }
}
