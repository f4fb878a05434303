//! Named parameter storage shared by all layers.
//!
//! Every learnable (or tracked) array lives in a [`ParamStore`] under a
//! stable dotted name such as `backbone.stem1.weight`. Layers hold only their
//! names and shapes; the optimizer and checkpoint code iterate the store in
//! insertion order, which keeps updates and serialization deterministic.

use crate::error::{invalid, Result};
use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How a parameter array is filled at registration time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Zeros,
    Ones,
    Constant(f64),
    /// Uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    FanInUniform { fan_in: usize },
}

/// Declaration of one parameter array.
#[derive(Clone, Debug)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
    /// Running statistics and similar tracked state set this to false so the
    /// optimizer skips them.
    pub trainable: bool,
}

impl ParamSpec {
    pub fn trainable(name: impl Into<String>, shape: Vec<usize>, init: Init) -> Self {
        Self {
            name: name.into(),
            shape,
            init,
            trainable: true,
        }
    }

    pub fn tracked(name: impl Into<String>, shape: Vec<usize>, init: Init) -> Self {
        Self {
            name: name.into(),
            shape,
            init,
            trainable: false,
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Param {
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    #[serde(skip)]
    pub grad: Vec<f64>,
    pub trainable: bool,
}

/// Insertion-ordered map of named parameters with paired gradient buffers.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    entries: IndexMap<String, Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers and initializes one parameter. Registering the same name
    /// twice is a programming error.
    pub fn register(&mut self, spec: &ParamSpec, rng: &mut impl Rng) {
        assert!(
            !self.entries.contains_key(&spec.name),
            "duplicate parameter name {}",
            spec.name
        );
        let n = spec.len();
        let value = match spec.init {
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
            Init::Constant(c) => vec![c; n],
            Init::FanInUniform { fan_in } => {
                let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
                (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
            }
        };
        self.entries.insert(
            spec.name.clone(),
            Param {
                shape: spec.shape.clone(),
                value,
                grad: vec![0.0; n],
                trainable: spec.trainable,
            },
        );
    }

    pub fn register_all(&mut self, specs: &[ParamSpec], rng: &mut impl Rng) {
        for s in specs {
            self.register(s, rng);
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn get(&self, name: &str) -> &Param {
        self.entries
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Param {
        self.entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn value(&self, name: &str) -> &[f64] {
        &self.get(name).value
    }

    pub fn value_mut(&mut self, name: &str) -> &mut [f64] {
        &mut self.get_mut(name).value
    }

    /// Accumulates `g` into the gradient buffer of `name`.
    pub fn add_grad(&mut self, name: &str, g: &[f64]) {
        let p = self.get_mut(name);
        assert_eq!(p.grad.len(), g.len(), "gradient length mismatch for {name}");
        for (a, b) in p.grad.iter_mut().zip(g.iter()) {
            *a += b;
        }
    }

    pub fn zero_grads(&mut self) {
        for p in self.entries.values_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Scales every gradient, e.g. to average over a batch.
    pub fn scale_grads(&mut self, s: f64) {
        for p in self.entries.values_mut() {
            for g in p.grad.iter_mut() {
                *g *= s;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Param)> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Param)> {
        self.entries.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    /// Total number of scalar values, trainable or not.
    pub fn param_count(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }

    pub fn trainable_count(&self) -> usize {
        self.entries
            .values()
            .filter(|p| p.trainable)
            .map(|p| p.value.len())
            .sum()
    }

    /// Replaces values from another store; shapes and names must agree.
    pub fn load_values(&mut self, source: &IndexMap<String, Param>) -> Result<()> {
        if source.len() != self.entries.len() {
            return Err(invalid(format!(
                "parameter count mismatch: store has {}, source has {}",
                self.entries.len(),
                source.len()
            )));
        }
        for (name, p) in self.entries.iter_mut() {
            let s = source
                .get(name)
                .ok_or_else(|| invalid(format!("source is missing parameter {name}")))?;
            if s.shape != p.shape {
                return Err(invalid(format!(
                    "shape mismatch for {name}: {:?} vs {:?}",
                    s.shape, p.shape
                )));
            }
            p.value = s.value.clone();
        }
        Ok(())
    }

    pub fn entries(&self) -> &IndexMap<String, Param> {
        &self.entries
    }
}

/// Total scalar count described by a spec list, without allocating anything.
pub fn spec_param_count(specs: &[ParamSpec]) -> usize {
    specs.iter().map(|s| s.len()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn register_and_grad_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = ParamStore::new();
        ps.register(
            &ParamSpec::trainable("w", vec![2, 3], Init::FanInUniform { fan_in: 3 }),
            &mut rng,
        );
        ps.register(&ParamSpec::tracked("rm", vec![3], Init::Zeros), &mut rng);
        assert_eq!(ps.param_count(), 9);
        assert_eq!(ps.trainable_count(), 6);
        ps.add_grad("w", &[1.0; 6]);
        ps.add_grad("w", &[0.5; 6]);
        assert_eq!(ps.get("w").grad[0], 1.5);
        ps.zero_grads();
        assert_eq!(ps.get("w").grad[0], 0.0);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let specs = vec![ParamSpec::trainable(
            "w",
            vec![16],
            Init::FanInUniform { fan_in: 4 },
        )];
        let mut a = ParamStore::new();
        let mut b = ParamStore::new();
        a.register_all(&specs, &mut ChaCha8Rng::seed_from_u64(7));
        b.register_all(&specs, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a.value("w"), b.value("w"));
    }
}
