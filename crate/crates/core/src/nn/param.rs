// Copyright 2026 The rbert Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use ndarray::Array2;
use rand::Rng;

use crate::error::{RbertError, Result};

/// A trainable tensor with its gradient and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
    pub first_moment: Array2<f64>,
    pub second_moment: Array2<f64>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Array2<f64>) -> Self {
        let shape = value.raw_dim();
        Parameter {
            name: name.into(),
            grad: Array2::zeros(shape),
            first_moment: Array2::zeros(shape),
            second_moment: Array2::zeros(shape),
            value,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.dim()
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Handle into a [`ParamStore`]. Layers hold handles, never tensors, so a
/// parameter used in two places is still one piece of storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) -> ParamId {
        let name = name.into();
        assert!(
            self.params.iter().all(|p| p.name != name),
            "parameter {name} registered twice"
        );
        self.params.push(Parameter::new(name, value));
        ParamId(self.params.len() - 1)
    }

    /// Glorot-uniform matrix, `rows×cols`.
    pub fn add_glorot<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> ParamId {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let value = Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-limit..limit));
        self.add(name, value)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Array2::zeros((rows, cols)))
    }

    pub fn add_ones(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Array2::ones((rows, cols)))
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Array2<f64> {
        &self.params[id.0].value
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.params[id.0].grad
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(Parameter::len).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Replaces the value of `name`, checking the shape.
    pub fn set_value(&mut self, name: &str, value: Array2<f64>) -> Result<()> {
        let id = self
            .find(name)
            .ok_or_else(|| RbertError::Checkpoint(format!("unknown parameter {name}")))?;
        let p = &mut self.params[id.0];
        if p.value.dim() != value.dim() {
            return Err(RbertError::Shape(format!(
                "{name}: expected {:?}, found {:?}",
                p.value.dim(),
                value.dim()
            )));
        }
        p.value = value;
        Ok(())
    }

    /// True when every value and gradient is finite.
    pub fn all_finite(&self) -> bool {
        self.params
            .iter()
            .all(|p| p.value.iter().chain(p.grad.iter()).all(|v| v.is_finite()))
    }
}
