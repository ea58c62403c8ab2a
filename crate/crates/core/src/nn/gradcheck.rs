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

//! Central finite-difference checks against the analytic gradients stored in
//! a [`ParamStore`].

use super::param::ParamStore;

/// Gradients smaller than this in magnitude are compared in absolute terms.
/// Parameters such as attention key biases have an exact gradient of zero,
/// where a finite difference only measures rounding noise.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub max_relative_error: f64,
    pub max_abs_gradient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_relative_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&TensorCheck> {
        self.tensors
            .iter()
            .max_by(|a, b| a.max_relative_error.total_cmp(&b.max_relative_error))
    }
}

/// Compares `store`'s accumulated gradients with `(loss(w+h) − loss(w−h)) / 2h`
/// for every scalar of every parameter. `loss` must only read the store.
pub fn check_gradients(store: &mut ParamStore, step: f64, mut loss: impl FnMut(&ParamStore) -> f64) -> GradCheckReport {
    let ids: Vec<_> = store.ids().collect();
    let mut tensors = Vec::with_capacity(ids.len());
    for id in ids {
        let mut worst: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for idx in 0..store.get(id).len() {
            let original = store.get(id).value.as_slice().expect("contiguous")[idx];
            store.get_mut(id).value.as_slice_mut().expect("contiguous")[idx] = original + step;
            let plus = loss(store);
            store.get_mut(id).value.as_slice_mut().expect("contiguous")[idx] = original - step;
            let minus = loss(store);
            store.get_mut(id).value.as_slice_mut().expect("contiguous")[idx] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let analytic = store.get(id).grad.as_slice().expect("contiguous")[idx];
            worst = worst.max(relative_error(analytic, numeric));
            max_abs = max_abs.max(analytic.abs());
        }
        tensors.push(TensorCheck {
            name: store.get(id).name.clone(),
            max_relative_error: worst,
            max_abs_gradient: max_abs,
        });
    }
    GradCheckReport { tensors }
}
