//! Binary state vectors and JSON model checkpoints.
//!
//! A state vector file is `n_s: u32`, `n_t: u32` (little endian) followed by
//! `2^(n_s+n_t)` pairs of little-endian `f64` `(re, im)` in basis order.

use std::io::{Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::basis::Layout;
use crate::error::{Error, Result};
use crate::models::{ModelSpec, NqsModel, Wavefunction};
use crate::oracle::StateVector;
use crate::scalar::Real;

pub fn write_state_vector<T: Real>(mut w: impl Write, state: &StateVector<T>) -> Result<()> {
    let layout = state.layout();
    w.write_all(&(layout.n_s as u32).to_le_bytes())?;
    w.write_all(&(layout.n_t as u32).to_le_bytes())?;
    for a in state.amplitudes() {
        w.write_all(&a.re.as_f64().to_le_bytes())?;
        w.write_all(&a.im.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_state_vector<T: Real>(mut r: impl Read) -> Result<StateVector<T>> {
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let n_s = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let n_t = u32::from_le_bytes(word) as usize;
    let layout = Layout::new(n_s, n_t)?;
    if layout.n_spins() > 40 {
        return Err(Error::Format(format!("state vector over {} spins is too large", layout.n_spins())));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != layout.dim() * 16 {
        return Err(Error::Format(format!(
            "expected {} amplitude bytes, found {}",
            layout.dim() * 16,
            bytes.len()
        )));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let amps = bytes.chunks_exact(16).map(|c| Complex::new(T::lit(f(&c[..8])), T::lit(f(&c[8..])))).collect();
    StateVector::new(layout, amps)
}

/// Architecture, initialization seed and parameter view of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub seed: u64,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model<T: Real>(model: &NqsModel<T>, seed: u64) -> Self {
        Self { spec: model.spec(), seed, params: model.parameters().iter().map(|x| x.as_f64()).collect() }
    }

    pub fn to_model<T: Real>(&self) -> Result<NqsModel<T>> {
        let mut model = NqsModel::zeros(&self.spec)?;
        if self.params.len() != model.n_params() {
            return Err(Error::Format(format!(
                "checkpoint has {} parameters, architecture needs {}",
                self.params.len(),
                model.n_params()
            )));
        }
        if self.params.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("checkpoint has non-finite parameters".into()));
        }
        let params: Vec<T> = self.params.iter().map(|&x| T::lit(x)).collect();
        model.set_parameters(&params)?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
