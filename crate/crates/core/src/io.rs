//! JSON file formats for states, EAT configurations and process specifications.
//!
//! Numbers are written in shortest round-trip form and parsed with exact rounding,
//! so `save → load` reproduces every matrix entry bit for bit.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::operator::{Operator, Register};

/// `{"registers": [...], "real": [[...]], "imag": [[...]]}`; `imag` may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub registers: Vec<Register>,
    pub real: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<Vec<f64>>>,
}

impl StateFile {
    pub fn from_operator(op: &Operator) -> Self {
        let m = op.matrix();
        let d = m.nrows();
        let real = (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect();
        let imag: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect();
        let has_imag = imag.iter().flatten().any(|&x| x != 0.0 || x.is_sign_negative());
        StateFile { registers: op.registers().to_vec(), real, imag: has_imag.then_some(imag) }
    }

    pub fn to_operator(&self) -> Result<Operator> {
        let d = self.real.len();
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !rows_ok(&self.real) || self.imag.as_ref().is_some_and(|im| !rows_ok(im)) {
            return Err(Error::Parse("matrix rows must form a square array".into()));
        }
        let m = CMat::from_fn(d, d, |i, j| {
            let im = self.imag.as_ref().map_or(0.0, |x| x[i][j]);
            num_complex::Complex64::new(self.real[i][j], im)
        });
        Operator::new(self.registers.clone(), m)
    }
}

pub fn state_to_json(op: &Operator) -> String {
    serde_json::to_string_pretty(&StateFile::from_operator(op)).expect("state serializes")
}

pub fn state_from_json(text: &str) -> Result<Operator> {
    serde_json::from_str::<StateFile>(text)?.to_operator()
}

pub fn load_state(path: impl AsRef<Path>) -> Result<Operator> {
    state_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_state(path: impl AsRef<Path>, op: &Operator) -> Result<()> {
    std::fs::write(path, state_to_json(op))?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
