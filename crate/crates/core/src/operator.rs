//! Labelled multipartite operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    pub label: String,
    pub dim: usize,
    #[serde(default)]
    pub classical: bool,
}

impl Register {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Register { label: label.into(), dim, classical: false }
    }

    pub fn classical(label: impl Into<String>, dim: usize) -> Self {
        Register { label: label.into(), dim, classical: true }
    }
}

pub fn reg(label: &str, dim: usize) -> Register {
    Register::new(label, dim)
}

/// A matrix on `⊗_k H_{registers[k]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    registers: Vec<Register>,
    matrix: CMat,
}

impl Operator {
    pub fn new(registers: Vec<Register>, matrix: CMat) -> Result<Self> {
        let d: usize = registers.iter().map(|r| r.dim).product();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "registers have total dimension {d} but matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for (i, r) in registers.iter().enumerate() {
            if r.dim == 0 {
                return Err(Error::Dimension(format!("register `{}` has dimension 0", r.label)));
            }
            if registers[..i].iter().any(|s| s.label == r.label) {
                return Err(Error::Dimension(format!("duplicate register `{}`", r.label)));
            }
        }
        Ok(Operator { registers, matrix })
    }

    pub fn identity(registers: Vec<Register>) -> Self {
        let d = registers.iter().map(|r| r.dim).product();
        Operator { registers, matrix: linalg::identity(d) }
    }

    /// A scalar (no registers).
    pub fn scalar(x: f64) -> Self {
        Operator { registers: vec![], matrix: CMat::from_element(1, 1, linalg::c(x)) }
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn has(&self, label: &str) -> bool {
        self.registers.iter().any(|r| r.label == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.label == label)
            .ok_or_else(|| Error::UnknownRegister(label.to_string()))
    }

    pub fn register(&self, label: &str) -> Result<&Register> {
        Ok(&self.registers[self.position(label)?])
    }

    pub fn subdim(&self, labels: &[&str]) -> Result<usize> {
        labels.iter().map(|l| self.register(l).map(|r| r.dim)).product()
    }

    pub fn with_matrix(&self, matrix: CMat) -> Result<Self> {
        Operator::new(self.registers.clone(), matrix)
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.matrix)
    }

    pub fn scale(&self, x: f64) -> Self {
        Operator { registers: self.registers.clone(), matrix: &self.matrix * linalg::c(x) }
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::Precondition("cannot normalize an operator with non-positive trace".into()));
        }
        Ok(self.scale(1.0 / t))
    }

    /// Keep only the listed registers (in this operator's order).
    pub fn ptrace_keep(&self, keep: &[&str]) -> Result<Self> {
        let mut idx = Vec::with_capacity(keep.len());
        for l in keep {
            idx.push(self.position(l)?);
        }
        idx.sort_unstable();
        idx.dedup();
        let m = linalg::partial_trace(&self.matrix, &self.dims(), &idx);
        Operator::new(idx.iter().map(|&i| self.registers[i].clone()).collect(), m)
    }

    pub fn ptrace(&self, out: &[&str]) -> Result<Self> {
        for l in out {
            self.position(l)?;
        }
        let keep: Vec<&str> = self.labels().into_iter().filter(|l| !out.contains(l)).collect();
        self.ptrace_keep(&keep)
    }

    /// Reorder the tensor factors to the given label order (must be a permutation).
    pub fn reorder(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.registers.len() {
            return Err(Error::Dimension(format!("reorder expects {} labels", self.registers.len())));
        }
        let mut perm = Vec::with_capacity(order.len());
        for l in order {
            let p = self.position(l)?;
            if perm.contains(&p) {
                return Err(Error::Dimension(format!("label `{l}` repeated in reorder")));
            }
            perm.push(p);
        }
        let m = linalg::permute_subsystems(&self.matrix, &self.dims(), &perm);
        Operator::new(perm.iter().map(|&i| self.registers[i].clone()).collect(), m)
    }

    pub fn tensor(&self, other: &Operator) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Operator::new(regs, linalg::kron(&self.matrix, &other.matrix))
    }

    /// `id ⊗ self`, arranged in the register order `target`.
    pub fn lift(&self, target: &[Register]) -> Result<Self> {
        for r in &self.registers {
            match target.iter().find(|t| t.label == r.label) {
                Some(t) if t.dim == r.dim => {}
                Some(_) => return Err(Error::Dimension(format!("register `{}` dimension mismatch", r.label))),
                None => return Err(Error::UnknownRegister(r.label.clone())),
            }
        }
        let rest: Vec<Register> =
            target.iter().filter(|t| !self.has(&t.label)).cloned().collect();
        let full = self.tensor(&Operator::identity(rest))?;
        let order: Vec<&str> = target.iter().map(|r| r.label.as_str()).collect();
        full.reorder(&order)
    }

    pub fn lift_like(&self, other: &Operator) -> Result<Self> {
        self.lift(&other.registers)
    }

    pub fn frac_power(&self, p: f64) -> Result<Self> {
        self.with_matrix(linalg::frac_power(&self.matrix, p)?)
    }

    pub fn eigvals(&self) -> Vec<f64> {
        linalg::eigvals(&self.matrix)
    }

    pub fn is_state(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol && linalg::is_psd(&self.matrix, tol)
    }

    fn same_layout(&self, other: &Operator) -> Result<()> {
        if self.registers != other.registers {
            return Err(Error::Dimension(format!(
                "register layouts differ: {:?} vs {:?}",
                self.labels(),
                other.labels()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.same_layout(other)?;
        self.with_matrix(&self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.same_layout(other)?;
        self.with_matrix(&self.matrix - &other.matrix)
    }

    /// Product with layouts aligned: `other` is lifted to this operator's registers if needed.
    pub fn mul(&self, other: &Operator) -> Result<Self> {
        let o = if other.registers == self.registers { other.clone() } else { other.lift_like(self)? };
        self.with_matrix(&self.matrix * &o.matrix)
    }

    pub fn conj_by(&self, left: &Operator) -> Result<Self> {
        let l = if left.registers == self.registers { left.clone() } else { left.lift_like(self)? };
        self.with_matrix(&l.matrix * &self.matrix * &l.matrix)
    }
}
