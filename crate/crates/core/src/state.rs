//! Classical-quantum states, events, channels and statistics-extraction maps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{precondition, Error, Result};
use crate::linalg::{self, c, CMat};
use crate::operator::{Operator, Register};

pub type Symbols = Vec<usize>;

/// A state `Σ_x |x⟩⟨x| ⊗ ρ_x` stored branch-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct CQState {
    classical: Vec<Register>,
    alphabets: Vec<Vec<String>>,
    quantum: Vec<Register>,
    branches: BTreeMap<Symbols, CMat>,
}

fn default_alphabet(d: usize) -> Vec<String> {
    (0..d).map(|i| i.to_string()).collect()
}

impl CQState {
    pub fn new(classical: Vec<Register>, quantum: Vec<Register>, branches: BTreeMap<Symbols, CMat>) -> Result<Self> {
        let alphabets = classical.iter().map(|r| default_alphabet(r.dim)).collect();
        Self::with_alphabets(classical, alphabets, quantum, branches)
    }

    pub fn with_alphabets(
        classical: Vec<Register>,
        alphabets: Vec<Vec<String>>,
        quantum: Vec<Register>,
        branches: BTreeMap<Symbols, CMat>,
    ) -> Result<Self> {
        let classical: Vec<Register> = classical.into_iter().map(|r| Register { classical: true, ..r }).collect();
        let quantum: Vec<Register> = quantum.into_iter().map(|r| Register { classical: false, ..r }).collect();
        let all: Vec<&Register> = classical.iter().chain(quantum.iter()).collect();
        for (i, r) in all.iter().enumerate() {
            if r.dim == 0 {
                return Err(Error::Dimension(format!("register `{}` has dimension 0", r.label)));
            }
            if all[..i].iter().any(|s| s.label == r.label) {
                return Err(Error::Dimension(format!("duplicate register `{}`", r.label)));
            }
        }
        if alphabets.len() != classical.len() || alphabets.iter().zip(&classical).any(|(a, r)| a.len() != r.dim) {
            return Err(Error::Dimension("alphabet sizes must match classical register dimensions".into()));
        }
        let dq: usize = quantum.iter().map(|r| r.dim).product();
        for (x, m) in &branches {
            if x.len() != classical.len() || x.iter().zip(&classical).any(|(s, r)| *s >= r.dim) {
                return Err(Error::Dimension(format!("branch label {x:?} does not fit the classical registers")));
            }
            if m.nrows() != dq || m.ncols() != dq {
                return Err(Error::Dimension(format!("branch {x:?} has the wrong size")));
            }
            let tol = linalg::tolerances();
            if linalg::hermiticity_residual(m) > tol.herm * linalg::max_abs(m).max(1.0) {
                return precondition(format!("branch {x:?} is not Hermitian"));
            }
            if !linalg::is_psd(m, tol.psd) {
                return Err(Error::NotPsd(linalg::eigh(m).min()));
            }
        }
        Ok(CQState { classical, alphabets, quantum, branches })
    }

    /// Branches from a block-diagonal operator; `classical` lists the classical labels.
    pub fn from_operator(op: &Operator, classical: &[&str]) -> Result<Self> {
        let qlabels: Vec<&str> = op.labels().into_iter().filter(|l| !classical.contains(l)).collect();
        let order: Vec<&str> = classical.iter().chain(qlabels.iter()).cloned().collect();
        let r = op.reorder(&order)?;
        let cregs: Vec<Register> = r.registers()[..classical.len()].to_vec();
        let qregs: Vec<Register> = r.registers()[classical.len()..].to_vec();
        let dc: usize = cregs.iter().map(|r| r.dim).product();
        let dq: usize = qregs.iter().map(|r| r.dim).product();
        let m = r.matrix();
        let scale = linalg::max_abs(m).max(1e-300);
        let mut branches = BTreeMap::new();
        for i in 0..dc {
            for j in 0..dc {
                let blk = m.view((i * dq, j * dq), (dq, dq));
                if i != j {
                    if blk.iter().any(|z| z.norm() > 1e-12 * scale) {
                        return precondition("operator is not block diagonal in the classical registers");
                    }
                    continue;
                }
                let b = blk.clone_owned();
                if b.iter().any(|z| z.norm() > 0.0) {
                    branches.insert(unflatten(i, &cregs), b);
                }
            }
        }
        CQState::new(cregs, qregs, branches)
    }

    /// A state with no classical registers.
    pub fn quantum_only(op: &Operator) -> Result<Self> {
        let mut b = BTreeMap::new();
        b.insert(vec![], op.matrix().clone());
        CQState::new(vec![], op.registers().to_vec(), b)
    }

    pub fn classical_registers(&self) -> &[Register] {
        &self.classical
    }

    pub fn alphabets(&self) -> &[Vec<String>] {
        &self.alphabets
    }

    pub fn quantum_registers(&self) -> &[Register] {
        &self.quantum
    }

    pub fn branches(&self) -> &BTreeMap<Symbols, CMat> {
        &self.branches
    }

    pub fn branch(&self, x: &[usize]) -> Option<Operator> {
        self.branches.get(x).map(|m| Operator::new(self.quantum.clone(), m.clone()).expect("validated"))
    }

    pub fn classical_labels(&self) -> Vec<&str> {
        self.classical.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn quantum_labels(&self) -> Vec<&str> {
        self.quantum.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn trace(&self) -> f64 {
        self.branches.values().map(linalg::trace_re).sum()
    }

    pub fn probability(&self, x: &[usize]) -> f64 {
        self.branches.get(x).map_or(0.0, linalg::trace_re)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
    }

    /// Dense block-diagonal operator with the classical registers first.
    pub fn to_operator(&self) -> Operator {
        let regs: Vec<Register> = self.classical.iter().chain(self.quantum.iter()).cloned().collect();
        let dq: usize = self.quantum.iter().map(|r| r.dim).product();
        let dc: usize = self.classical.iter().map(|r| r.dim).product();
        let mut m = CMat::zeros(dc * dq, dc * dq);
        for (x, b) in &self.branches {
            let i = flatten(x, &self.classical);
            m.view_mut((i * dq, i * dq), (dq, dq)).copy_from(b);
        }
        Operator::new(regs, m).expect("validated")
    }

    pub fn scale(&self, w: f64) -> Self {
        let mut s = self.clone();
        for b in s.branches.values_mut() {
            *b *= c(w);
        }
        s
    }

    /// Branch-wise sum of two states with identical layouts.
    pub fn add(&self, other: &CQState) -> Result<Self> {
        if self.classical != other.classical || self.quantum != other.quantum {
            return Err(Error::Dimension("register layouts differ".into()));
        }
        let mut s = self.clone();
        for (x, b) in &other.branches {
            s.branches.entry(x.clone()).and_modify(|m| *m += b).or_insert_with(|| b.clone());
        }
        Ok(s)
    }

    /// Trace out quantum registers.
    pub fn ptrace_quantum(&self, out: &[&str]) -> Result<Self> {
        let mut idx = Vec::new();
        for (i, r) in self.quantum.iter().enumerate() {
            if !out.contains(&r.label.as_str()) {
                idx.push(i);
            }
        }
        for l in out {
            if !self.quantum.iter().any(|r| r.label == *l) {
                return Err(Error::UnknownRegister(l.to_string()));
            }
        }
        let dims: Vec<usize> = self.quantum.iter().map(|r| r.dim).collect();
        let branches = self.branches.iter().map(|(x, b)| (x.clone(), linalg::partial_trace(b, &dims, &idx))).collect();
        Ok(CQState {
            classical: self.classical.clone(),
            alphabets: self.alphabets.clone(),
            quantum: idx.iter().map(|&i| self.quantum[i].clone()).collect(),
            branches,
        })
    }

    /// Sum over the listed classical registers.
    pub fn marginalize_classical(&self, out: &[&str]) -> Result<Self> {
        for l in out {
            if !self.classical.iter().any(|r| r.label == *l) {
                return Err(Error::UnknownRegister(l.to_string()));
            }
        }
        let keep: Vec<usize> = (0..self.classical.len()).filter(|&i| !out.contains(&self.classical[i].label.as_str())).collect();
        let mut branches: BTreeMap<Symbols, CMat> = BTreeMap::new();
        for (x, b) in &self.branches {
            let k: Symbols = keep.iter().map(|&i| x[i]).collect();
            branches.entry(k).and_modify(|m| *m += b).or_insert_with(|| b.clone());
        }
        Ok(CQState {
            classical: keep.iter().map(|&i| self.classical[i].clone()).collect(),
            alphabets: keep.iter().map(|&i| self.alphabets[i].clone()).collect(),
            quantum: self.quantum.clone(),
            branches,
        })
    }

    /// `(ρ_{|Ω}, ρ[Ω])`.
    pub fn condition_on_event(&self, omega: &Event) -> Result<(CQState, f64)> {
        let labels = self.classical_labels();
        let mut kept = BTreeMap::new();
        let mut p = 0.0;
        for (x, b) in &self.branches {
            if omega.contains(&labels, x)? {
                p += linalg::trace_re(b);
                kept.insert(x.clone(), b.clone());
            }
        }
        if !(p > 0.0) {
            return precondition("event has zero probability");
        }
        let s = CQState { classical: self.classical.clone(), alphabets: self.alphabets.clone(), quantum: self.quantum.clone(), branches: kept };
        Ok((s.scale(1.0 / p), p))
    }

    /// `ρ[Ω]`.
    pub fn event_probability(&self, omega: &Event) -> Result<f64> {
        let labels = self.classical_labels();
        let mut p = 0.0;
        for (x, b) in &self.branches {
            if omega.contains(&labels, x)? {
                p += linalg::trace_re(b);
            }
        }
        Ok(p)
    }

    /// Apply a channel to the quantum part of every branch. Classical output registers of
    /// the channel are split off into new branches (the output is pinched on them).
    pub fn apply_channel(&self, ch: &Channel) -> Result<Self> {
        let mut out_branches = BTreeMap::new();
        let mut out_q: Option<Vec<Register>> = None;
        let mut new_c: Vec<Register> = Vec::new();
        for (x, b) in &self.branches {
            let op = Operator::new(self.quantum.clone(), b.clone())?;
            let res = ch.apply(&op)?;
            let cl: Vec<&str> = res.registers().iter().filter(|r| r.classical).map(|r| r.label.as_str()).collect();
            let split = CQState::from_operator(&pinch(&res, &cl)?, &cl)?;
            out_q.get_or_insert_with(|| split.quantum.clone());
            if new_c.is_empty() {
                new_c = split.classical.clone();
            }
            for (y, m) in split.branches {
                let mut key = x.clone();
                key.extend(y);
                out_branches.insert(key, m);
            }
        }
        let quantum = match out_q {
            Some(q) => q,
            None => {
                // No branches: derive the layout from an identity input.
                let res = ch.apply(&Operator::identity(self.quantum.clone()))?;
                new_c = res.registers().iter().filter(|r| r.classical).cloned().collect();
                res.registers().iter().filter(|r| !r.classical).cloned().collect()
            }
        };
        let mut classical = self.classical.clone();
        let mut alphabets = self.alphabets.clone();
        for r in &new_c {
            alphabets.push(default_alphabet(r.dim));
        }
        classical.extend(new_c);
        CQState::with_alphabets(classical, alphabets, quantum, out_branches)
    }
}

fn flatten(x: &[usize], regs: &[Register]) -> usize {
    x.iter().zip(regs).fold(0, |acc, (s, r)| acc * r.dim + s)
}

fn unflatten(mut i: usize, regs: &[Register]) -> Symbols {
    let mut x = vec![0; regs.len()];
    for k in (0..regs.len()).rev() {
        x[k] = i % regs[k].dim;
        i /= regs[k].dim;
    }
    x
}

/// Dephase the listed registers in the computational basis.
pub fn pinch(op: &Operator, labels: &[&str]) -> Result<Operator> {
    let mut m = CMat::zeros(op.dim(), op.dim());
    let dims = op.dims();
    let pos: Vec<usize> = labels.iter().map(|l| op.position(l)).collect::<Result<_>>()?;
    let digits = |mut i: usize| -> Vec<usize> {
        let mut d = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = i % dims[k];
            i /= dims[k];
        }
        d
    };
    for i in 0..op.dim() {
        let di = digits(i);
        for j in 0..op.dim() {
            let dj = digits(j);
            if pos.iter().all(|&p| di[p] == dj[p]) {
                m[(i, j)] = op.matrix()[(i, j)];
            }
        }
    }
    op.with_matrix(m)
}

/// A linear constraint `Σ_x coeffs[x]·freq(x) (≤ | ≥ | =) bound` on the empirical
/// distribution of the event's registers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl FreqConstraint {
    /// `freq(symbol) ≤ bound`.
    pub fn at_most(alphabet: usize, symbol: usize, bound: f64) -> Self {
        let mut coeffs = vec![0.0; alphabet];
        coeffs[symbol] = 1.0;
        FreqConstraint { coeffs, relation: Relation::Le, bound }
    }

    fn holds(&self, freq: &[f64]) -> bool {
        let v: f64 = self.coeffs.iter().zip(freq).map(|(a, b)| a * b).sum();
        // Frequencies are rationals k/n; allow for their rounding.
        let tol = 1e-12;
        match self.relation {
            Relation::Le => v <= self.bound + tol,
            Relation::Ge => v >= self.bound - tol,
            Relation::Eq => (v - self.bound).abs() <= tol,
        }
    }
}

/// Event `Ω` over classical symbol strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Full,
    /// Explicit strings over the listed registers.
    Subset { registers: Vec<String>, members: Vec<Symbols> },
    /// All constraints hold for the frequency distribution of the listed registers,
    /// which must share an alphabet of the given size.
    Frequency { registers: Vec<String>, alphabet: usize, constraints: Vec<FreqConstraint> },
    Complement(Box<Event>),
    All(Vec<Event>),
}

impl Event {
    fn pick(labels: &[&str], regs: &[String], x: &[usize]) -> Result<Symbols> {
        regs.iter()
            .map(|r| labels.iter().position(|l| l == r).map(|i| x[i]).ok_or_else(|| Error::UnknownRegister(r.clone())))
            .collect()
    }

    pub fn contains(&self, labels: &[&str], x: &[usize]) -> Result<bool> {
        Ok(match self {
            Event::Full => true,
            Event::Subset { registers, members } => {
                let s = Self::pick(labels, registers, x)?;
                members.contains(&s)
            }
            Event::Frequency { registers, alphabet, constraints } => {
                let s = Self::pick(labels, registers, x)?;
                let f = frequencies(&s, *alphabet)?;
                constraints.iter().all(|cst| cst.holds(&f))
            }
            Event::Complement(e) => !e.contains(labels, x)?,
            Event::All(es) => {
                for e in es {
                    if !e.contains(labels, x)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    pub fn complement(self) -> Event {
        Event::Complement(Box::new(self))
    }
}

/// Empirical distribution `freq(x₁ⁿ)`.
pub fn frequencies(x: &[usize], alphabet: usize) -> Result<Vec<f64>> {
    let mut f = vec![0.0; alphabet];
    for &s in x {
        if s >= alphabet {
            return precondition(format!("symbol {s} outside alphabet of size {alphabet}"));
        }
        f[s] += 1.0;
    }
    let n = x.len().max(1) as f64;
    Ok(f.into_iter().map(|v| v / n).collect())
}

/// A completely positive trace-non-increasing map, stored as its conditional state
/// `M_{B|A} = (M ⊗ id)(|Θ⟩⟨Θ|)` (layout: outputs ⊗ input copy) together with Kraus operators.
#[derive(Clone, Debug)]
pub struct Channel {
    input: Vec<Register>,
    output: Vec<Register>,
    cond: CMat,
    kraus: Vec<CMat>,
}

impl Channel {
    pub fn from_kraus(input: Vec<Register>, output: Vec<Register>, kraus: Vec<CMat>) -> Result<Self> {
        let din: usize = input.iter().map(|r| r.dim).product();
        let dout: usize = output.iter().map(|r| r.dim).product();
        if kraus.is_empty() {
            return precondition("a channel needs at least one Kraus operator");
        }
        let mut sum = CMat::zeros(din, din);
        let mut cond = CMat::zeros(dout * din, dout * din);
        for k in &kraus {
            if k.nrows() != dout || k.ncols() != din {
                return Err(Error::Dimension(format!("Kraus operator must be {dout}x{din}")));
            }
            sum += k.adjoint() * k;
            let v = choi_vector(k);
            cond += linalg::outer(&v);
        }
        let excess = linalg::eigh(&(sum - linalg::identity(din))).max();
        if excess > 1e-9 {
            return precondition(format!("map is trace increasing (excess {excess:e})"));
        }
        Ok(Channel { input, output, cond: linalg::hermitize(&cond), kraus })
    }

    /// From `M_{B|A}` on `outputs ⊗ input copy`.
    pub fn from_cond_state(input: Vec<Register>, output: Vec<Register>, cond: CMat) -> Result<Self> {
        let din: usize = input.iter().map(|r| r.dim).product();
        let dout: usize = output.iter().map(|r| r.dim).product();
        if cond.nrows() != din * dout {
            return Err(Error::Dimension("conditional state has the wrong size".into()));
        }
        if !linalg::is_psd(&cond, 1e-9) {
            return Err(Error::NotPsd(linalg::eigh(&cond).min()));
        }
        let e = linalg::eigh(&linalg::hermitize(&cond));
        let cut = 1e-13 * e.max().max(1e-300);
        let mut kraus = Vec::new();
        for (i, &l) in e.values.iter().enumerate() {
            if l > cut {
                let v = e.vectors.column(i) * c(l.sqrt());
                kraus.push(kraus_from_choi_vector(&v.into_owned(), dout, din));
            }
        }
        if kraus.is_empty() {
            kraus.push(CMat::zeros(dout, din));
        }
        let ch = Channel::from_kraus(input, output, kraus)?;
        Ok(Channel { cond: linalg::hermitize(&cond), ..ch })
    }

    pub fn identity(regs: Vec<Register>) -> Self {
        let d = regs.iter().map(|r| r.dim).product();
        Channel::from_kraus(regs.clone(), regs, vec![linalg::identity(d)]).expect("identity is a channel")
    }

    pub fn input(&self) -> &[Register] {
        &self.input
    }

    pub fn output(&self) -> &[Register] {
        &self.output
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn cond_state(&self) -> &CMat {
        &self.cond
    }

    /// `tr_B M_{B|A}` — the identity for trace-preserving maps.
    pub fn trace_defect(&self) -> f64 {
        let din: usize = self.input.iter().map(|r| r.dim).product();
        let dout: usize = self.output.iter().map(|r| r.dim).product();
        let t = linalg::partial_trace(&self.cond, &[dout, din], &[1]);
        linalg::max_abs(&(t.transpose() - linalg::identity(din)))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_defect() <= tol
    }

    /// Apply to the input registers of `op`; outputs are appended after the untouched
    /// registers.
    pub fn apply(&self, op: &Operator) -> Result<Operator> {
        for r in &self.input {
            let have = op.register(&r.label)?;
            if have.dim != r.dim {
                return Err(Error::Dimension(format!("register `{}` dimension mismatch", r.label)));
            }
        }
        let rest: Vec<Register> = op.registers().iter().filter(|r| !self.input.iter().any(|i| i.label == r.label)).cloned().collect();
        for o in &self.output {
            if rest.iter().any(|r| r.label == o.label) {
                return Err(Error::Dimension(format!("output register `{}` already present", o.label)));
            }
        }
        let order: Vec<&str> = self.input.iter().chain(rest.iter()).map(|r| r.label.as_str()).collect();
        let m = op.reorder(&order)?.into_matrix();
        let drest: usize = rest.iter().map(|r| r.dim).product();
        let dout: usize = self.output.iter().map(|r| r.dim).product();
        let id = linalg::identity(drest);
        let mut out = CMat::zeros(dout * drest, dout * drest);
        for k in &self.kraus {
            let big = linalg::kron(k, &id);
            out += &big * &m * big.adjoint();
        }
        let regs: Vec<Register> = self.output.iter().chain(rest.iter()).cloned().collect();
        let res = Operator::new(regs, linalg::hermitize(&out))?;
        let final_order: Vec<&str> = rest.iter().chain(self.output.iter()).map(|r| r.label.as_str()).collect();
        res.reorder(&final_order)
    }

    /// Sequential composition `other ∘ self`.
    pub fn then(&self, other: &Channel) -> Result<Channel> {
        if other.input.iter().map(|r| r.dim).product::<usize>() != self.output.iter().map(|r| r.dim).product::<usize>() {
            return Err(Error::Dimension("channels cannot be composed".into()));
        }
        let mut kraus = Vec::new();
        for b in &other.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Channel::from_kraus(self.input.clone(), other.output.clone(), kraus)
    }
}

/// `vec` with layout `out ⊗ in`: `Σ_i K|i⟩ ⊗ |i⟩`.
fn choi_vector(k: &CMat) -> linalg::CVec {
    let (dout, din) = (k.nrows(), k.ncols());
    let mut v = linalg::CVec::zeros(dout * din);
    for o in 0..dout {
        for i in 0..din {
            v[o * din + i] = k[(o, i)];
        }
    }
    v
}

fn kraus_from_choi_vector(v: &linalg::CVec, dout: usize, din: usize) -> CMat {
    CMat::from_fn(dout, din, |o, i| v[o * din + i])
}

/// `𝒯(W) = Σ_{y,z} (Π_y ⊗ Π_z) W (Π_y ⊗ Π_z) ⊗ |t(y,z)⟩⟨t(y,z)|_X`.
pub fn extraction_map(
    a: (&Register, &[CMat]),
    b: (&Register, &[CMat]),
    x: Register,
    t: impl Fn(usize, usize) -> usize,
) -> Result<Channel> {
    check_projectors(a.0, a.1)?;
    check_projectors(b.0, b.1)?;
    let dx = x.dim;
    let mut kraus = Vec::new();
    for (y, py) in a.1.iter().enumerate() {
        for (z, pz) in b.1.iter().enumerate() {
            let sym = t(y, z);
            if sym >= dx {
                return precondition(format!("t({y},{z}) = {sym} is outside the alphabet of `{}`", x.label));
            }
            let ket = linalg::CVec::from_fn(dx, |i, _| if i == sym { c(1.0) } else { c(0.0) });
            let ket = CMat::from_column_slice(dx, 1, ket.as_slice());
            kraus.push(linalg::kron(&linalg::kron(py, pz), &ket));
        }
    }
    let x = Register { classical: true, ..x };
    Channel::from_kraus(vec![a.0.clone(), b.0.clone()], vec![a.0.clone(), b.0.clone(), x], kraus)
}

fn check_projectors(r: &Register, ps: &[CMat]) -> Result<()> {
    let d = r.dim;
    let mut sum = CMat::zeros(d, d);
    for (i, p) in ps.iter().enumerate() {
        if p.nrows() != d || p.ncols() != d {
            return Err(Error::Dimension(format!("projector on `{}` has the wrong size", r.label)));
        }
        if linalg::max_abs(&(p * p - p)) > 1e-9 || linalg::hermiticity_residual(p) > 1e-9 {
            return precondition(format!("element {i} of the family on `{}` is not a projector", r.label));
        }
        for q in &ps[..i] {
            if linalg::max_abs(&(p * q)) > 1e-9 {
                return precondition(format!("projectors on `{}` are not mutually orthogonal", r.label));
            }
        }
        sum += p;
    }
    if linalg::max_abs(&(sum - linalg::identity(d))) > 1e-9 {
        return precondition(format!("projectors on `{}` do not sum to the identity", r.label));
    }
    Ok(())
}

/// Rank-one projectors onto the computational basis.
pub fn computational_projectors(d: usize) -> Vec<CMat> {
    (0..d).map(|i| linalg::basis_projector(d, i)).collect()
}

/// `ρ_B^{−1/2} ρ_AB ρ_B^{−1/2}` (generalized inverse), in the input's register order.
pub fn conditional_operator(rho: &Operator, cond: &[&str]) -> Result<Operator> {
    let rb = rho.ptrace_keep(cond)?;
    let inv = rb.frac_power(-0.5)?;
    rho.conj_by(&inv)
}

/// `I(A:C|B)`; zero exactly for quantum Markov chains `A ↔ B ↔ C`.
pub fn markov_violation(rho: &Operator, a: &[&str], b: &[&str], c_: &[&str]) -> Result<f64> {
    Ok(entropy::conditional_mutual_information(rho, a, c_, b)?.max(0.0))
}

pub const TOL_MARKOV: f64 = 1e-8;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, kron, max_abs, max_entangled_vector, outer};
    use crate::operator::reg;
    use crate::random;

    fn phi() -> Operator {
        let v = max_entangled_vector(2) * c(1.0 / 2f64.sqrt());
        Operator::new(vec![reg("A", 2), reg("B", 2)], outer(&v)).unwrap()
    }

    #[test]
    fn conditional_operator_examples() {
        let r = conditional_operator(&phi(), &["B"]).unwrap();
        assert!(max_abs(&(r.matrix() - phi().matrix() * c(2.0))) < 1e-12);
        let ra = random::density(&mut random::rng(1), 2, 2);
        let sb = diag(&[0.6, 0.4, 0.0]);
        let op = Operator::new(vec![reg("A", 2), reg("B", 3)], kron(&ra, &sb)).unwrap();
        let r = conditional_operator(&op, &["B"]).unwrap();
        assert!(max_abs(&(r.matrix() - kron(&ra, &diag(&[1.0, 1.0, 0.0])))) < 1e-12);
    }

    #[test]
    fn conditional_operator_reconstructs() {
        let m = random::density(&mut random::rng(9), 6, 6);
        let op = Operator::new(vec![reg("A", 2), reg("B", 3)], m).unwrap();
        let r = conditional_operator(&op, &["B"]).unwrap();
        let half = op.ptrace_keep(&["B"]).unwrap().frac_power(0.5).unwrap();
        assert!(max_abs(&(r.conj_by(&half).unwrap().matrix() - op.matrix())) < 1e-9);
    }

    #[test]
    fn cq_roundtrip_and_events() {
        let mut b = BTreeMap::new();
        for x in 0..2 {
            for y in 0..2 {
                b.insert(vec![x, y], CMat::from_element(1, 1, c(0.25)));
            }
        }
        let s = CQState::new(vec![reg("X", 2), reg("Y", 2)], vec![], b).unwrap();
        let (c0, p) = s.condition_on_event(&Event::Subset { registers: vec!["X".into(), "Y".into()], members: vec![vec![0, 0]] }).unwrap();
        assert!((p - 0.25).abs() < 1e-15 && c0.branches().len() == 1);
        let (full, p1) = s.condition_on_event(&Event::Full).unwrap();
        assert_eq!(full, s);
        assert_eq!(p1, 1.0);
        let back = CQState::from_operator(&s.to_operator(), &["X", "Y"]).unwrap();
        assert_eq!(back, s);
        let freq = Event::Frequency {
            registers: vec!["X".into(), "Y".into()],
            alphabet: 2,
            constraints: vec![FreqConstraint::at_most(2, 1, 0.5)],
        };
        let (on, p) = s.condition_on_event(&freq).unwrap();
        let (off, q) = s.condition_on_event(&freq.clone().complement()).unwrap();
        assert!((p - 0.75).abs() < 1e-15 && (q - 0.25).abs() < 1e-15);
        let mixed = on.scale(p).add(&off.scale(q)).unwrap();
        for (x, m) in s.branches() {
            assert!(max_abs(&(mixed.branches()[x].clone() - m)) < 1e-15);
        }
    }

    #[test]
    fn measuring_plus_gives_mixed_cq() {
        let plus = CMat::from_element(2, 2, c(0.5));
        let op = Operator::new(vec![reg("Q", 2)], plus).unwrap();
        let kraus: Vec<CMat> = (0..2)
            .map(|i| {
                let mut k = CMat::zeros(2, 2);
                k[(i, i)] = c(1.0);
                k
            })
            .collect();
        let meas = Channel::from_kraus(vec![reg("Q", 2)], vec![Register::classical("X", 2)], kraus).unwrap();
        let out = CQState::quantum_only(&op).unwrap().apply_channel(&meas).unwrap();
        assert_eq!(out.classical_labels(), vec!["X"]);
        assert!((out.probability(&[0]) - 0.5).abs() < 1e-15 && (out.probability(&[1]) - 0.5).abs() < 1e-15);
        let id = Channel::identity(vec![reg("Q", 2)]);
        assert!(max_abs(&(id.apply(&op).unwrap().matrix() - op.matrix())) < 1e-15);
    }

    #[test]
    fn stinespring_agrees_with_kraus() {
        let mut rng = random::rng(21);
        let v = random::isometry(&mut rng, 2, 6);
        let kraus: Vec<CMat> = (0..3).map(|e| CMat::from_fn(2, 2, |o, i| v[(o * 3 + e, i)])).collect();
        let ch = Channel::from_kraus(vec![reg("A", 2)], vec![reg("B", 2)], kraus).unwrap();
        assert!(ch.is_trace_preserving(1e-10));
        let rho = random::density(&mut rng, 2, 2);
        let out = ch.apply(&Operator::new(vec![reg("A", 2)], rho.clone()).unwrap()).unwrap();
        let dil = &v * &rho * v.adjoint();
        let expect = linalg::partial_trace(&dil, &[2, 3], &[0]);
        assert!(max_abs(&(out.matrix() - expect)) < 1e-12);
        let again = Channel::from_cond_state(vec![reg("A", 2)], vec![reg("B", 2)], ch.cond_state().clone()).unwrap();
        assert!(max_abs(&(again.cond_state() - ch.cond_state())) < 1e-10);
        let out2 = again.apply(&Operator::new(vec![reg("A", 2)], rho).unwrap()).unwrap();
        assert!(max_abs(&(out2.matrix() - out.matrix())) < 1e-10);
    }

    #[test]
    fn parity_extraction_is_idempotent() {
        let p = computational_projectors(2);
        let t = extraction_map((&reg("A", 2), &p), (&reg("B", 2), &p), reg("X", 2), |y, z| y ^ z).unwrap();
        let w = random::density(&mut random::rng(4), 4, 4);
        let op = Operator::new(vec![reg("A", 2), reg("B", 2)], w.clone()).unwrap();
        let out = t.apply(&op).unwrap();
        let ab = out.ptrace(&["X"]).unwrap();
        let pinched = pinch(&op, &["A", "B"]).unwrap();
        assert!(max_abs(&(ab.matrix() - pinched.matrix())) < 1e-12);
        let x = out.ptrace_keep(&["X"]).unwrap();
        let par1 = w[(1, 1)].re + w[(2, 2)].re;
        assert!((x.matrix()[(1, 1)].re - par1).abs() < 1e-12);
        let again = t.apply(&ab).unwrap();
        assert!(max_abs(&(again.matrix() - out.matrix())) < 1e-12);
    }

    #[test]
    fn markov_examples() {
        let m = random::density(&mut random::rng(3), 4, 4);
        let prod = Operator::new(vec![reg("A", 2), reg("B", 2), reg("C", 2)], kron(&m, &diag(&[0.3, 0.7]))).unwrap();
        assert!(markov_violation(&prod, &["A"], &["B"], &["C"]).unwrap() < 1e-12);
        let mut ghz = CMat::zeros(8, 8);
        ghz[(0, 0)] = c(0.5);
        ghz[(7, 7)] = c(0.5);
        let g = Operator::new(vec![reg("A", 2), reg("B", 2), reg("C", 2)], ghz).unwrap();
        assert!(markov_violation(&g, &["A"], &["B"], &["C"]).unwrap() < 1e-12);
        // A = B ⊕ C with B, C uniform: I(A:C|B) = 1.
        let mut xor = CMat::zeros(8, 8);
        for b in 0..2 {
            for cc in 0..2 {
                let a = b ^ cc;
                let i = a * 4 + b * 2 + cc;
                xor[(i, i)] = c(0.25);
            }
        }
        let x = Operator::new(vec![reg("A", 2), reg("B", 2), reg("C", 2)], xor).unwrap();
        assert!((markov_violation(&x, &["A"], &["B"], &["C"]).unwrap() - 1.0).abs() < 1e-12);
    }
}
