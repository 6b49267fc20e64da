//! Sequential processes `ρ = (M_n ∘ … ∘ M_1 ⊗ id_E)(ρ⁰)`: running them on
//! classical-quantum states, checking the Markov conditions, comparing exact entropies
//! with the accumulation bound, and the counterexample showing that the Markov
//! conditions cannot be dropped.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eat::{self, EATParams, EatBound, TradeoffKind, TradeoffSpec};
use crate::entropy::{self, EntropyResult, Method};
use crate::error::{precondition, Error, Result};
use crate::io::StateFile;
use crate::linalg::{self, c, CMat};
use crate::operator::{Operator, Register};
use crate::random;
use crate::sdp::{self, SdpBlock};
use crate::smooth::{self, ClassicalBlock};
use crate::state::{CQState, Channel, Event, Symbols, TOL_MARKOV};

/// Cap on the quantum dimension of the working state.
pub const MAX_PROCESS_DIM: usize = 64;
pub const MAX_R_DIM: usize = 4;
pub const MAX_E_DIM: usize = 4;
/// Cap on the number of classical branches of the working state.
pub const MAX_BRANCHES: usize = 1 << 14;

type StatFn = Arc<dyn Fn(&[usize]) -> usize + Send + Sync>;

/// Statistics register `X_i = t(a_i, b_i)` computed from the classical symbols of the
/// step's `A` and `B` registers (in that order).
#[derive(Clone)]
pub struct Statistic {
    pub label: String,
    pub alphabet: usize,
    pub t: StatFn,
}

impl std::fmt::Debug for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Statistic({}, {})", self.label, self.alphabet)
    }
}

#[derive(Clone, Debug)]
pub struct Step {
    pub channel: Channel,
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub x: Option<Statistic>,
}

#[derive(Clone, Debug)]
pub struct Process {
    pub steps: Vec<Step>,
    /// State on `R₀ ⊗ E`.
    pub initial: CQState,
    pub e: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ProcessOutput {
    pub state: CQState,
    pub a: Vec<Vec<String>>,
    pub b: Vec<Vec<String>>,
    pub x: Vec<String>,
    pub e: Vec<String>,
    /// Alphabet size of the statistics registers (1 when there are none).
    pub x_alphabet: usize,
    /// `max_i dim A_i`.
    pub d_a: usize,
}

impl Process {
    pub fn n(&self) -> usize {
        self.steps.len()
    }
}

fn trivial_state() -> CQState {
    let mut b = BTreeMap::new();
    b.insert(vec![], CMat::identity(1, 1));
    CQState::new(vec![], vec![], b).expect("trivial state")
}

fn dim_of(regs: &[Register]) -> usize {
    regs.iter().map(|r| r.dim).product()
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(|s| s.as_str()).collect()
}

fn add_statistic(state: &CQState, step: &Step, x: &Statistic) -> Result<CQState> {
    let labels = state.classical_labels();
    let pos = |l: &String| {
        labels.iter().position(|m| m == l).ok_or_else(|| Error::Precondition(format!("statistics need classical `{l}`")))
    };
    let idx: Vec<usize> = step.a.iter().chain(step.b.iter()).map(pos).collect::<Result<_>>()?;
    let mut branches = BTreeMap::new();
    for (key, m) in state.branches() {
        let sym: Vec<usize> = idx.iter().map(|&i| key[i]).collect();
        let v = (x.t)(&sym);
        if v >= x.alphabet {
            return precondition(format!("statistic value {v} outside alphabet {}", x.alphabet));
        }
        let mut k = key.clone();
        k.push(v);
        branches.insert(k, m.clone());
    }
    let mut classical = state.classical_registers().to_vec();
    let mut alphabets = state.alphabets().to_vec();
    classical.push(Register::classical(x.label.clone(), x.alphabet));
    alphabets.push((0..x.alphabet).map(|i| i.to_string()).collect());
    CQState::with_alphabets(classical, alphabets, state.quantum_registers().to_vec(), branches)
}

/// Apply the steps in order and trace out the final memory register.
pub fn run_process(p: &Process) -> Result<ProcessOutput> {
    let mut state = p.initial.clone();
    let mut d_a = 1;
    for step in &p.steps {
        let rest: usize = state
            .quantum_registers()
            .iter()
            .filter(|r| !step.channel.input().iter().any(|i| i.label == r.label))
            .map(|r| r.dim)
            .product();
        let out_q: usize = step.channel.output().iter().filter(|r| !r.classical).map(|r| r.dim).product();
        if rest * out_q > MAX_PROCESS_DIM {
            return precondition(format!("quantum dimension {} exceeds the cap {MAX_PROCESS_DIM}", rest * out_q));
        }
        let out_c: usize = step.channel.output().iter().filter(|r| r.classical).map(|r| r.dim).product();
        if state.branches().len().saturating_mul(out_c) > MAX_BRANCHES {
            return precondition(format!("more than {MAX_BRANCHES} classical branches"));
        }
        state = state.apply_channel(&step.channel)?;
        if let Some(x) = &step.x {
            state = add_statistic(&state, step, x)?;
        }
        let da: usize = step
            .a
            .iter()
            .map(|l| step.channel.output().iter().find(|r| &r.label == l).map_or(1, |r| r.dim))
            .product();
        d_a = d_a.max(da);
    }
    let keep: Vec<&String> = p.steps.iter().flat_map(|s| s.a.iter().chain(s.b.iter())).chain(p.e.iter()).collect();
    let drop: Vec<String> =
        state.quantum_registers().iter().filter(|r| !keep.contains(&&r.label)).map(|r| r.label.clone()).collect();
    let state = state.ptrace_quantum(&strs(&drop))?;
    let xs: Vec<String> = p.steps.iter().filter_map(|s| s.x.as_ref().map(|x| x.label.clone())).collect();
    let x_alphabet = p.steps.iter().find_map(|s| s.x.as_ref().map(|x| x.alphabet)).unwrap_or(1);
    Ok(ProcessOutput {
        state,
        a: p.steps.iter().map(|s| s.a.clone()).collect(),
        b: p.steps.iter().map(|s| s.b.clone()).collect(),
        x: xs,
        e: p.e.clone(),
        x_alphabet,
        d_a,
    })
}

// ---------------------------------------------------------------------------
// Entropies of classical-quantum states

fn reduce(state: &CQState, keep: &[&str]) -> Result<CQState> {
    let outc: Vec<&str> = state.classical_labels().into_iter().filter(|l| !keep.contains(l)).collect();
    let outq: Vec<&str> = state.quantum_labels().into_iter().filter(|l| !keep.contains(l)).collect();
    state.marginalize_classical(&outc)?.ptrace_quantum(&outq)
}

/// von Neumann entropy of the marginal on `keep`: `−Σ_x Σ_k λ_{x,k} log λ_{x,k}`.
pub fn cq_entropy(state: &CQState, keep: &[&str]) -> Result<f64> {
    let r = reduce(state, keep)?;
    Ok(r.branches().values().map(|b| -linalg::eigvals(b).iter().map(|&l| entropy::xlog2x(l)).sum::<f64>()).sum())
}

pub fn cq_conditional_entropy(state: &CQState, a: &[&str], cond: &[&str]) -> Result<f64> {
    let all: Vec<&str> = a.iter().chain(cond.iter()).cloned().collect();
    Ok(cq_entropy(state, &all)? - cq_entropy(state, cond)?)
}

fn join<'a>(xs: &[&[&'a str]]) -> Vec<&'a str> {
    xs.iter().flat_map(|v| v.iter().cloned()).collect()
}

/// `I(A:C|B)`.
pub fn cq_cmi(state: &CQState, a: &[&str], c_: &[&str], b: &[&str]) -> Result<f64> {
    Ok(cq_entropy(state, &join(&[a, b]))? + cq_entropy(state, &join(&[c_, b]))?
        - cq_entropy(state, b)?
        - cq_entropy(state, &join(&[a, b, c_]))?)
}

/// Exact `H_min(A|cond)`: one guessing SDP per value of the classical part of the
/// conditioning system, with one block per classical value of `A`.
pub fn cq_h_min(state: &CQState, a: &[&str], cond: &[&str]) -> Result<EntropyResult> {
    let keep: Vec<&str> = a.iter().chain(cond.iter()).cloned().collect();
    let r = reduce(state, &keep)?;
    let cl = r.classical_labels();
    let a_c: Vec<usize> = (0..cl.len()).filter(|&i| a.contains(&cl[i])).collect();
    let b_c: Vec<usize> = (0..cl.len()).filter(|&i| !a.contains(&cl[i])).collect();
    let ql = r.quantum_labels();
    let order: Vec<&str> =
        ql.iter().filter(|l| a.contains(l)).chain(ql.iter().filter(|l| !a.contains(l))).cloned().collect();
    let da: usize = r.quantum_registers().iter().filter(|q| a.contains(&q.label.as_str())).map(|q| q.dim).product();
    let db: usize = r.quantum_registers().iter().filter(|q| !a.contains(&q.label.as_str())).map(|q| q.dim).product();
    let mut groups: BTreeMap<Symbols, Vec<CMat>> = BTreeMap::new();
    for (x, m) in r.branches() {
        let key: Symbols = b_c.iter().map(|&i| x[i]).collect();
        let _ = &a_c;
        let op = Operator::new(r.quantum_registers().to_vec(), m.clone())?.reorder(&order)?;
        groups.entry(key).or_default().push(op.into_matrix());
    }
    let (mut primal, mut dual) = (0.0, 0.0);
    let mut exact = true;
    for blocks in groups.values() {
        if db == 1 {
            let g = blocks.iter().map(|b| linalg::eigh(b).max()).fold(0.0, f64::max);
            primal += g;
            dual += g;
        } else {
            let sb: Vec<SdpBlock> = blocks.iter().map(|b| SdpBlock { rho: b.clone(), da }).collect();
            let s = sdp::solve_guessing(&sb, db, 1e-10)?;
            primal += s.primal;
            dual += s.dual;
            exact = false;
        }
    }
    let lower = -primal.log2();
    let upper = -dual.max(1e-300).log2();
    Ok(if exact {
        EntropyResult::exact(lower, Method::Eigensolve)
    } else {
        EntropyResult::interval(-(0.5 * (primal + dual)).log2(), Method::Optimized, lower, upper)
    })
}

// ---------------------------------------------------------------------------
// Markov conditions and soundness

/// `I(A₁^{i−1} : B_i | B₁^{i−1} E)` for `i = 1..n` (the first entry is zero).
pub fn check_markov_chain_conditions(out: &ProcessOutput) -> Result<Vec<f64>> {
    let n = out.a.len();
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 {
            v.push(0.0);
            continue;
        }
        let a: Vec<&str> = out.a[..i].iter().flatten().map(|s| s.as_str()).collect();
        let bi: Vec<&str> = strs(&out.b[i]);
        let cond: Vec<&str> = out.b[..i].iter().flatten().map(|s| s.as_str()).chain(strs(&out.e)).collect();
        v.push(cq_cmi(&out.state, &a, &bi, &cond)?.max(0.0));
    }
    Ok(v)
}

#[derive(Clone, Debug, Serialize)]
pub struct SoundnessReport {
    /// Certified lower end of the exact `H_min(A₁ⁿ|B₁ⁿE)_{ρ|Ω}`.
    pub exact_hmin: f64,
    pub exact_hmin_upper: f64,
    pub eat_bound: f64,
    pub eat: EatBound,
    pub slack: f64,
    pub h: f64,
    pub p_omega: f64,
    pub markov: Vec<f64>,
}

pub fn soundness_experiment(out: &ProcessOutput, f: &TradeoffSpec, epsilon: f64, omega: &Event) -> Result<SoundnessReport> {
    let markov = check_markov_chain_conditions(out)?;
    if let Some((i, v)) = markov.iter().enumerate().find(|(_, v)| **v > TOL_MARKOV) {
        return precondition(format!("Markov condition violated at step {}: I = {v:e}", i + 1));
    }
    if f.alphabet.len() != out.x_alphabet {
        return Err(Error::Dimension(format!(
            "tradeoff alphabet has {} symbols, statistics have {}",
            f.alphabet.len(),
            out.x_alphabet
        )));
    }
    let labels = out.state.classical_labels();
    let xpos: Vec<usize> = out.x.iter().map(|x| labels.iter().position(|l| l == x).expect("statistics present")).collect();
    let mut h = f64::INFINITY;
    for (key, m) in out.state.branches() {
        if linalg::trace_re(m) <= 0.0 || !omega.contains(&labels, key)? {
            continue;
        }
        let q = if xpos.is_empty() {
            vec![1.0]
        } else {
            crate::state::frequencies(&xpos.iter().map(|&i| key[i]).collect::<Vec<_>>(), out.x_alphabet)?
        };
        h = h.min(f.value(&q)?);
    }
    let (cond, p_omega) = out.state.condition_on_event(omega)?;
    let a: Vec<&str> = out.a.iter().flatten().map(|s| s.as_str()).collect();
    let bc: Vec<&str> = out.b.iter().flatten().map(|s| s.as_str()).chain(strs(&out.e)).collect();
    let exact = cq_h_min(&cond, &a, &bc)?;
    let params = EATParams { n: out.a.len() as u64, d_a: out.d_a.max(2), epsilon, p_omega: p_omega.min(1.0), h };
    let bound = eat::eat_min_bound(&params, f)?;
    Ok(SoundnessReport {
        exact_hmin: exact.lower,
        exact_hmin_upper: exact.upper,
        eat_bound: bound.value,
        eat: bound,
        slack: exact.lower - bound.value,
        h,
        p_omega,
        markov,
    })
}

/// Constant tradeoff from the sampled infimum of `H(A_i|B_i R)` over pure inputs on
/// `R_{i−1} ⊗ R` with `R ≅ R_{i−1}`. Sampled, not certified.
pub fn sampled_min_tradeoff(p: &Process, samples: usize, rng: &mut impl Rng) -> Result<TradeoffSpec> {
    let mut best = f64::INFINITY;
    for step in &p.steps {
        let input = step.channel.input().to_vec();
        let din = dim_of(&input);
        let mut regs = input.clone();
        regs.push(Register::new("__ref", din));
        for _ in 0..samples.max(1) {
            let psi = linalg::outer(&random::pure_vector(rng, din * din));
            let omega = Operator::new(regs.clone(), psi)?;
            let nu = step.channel.apply(&omega)?;
            let keep: Vec<&str> = step.a.iter().chain(step.b.iter()).map(|s| s.as_str()).chain(["__ref"]).collect();
            let nu = nu.ptrace_keep(&keep)?;
            let cond: Vec<&str> = step.b.iter().map(|s| s.as_str()).chain(["__ref"]).collect();
            best = best.min(entropy::von_neumann_conditional(&nu, &cond)?);
        }
    }
    let alphabet = p.steps.iter().find_map(|s| s.x.as_ref().map(|x| x.alphabet)).unwrap_or(1);
    let names = (0..alphabet).map(|i| i.to_string()).collect();
    TradeoffSpec::affine(names, TradeoffKind::Min, vec![best; alphabet])
}

// ---------------------------------------------------------------------------
// Presets

/// Steps that prepare `ν` afresh, `A` = the registers listed in `a`, `B` = the rest.
pub fn iid_process(nu: &Operator, a: &[&str], n: usize) -> Result<Process> {
    if (nu.trace() - 1.0).abs() > 1e-9 || !nu.is_state(1e-9) {
        return precondition("ν must be a normalized state");
    }
    for l in a {
        nu.position(l)?;
    }
    let e = linalg::eigh(nu.matrix());
    let kraus: Vec<CMat> = e
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.0)
        .map(|(k, &l)| CMat::from_column_slice(nu.dim(), 1, (e.vectors.column(k) * c(l.sqrt())).as_slice()))
        .collect();
    let mut steps = Vec::with_capacity(n);
    for i in 1..=n {
        let outs: Vec<Register> =
            nu.registers().iter().map(|r| Register { label: format!("{}{i}", r.label), ..r.clone() }).collect();
        let (av, bv): (Vec<&Register>, Vec<&Register>) = outs.iter().partition(|r| a.iter().any(|l| format!("{l}{i}") == r.label));
        steps.push(Step {
            channel: Channel::from_kraus(vec![], outs.clone(), kraus.clone())?,
            a: av.iter().map(|r| r.label.clone()).collect(),
            b: bv.iter().map(|r| r.label.clone()).collect(),
            x: None,
        });
    }
    Ok(Process { steps, initial: trivial_state(), e: vec![] })
}

/// Fresh classical pairs drawn from `p[a][b]`.
pub fn classical_table_process(p: &[Vec<f64>], n: usize) -> Result<Process> {
    let na = p.len();
    let nb = p.first().map_or(0, |r| r.len());
    if na == 0 || nb == 0 || p.iter().any(|r| r.len() != nb) {
        return precondition("probability table must be a non-empty rectangle");
    }
    let flat: Vec<f64> = p.iter().flatten().cloned().collect();
    if flat.iter().any(|&v| v < 0.0) || (flat.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return precondition("probability table must be a distribution");
    }
    let nu = Operator::new(vec![Register::classical("A", na), Register::classical("B", nb)], linalg::diag(&flat))?;
    iid_process(&nu, &["A"], n)
}

fn basis_vector(basis: usize, u: usize) -> linalg::CVec {
    let s = 0.5f64.sqrt();
    match (basis, u) {
        (0, 0) => linalg::CVec::from_vec(vec![c(1.0), c(0.0)]),
        (0, _) => linalg::CVec::from_vec(vec![c(0.0), c(1.0)]),
        (_, 0) => linalg::CVec::from_vec(vec![c(s), c(s)]),
        (_, _) => linalg::CVec::from_vec(vec![c(s), c(-s)]),
    }
}

/// Symbol for `⊥` in the `{0, 1, ⊥}` alphabets.
pub const BOT: usize = 2;

/// One E91 round on `(Q, Q̄)`: bases `B, B̄` drawn with `P(1) = μ`; outputs
/// `A, Ā ∈ {0,1,⊥}` and `B, B̄`, all classical.
pub fn e91_round_channel(q: &str, qbar: &str, suffix: &str, mu: f64) -> Result<Channel> {
    if !(mu > 0.0 && mu < 1.0) {
        return precondition(format!("μ must lie in (0,1), got {mu}"));
    }
    let outs = vec![
        Register::classical(format!("A{suffix}"), 3),
        Register::classical(format!("Abar{suffix}"), 3),
        Register::classical(format!("B{suffix}"), 2),
        Register::classical(format!("Bbar{suffix}"), 2),
    ];
    let pb = [1.0 - mu, mu];
    let mut kraus = Vec::new();
    for b in 0..2 {
        for bb in 0..2 {
            let w = (pb[b] * pb[bb]).sqrt();
            for u in 0..2 {
                for v in 0..2 {
                    let a = if b == bb { u } else { BOT };
                    let abar = if b == 1 && bb == 1 { v } else { BOT };
                    let qbasis = if b == bb { b } else { 0 };
                    let qbbasis = if b == 1 && bb == 1 { 1 } else { 0 };
                    let bra = linalg::kron(
                        &CMat::from_column_slice(2, 1, basis_vector(qbasis, u).as_slice()),
                        &CMat::from_column_slice(2, 1, basis_vector(qbbasis, v).as_slice()),
                    )
                    .adjoint();
                    let idx = ((a * 3 + abar) * 2 + b) * 2 + bb;
                    let mut ket = CMat::zeros(36, 1);
                    ket[(idx, 0)] = c(w);
                    kraus.push(ket * bra);
                }
            }
        }
    }
    Channel::from_kraus(vec![Register::new(q, 2), Register::new(qbar, 2)], outs, kraus)
}

/// `X = A ⊕ Ā` when both bases are diagonal, `⊥` otherwise; symbols `(a, ā, b, b̄)`.
pub fn e91_statistic(label: String) -> Statistic {
    Statistic {
        label,
        alphabet: 3,
        t: Arc::new(|s: &[usize]| if s[2] == 1 && s[3] == 1 { (s[0] ^ s[1]) & 1 } else { BOT }),
    }
}

/// `(1−p) Φ + p id/4` on two qubits.
pub fn werner_pair(p: f64) -> CMat {
    let phi = linalg::outer(&(linalg::max_entangled_vector(2) * c(0.5f64.sqrt())));
    phi * c(1.0 - p) + linalg::maximally_mixed(4) * c(p)
}

/// `n` E91 rounds on independent depolarized pairs; `E` is trivial.
pub fn e91_process(n: usize, p_depol: f64, mu: f64) -> Result<Process> {
    if !(0.0..=1.0).contains(&p_depol) {
        return precondition(format!("depolarizing parameter must lie in [0,1], got {p_depol}"));
    }
    if n == 0 || 4usize.checked_pow(n as u32).is_none_or(|d| d > MAX_PROCESS_DIM) {
        return precondition(format!("{n} pairs exceed the dimension cap"));
    }
    let mut regs = Vec::new();
    let mut m = CMat::identity(1, 1);
    for i in 1..=n {
        regs.push(Register::new(format!("Q{i}"), 2));
        regs.push(Register::new(format!("Qbar{i}"), 2));
        m = linalg::kron(&m, &werner_pair(p_depol));
    }
    let mut b = BTreeMap::new();
    b.insert(vec![], m);
    let initial = CQState::new(vec![], regs, b)?;
    let steps = (1..=n)
        .map(|i| {
            Ok(Step {
                channel: e91_round_channel(&format!("Q{i}"), &format!("Qbar{i}"), &i.to_string(), mu)?,
                a: vec![format!("A{i}"), format!("Abar{i}")],
                b: vec![format!("B{i}"), format!("Bbar{i}")],
                x: Some(e91_statistic(format!("X{i}"))),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Process { steps, initial, e: vec![] })
}

/// One step `R_{i−1} → B_i A_i R_i` given by its conditional state on
/// `(A ⊗ B ⊗ R_i) ⊗ R_{i−1}`; relabelled per round.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChoiStep {
    pub a_dim: usize,
    #[serde(default)]
    pub a_classical: bool,
    pub b_dim: usize,
    #[serde(default = "yes")]
    pub b_classical: bool,
    pub r_dim: usize,
    pub choi_real: Vec<Vec<f64>>,
    #[serde(default)]
    pub choi_imag: Option<Vec<Vec<f64>>>,
}

fn yes() -> bool {
    true
}

/// Random Markov-compliant process: `B_i` is a fresh classical bit and, conditioned on
/// it, a random channel maps `R_{i−1}` to `A_i R_i`. Either every `A_i` is measured
/// (with `X_i = A_i ⊕ B_i`) or every `A_i` stays quantum.
pub fn random_markov_process(n: usize, rng: &mut impl Rng) -> Result<Process> {
    let de = [1usize, 2, 4][rng.random_range(0..3)];
    let dr = 2;
    let classical_a = rng.random_bool(0.5);
    let a_q = if classical_a { 1 } else { 1usize << n };
    if de * dr * a_q > MAX_PROCESS_DIM {
        return random_markov_process_with(n, 1, dr, classical_a, rng);
    }
    random_markov_process_with(n, de, dr, classical_a, rng)
}

pub fn random_markov_process_with(n: usize, de: usize, dr: usize, classical_a: bool, rng: &mut impl Rng) -> Result<Process> {
    if dr > MAX_R_DIM || de > MAX_E_DIM {
        return precondition("memory or environment dimension above the cap");
    }
    let rho0 = random::density(rng, dr * de, dr * de);
    let mut b = BTreeMap::new();
    b.insert(vec![], rho0);
    let mut qregs = vec![Register::new("R0", dr)];
    if de > 1 {
        qregs.push(Register::new("E", de));
    }
    let initial = CQState::new(vec![], qregs, b)?;
    let mut steps = Vec::with_capacity(n);
    for i in 1..=n {
        let p1: f64 = rng.random_range(0.1..0.9);
        let areg = if classical_a { Register::classical(format!("A{i}"), 2) } else { Register::new(format!("A{i}"), 2) };
        let outs = vec![Register::classical(format!("B{i}"), 2), areg, Register::new(format!("R{i}"), dr)];
        let mut kraus = Vec::new();
        for (bv, pb) in [(0usize, 1.0 - p1), (1, p1)] {
            let mut ket = CMat::zeros(2, 1);
            ket[(bv, 0)] = c(pb.sqrt());
            for k in random::kraus_channel(rng, dr, 2 * dr, 2) {
                kraus.push(linalg::kron(&ket, &k));
            }
        }
        let channel = Channel::from_kraus(vec![Register::new(format!("R{}", i - 1), dr)], outs, kraus)?;
        let x = classical_a.then(|| Statistic {
            label: format!("X{i}"),
            alphabet: 2,
            t: Arc::new(|s: &[usize]| s[0] ^ s[1]),
        });
        steps.push(Step { channel, a: vec![format!("A{i}")], b: vec![format!("B{i}")], x });
    }
    Ok(Process { steps, initial, e: if de > 1 { vec!["E".into()] } else { vec![] } })
}

fn choi_process(step: &ChoiStep, initial: &StateFile, n: usize) -> Result<Process> {
    let init = initial.to_operator()?;
    let labels = init.labels();
    if !labels.contains(&"R0") {
        return precondition("the initial state of a custom process must contain a register `R0`");
    }
    if init.register("R0")?.dim != step.r_dim {
        return Err(Error::Dimension("R0 dimension differs from r_dim".into()));
    }
    let e: Vec<String> = labels.iter().filter(|l| **l != "R0").map(|l| l.to_string()).collect();
    let d = step.choi_real.len();
    let m = CMat::from_fn(d, d, |i, j| {
        num_complex::Complex64::new(
            step.choi_real[i].get(j).copied().unwrap_or(f64::NAN),
            step.choi_imag.as_ref().map_or(0.0, |x| x[i][j]),
        )
    });
    if m.iter().any(|z| z.re.is_nan()) {
        return Err(Error::Parse("conditional state rows must be square".into()));
    }
    let mut steps = Vec::with_capacity(n);
    for i in 1..=n {
        let areg = Register { label: format!("A{i}"), dim: step.a_dim, classical: step.a_classical };
        let breg = Register { label: format!("B{i}"), dim: step.b_dim, classical: step.b_classical };
        let outs = vec![areg, breg, Register::new(format!("R{i}"), step.r_dim)];
        let channel = Channel::from_cond_state(vec![Register::new(format!("R{}", i - 1), step.r_dim)], outs, m.clone())?;
        if !channel.is_trace_preserving(1e-9) {
            return precondition("custom step is not trace preserving");
        }
        steps.push(Step { channel, a: vec![format!("A{i}")], b: vec![format!("B{i}")], x: None });
    }
    Ok(Process { steps, initial: CQState::quantum_only(&init)?, e })
}

/// Process description file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub n: usize,
    pub step: StepPreset,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepPreset {
    IidPrep { state: StateFile, a: Vec<String> },
    E91Round { p_depol: f64, mu: f64 },
    ClassicalTable { table: Vec<Vec<f64>> },
    CustomChoi { initial: StateFile, step: ChoiStep },
    RandomMarkov,
}

impl ProcessSpec {
    pub fn build(&self) -> Result<Process> {
        if self.n == 0 {
            return precondition("n must be at least 1");
        }
        match &self.step {
            StepPreset::IidPrep { state, a } => iid_process(&state.to_operator()?, &strs(a), self.n),
            StepPreset::E91Round { p_depol, mu } => e91_process(self.n, *p_depol, *mu),
            StepPreset::ClassicalTable { table } => classical_table_process(table, self.n),
            StepPreset::CustomChoi { initial, step } => choi_process(step, initial, self.n),
            StepPreset::RandomMarkov => random_markov_process(self.n, &mut random::rng(self.seed)),
        }
    }
}

// ---------------------------------------------------------------------------
// Uncertainty relation of the QKD tradeoff

#[derive(Clone, Copy, Debug, Serialize)]
pub struct UncertaintyCheck {
    /// `H(A|R)` conditioned on both bases computational.
    pub h_a_given_r: f64,
    /// `1 − H(A|Ā)` conditioned on both bases diagonal.
    pub one_minus_h_a_given_abar: f64,
}

impl UncertaintyCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.h_a_given_r >= self.one_minus_h_a_given_abar - tol
    }
}

/// Evaluate both sides of `H(A|R)_{ν|0} ≥ 1 − H(A|Ā)_{ν|1}` for one E91 round applied
/// to `ω` on `Q ⊗ Q̄ ⊗ R`.
pub fn uncertainty_relation(omega: &Operator, mu: f64) -> Result<UncertaintyCheck> {
    let ch = e91_round_channel("Q", "Qbar", "", mu)?;
    let out = CQState::quantum_only(omega)?.apply_channel(&ch)?;
    let r: Vec<&str> = out.quantum_labels();
    let both = |v: usize| Event::Subset { registers: vec!["B".into(), "Bbar".into()], members: vec![vec![v, v]] };
    let (s0, _) = out.condition_on_event(&both(0))?;
    let (s1, _) = out.condition_on_event(&both(1))?;
    Ok(UncertaintyCheck {
        h_a_given_r: cq_conditional_entropy(&s0, &["A"], &r)?,
        one_minus_h_a_given_abar: 1.0 - cq_conditional_entropy(&s1, &["A"], &["Abar"])?,
    })
}

/// Werner pair on `Q Q̄` together with its purification on `R`.
pub fn purified_werner(p: f64) -> Result<Operator> {
    let (psi, dr) = linalg::purify(&werner_pair(p))?;
    Operator::new(vec![Register::new("Q", 2), Register::new("Qbar", 2), Register::new("R", dr)], linalg::outer(&psi))
}

// ---------------------------------------------------------------------------
// Markov-necessity counterexample

/// Largest `n` for the counterexample (the conditioning alphabet has `2^{n²}` values).
pub const MAX_COUNTEREXAMPLE_N: usize = 12;

fn h2(x: f64) -> f64 {
    entropy::shannon(&[x, 1.0 - x])
}

/// Column structure of `p(a | b₁…b_n)` with `A = ⊕_i B_i` or uniform.
pub fn counterexample_blocks(n: usize) -> Vec<ClassicalBlock> {
    let nn = (n * n) as f64;
    let w = 2f64.powf(-nn);
    let light = 2f64.powf(-(n as f64) - 1.0);
    vec![ClassicalBlock {
        multiplicity: 2f64.powf(nn),
        atoms: vec![(w * (0.5 + light), 1.0), (w * light, 2f64.powi(n as i32) - 1.0)],
    }]
}

/// `inf H(A_i|B_i)` over fixed `a_{<i}, b_{<i}, b_{>i}`, which does not depend on the
/// fixed values: with `m = i − 1` prior bits, `B_i` is consistent with them with
/// probability `(1 + 2^{−m})/2`, in which case `A_i` is determined with probability
/// `p₀ = 1/(1 + 2^{−m})`; otherwise it is uniform.
pub fn counterexample_step_infimum(i: usize) -> f64 {
    let m = (i - 1) as f64;
    let t = 2f64.powf(-m);
    let p_match = 0.5 * (1.0 + t);
    let p0 = 1.0 / (1.0 + t);
    p_match * h2(0.5 * (1.0 + p0)) + (1.0 - p_match)
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub n: usize,
    pub epsilon: f64,
    pub hmin_eps: f64,
    pub hmin: f64,
    pub per_step: Vec<f64>,
    pub per_step_sum: f64,
    /// Per-step constant `3 log(1+2d_A)√(1 − 2 log ε)` with `d_A = 2`.
    pub c: f64,
    /// `Σ infima − c√n`.
    pub eat_rhs: f64,
    /// Smallest `n` with `n/2 − c√n` above the largest `H_min^ε` seen for `n ≤ 12`.
    pub crossover_n: f64,
    /// `H(A|B, C=0)` from the explicit joint distribution (`n ≤ 3`).
    pub h_given_c0: Option<f64>,
}

pub fn markov_counterexample(n: usize, epsilon: f64) -> Result<CounterexampleReport> {
    if n == 0 || n > MAX_COUNTEREXAMPLE_N {
        return precondition(format!("n must lie in 1..={MAX_COUNTEREXAMPLE_N}"));
    }
    let blocks = counterexample_blocks(n);
    let hmin_eps = smooth::h_min_smooth_classical_blocks(&blocks, epsilon)?;
    let hmin = smooth::h_min_smooth_classical_blocks(&blocks, 0.0)?;
    let per_step: Vec<f64> = (1..=n).map(counterexample_step_infimum).collect();
    let per_step_sum: f64 = per_step.iter().sum();
    let c = eat::per_step_c(2, epsilon)?;
    // H_min^ε increases towards 1 − log(1 − ε²) + O(2^{−n}); bound it by that plus one bit.
    let cap = 2.0 - (1.0 - epsilon * epsilon).log2();
    let root = c + (c * c + 2.0 * cap).sqrt();
    let h_given_c0 = if n <= 3 {
        let st = counterexample_state(n)?;
        let (s0, _) = st.condition_on_event(&Event::Subset { registers: vec!["C".into()], members: vec![vec![0]] })?;
        let a: Vec<String> = (1..=n).map(|i| format!("A{i}")).collect();
        let b: Vec<String> = (1..=n).map(|i| format!("B{i}")).collect();
        Some(cq_conditional_entropy(&s0, &strs(&a), &strs(&b))?)
    } else {
        None
    };
    Ok(CounterexampleReport {
        n,
        epsilon,
        hmin_eps,
        hmin,
        per_step_sum,
        c,
        eat_rhs: per_step_sum - c * (n as f64).sqrt(),
        crossover_n: root * root,
        per_step,
        h_given_c0,
    })
}

/// Explicit joint distribution over `C, A₁…A_n, B₁…B_n` (`B_i` are `n`-bit strings).
pub fn counterexample_state(n: usize) -> Result<CQState> {
    if n == 0 || n > 3 {
        return precondition("the explicit counterexample state is built for n ≤ 3 only");
    }
    let nb = 1usize << n;
    let mut classical = vec![Register::classical("C", 2)];
    classical.extend((1..=n).map(|i| Register::classical(format!("A{i}"), 2)));
    classical.extend((1..=n).map(|i| Register::classical(format!("B{i}"), nb)));
    let mut branches = BTreeMap::new();
    let total_b = nb.pow(n as u32);
    let pb = 1.0 / total_b as f64;
    for bidx in 0..total_b {
        let mut bs = Vec::with_capacity(n);
        let mut rest = bidx;
        for _ in 0..n {
            bs.push(rest % nb);
            rest /= nb;
        }
        let xor = bs.iter().fold(0, |acc, v| acc ^ v);
        for cbit in 0..2 {
            for a in 0..nb {
                let p = if cbit == 0 {
                    if a == xor { 0.5 * pb } else { 0.0 }
                } else {
                    0.5 * pb / nb as f64
                };
                if p == 0.0 {
                    continue;
                }
                let mut key = vec![cbit];
                key.extend((0..n).map(|i| (a >> (n - 1 - i)) & 1));
                key.extend(bs.iter().cloned());
                branches.insert(key, CMat::from_element(1, 1, c(p)));
            }
        }
    }
    CQState::new(classical, vec![], branches)
}

/// The counterexample as a process output with `C` marginalized (for the Markov check).
pub fn counterexample_output(n: usize) -> Result<ProcessOutput> {
    let st = counterexample_state(n)?.marginalize_classical(&["C"])?;
    Ok(ProcessOutput {
        state: st,
        a: (1..=n).map(|i| vec![format!("A{i}")]).collect(),
        b: (1..=n).map(|i| vec![format!("B{i}")]).collect(),
        x: vec![],
        e: vec![],
        x_alphabet: 1,
        d_a: 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::FreqConstraint;

    #[test]
    fn iid_prep_reproduces_tensor_power() {
        let mut r = random::rng(5);
        let nu = Operator::new(vec![Register::new("A", 2), Register::new("B", 2)], random::density(&mut r, 4, 4)).unwrap();
        let out = run_process(&iid_process(&nu, &["A"], 2).unwrap()).unwrap();
        let op = out.state.to_operator().reorder(&["A1", "B1", "A2", "B2"]).unwrap();
        let expect = linalg::kron(nu.matrix(), nu.matrix());
        assert!(linalg::max_abs(&(op.matrix() - expect)) < 1e-12);
        assert!(check_markov_chain_conditions(&out).unwrap().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn e91_single_round_has_eight_branches() {
        let (mu, p) = (0.3, 0.1);
        let out = run_process(&e91_process(1, p, mu).unwrap()).unwrap();
        let st = out.state.marginalize_classical(&["X1"]).unwrap();
        let br: Vec<(Symbols, f64)> =
            st.branches().iter().map(|(k, m)| (k.clone(), linalg::trace_re(m))).filter(|(_, w)| *w > 1e-15).collect();
        assert_eq!(br.len(), 8);
        let mut expect: BTreeMap<Symbols, f64> = BTreeMap::new();
        let p00 = (1.0 - mu) * (1.0 - mu);
        expect.insert(vec![0, BOT, 0, 0], p00 / 2.0);
        expect.insert(vec![1, BOT, 0, 0], p00 / 2.0);
        expect.insert(vec![BOT, BOT, 0, 1], (1.0 - mu) * mu);
        expect.insert(vec![BOT, BOT, 1, 0], (1.0 - mu) * mu);
        for a in 0..2 {
            for ab in 0..2 {
                let w = if a == ab { (1.0 - p / 2.0) / 2.0 } else { p / 4.0 };
                expect.insert(vec![a, ab, 1, 1], mu * mu * w);
            }
        }
        for (k, w) in br {
            assert!((expect[&k] - w).abs() < 1e-12, "{k:?}");
        }
    }

    #[test]
    fn chained_random_channels_are_normalized_and_markov() {
        let mut r = random::rng(8);
        for _ in 0..5 {
            let p = random_markov_process(2, &mut r).unwrap();
            let out = run_process(&p).unwrap();
            assert!(out.state.is_normalized(1e-10));
            assert!(check_markov_chain_conditions(&out).unwrap().iter().all(|v| *v <= 1e-9));
        }
    }

    #[test]
    fn e91_markov_and_counterexample_violation() {
        let out = run_process(&e91_process(2, 0.1, 0.4).unwrap()).unwrap();
        assert!(check_markov_chain_conditions(&out).unwrap().iter().all(|v| *v <= 1e-9));
        let ce = counterexample_output(2).unwrap();
        let v = check_markov_chain_conditions(&ce).unwrap();
        assert!(v[1] > 1e-3, "{v:?}");
    }

    #[test]
    fn cq_h_min_matches_dense_solver() {
        let mut r = random::rng(21);
        let p = random_markov_process_with(2, 2, 2, false, &mut r).unwrap();
        let out = run_process(&p).unwrap();
        let dense = out.state.to_operator();
        let h_cq = cq_h_min(&out.state, &["A1", "A2"], &["B1", "B2", "E"]).unwrap();
        let h_dense = smooth::h_min(&dense, &["B1", "B2", "E"]).unwrap();
        assert!((h_cq.value - h_dense.value).abs() < 1e-6, "{} {}", h_cq.value, h_dense.value);
        assert!(h_cq.lower <= h_dense.upper + 1e-9 && h_dense.lower <= h_cq.upper + 1e-9);
    }

    #[test]
    fn soundness_examples() {
        let phi = linalg::outer(&(linalg::max_entangled_vector(2) * c(0.5f64.sqrt())));
        let nu = Operator::new(vec![Register::new("A", 2), Register::new("B", 2)], phi).unwrap();
        let out = run_process(&iid_process(&nu, &["A"], 3).unwrap()).unwrap();
        let f = TradeoffSpec::constant(-1.0, TradeoffKind::Min);
        let rep = soundness_experiment(&out, &f, 0.1, &Event::Full).unwrap();
        assert!((rep.exact_hmin + 3.0).abs() < 1e-6 && rep.eat.vacuous && rep.slack >= 0.0, "{rep:?}");
        // The IID report coincides with the AEP bound.
        let aep = eat::aep_bound(&nu, &["B"], 3, 0.1).unwrap();
        assert!((rep.eat_bound - aep).abs() <= 1e-12 * aep.abs());

        let bit = classical_table_process(&[vec![0.5], vec![0.5]], 4).unwrap();
        let out = run_process(&bit).unwrap();
        let f = TradeoffSpec::constant(1.0, TradeoffKind::Min);
        let rep = soundness_experiment(&out, &f, 0.1, &Event::Full).unwrap();
        assert!((rep.exact_hmin - 4.0).abs() < 1e-12 && rep.slack >= 0.0);
        let ce = counterexample_output(2).unwrap();
        assert!(soundness_experiment(&ce, &f, 0.1, &Event::Full).is_err());
    }

    #[test]
    fn e91_soundness_across_noise() {
        for p in [0.0, 0.1, 0.25] {
            let out = run_process(&e91_process(2, p, 0.5).unwrap()).unwrap();
            let (f, _) = crate::apps::qkd_tangent(0.5, 0.1).unwrap();
            let omega = Event::Frequency {
                registers: vec!["X1".into(), "X2".into()],
                alphabet: 3,
                constraints: vec![FreqConstraint::at_most(3, 1, 0.5)],
            };
            let rep = soundness_experiment(&out, &f, 0.1, &omega).unwrap();
            assert!(rep.slack >= 0.0, "{rep:?}");
        }
    }

    #[test]
    fn uncertainty_relation_on_e91_states() {
        for p in [0.0, 0.1, 0.3, 1.0] {
            let u = uncertainty_relation(&purified_werner(p).unwrap(), 0.5).unwrap();
            assert!(u.holds(1e-9), "{p}: {u:?}");
        }
        let ideal = uncertainty_relation(&purified_werner(0.0).unwrap(), 0.5).unwrap();
        assert!((ideal.h_a_given_r - 1.0).abs() < 1e-9 && (ideal.one_minus_h_a_given_abar - 1.0).abs() < 1e-9);
    }

    #[test]
    fn counterexample_matches_oracle() {
        // oracles/markov_counterexample.py
        let r = markov_counterexample(3, 0.01).unwrap();
        assert!((r.hmin_eps - 0.8557801823).abs() < 1e-6, "{}", r.hmin_eps);
        let want = [0.811278124459, 0.737516816236, 0.668122245993];
        for (a, b) in r.per_step.iter().zip(want) {
            assert!((a - b).abs() < 1e-11);
        }
        assert!(r.per_step_sum >= 1.5 && r.h_given_c0.unwrap().abs() < 1e-12);
        for (n, v) in [(4, 0.9399144234), (5, 0.9838538584), (6, 1.0063251797), (7, 1.0176908000), (8, 1.0234066933)] {
            let r = markov_counterexample(n, 0.01).unwrap();
            assert!((r.hmin_eps - v).abs() < 1e-6, "{n}: {}", r.hmin_eps);
        }
        // Explicit table agrees with the block reduction.
        let st = counterexample_state(3).unwrap().marginalize_classical(&["C"]).unwrap();
        let h = cq_h_min(&st, &["A1", "A2", "A3"], &["B1", "B2", "B3"]).unwrap();
        assert!((h.value - r_hmin0(3)).abs() < 1e-12);
    }

    fn r_hmin0(n: usize) -> f64 {
        -(0.5 + 2f64.powf(-(n as f64) - 1.0)).log2()
    }
}
