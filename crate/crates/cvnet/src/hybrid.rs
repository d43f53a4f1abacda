//! Certification of the classical bound 2 for the one-way Bell combination
//! over hybrid models: one source distributes classical randomness, the
//! other an arbitrary no-signaling resource, and the middle node may
//! broadcast its outcome.
//!
//! The middle node has no input, so a no-signaling behavior here is a joint
//! distribution p(b, o | i) over the middle outcome b and the measured
//! party's outcome o given that party's input i, whose b-marginal is
//! independent of i. The classical side is reduced without loss to the four
//! deterministic single-party strategies (the objective is linear in the
//! mixture), and the no-signaling side is maximized by enumerating the
//! vertices of its polytope: conditioning on any middle outcome with
//! positive probability, the reachable conditional correlators fill
//! [-1, 1] per input, which caps the combination at 2.

use itertools::Itertools;

use crate::bell::{Outcome, Setting};
use crate::error::{Error, Result};

/// Which source carries the classical randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalSide {
    /// Classical randomness between the first node and the middle;
    /// no-signaling resource between the middle and the far node.
    AliceBob,
    /// Mirror arrangement.
    BobCharlie,
}

/// A hybrid certification scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridScenario {
    pub classical_side: ClassicalSide,
    /// Size of the middle node's outcome alphabet.
    pub b_alphabet: usize,
}

impl HybridScenario {
    pub fn new(classical_side: ClassicalSide, b_alphabet: usize) -> Result<Self> {
        if b_alphabet < 1 {
            return Err(Error::domain("b_alphabet must be at least 1"));
        }
        Ok(HybridScenario {
            classical_side,
            b_alphabet,
        })
    }
}

/// A deterministic ±1 response per binary setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub outputs: [i8; 2],
}

impl DeterministicStrategy {
    pub fn output(&self, s: Setting) -> f64 {
        f64::from(self.outputs[s.index()])
    }
}

/// The four deterministic strategies for one binary-input ±1-output party.
pub fn deterministic_strategies() -> [DeterministicStrategy; 4] {
    [
        DeterministicStrategy { outputs: [1, 1] },
        DeterministicStrategy { outputs: [1, -1] },
        DeterministicStrategy { outputs: [-1, 1] },
        DeterministicStrategy { outputs: [-1, -1] },
    ]
}

/// Validation tolerance for normalization and no-signaling sums.
const NS_TOL: f64 = 1e-12;

/// A no-signaling behavior p(b, o | i): middle outcome b in 0..B, measured
/// outcome o = ±1, input i in {0, 1}. Nonnegative, normalized per input,
/// with the b-marginal independent of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct NSBehavior {
    b_alphabet: usize,
    /// Flat layout: [(i, b, o)] with o fastest (Plus = 0, Minus = 1).
    probs: Vec<f64>,
}

impl NSBehavior {
    /// Validate and wrap a probability table laid out as
    /// `probs[(i * B + b) * 2 + o]`.
    pub fn new(b_alphabet: usize, probs: Vec<f64>) -> Result<Self> {
        if b_alphabet < 1 {
            return Err(Error::Validation("b_alphabet must be at least 1".into()));
        }
        if probs.len() != 4 * b_alphabet {
            return Err(Error::Validation(format!(
                "expected {} entries, got {}",
                4 * b_alphabet,
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -NS_TOL) {
            return Err(Error::Validation(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let behavior = NSBehavior { b_alphabet, probs };
        for i in 0..2 {
            let total: f64 = (0..b_alphabet)
                .map(|b| behavior.raw(i, b, 0) + behavior.raw(i, b, 1))
                .sum();
            if (total - 1.0).abs() > NS_TOL {
                return Err(Error::Validation(format!(
                    "distribution for input {i} sums to {total}, expected 1"
                )));
            }
        }
        for b in 0..b_alphabet {
            let m0 = behavior.raw(0, b, 0) + behavior.raw(0, b, 1);
            let m1 = behavior.raw(1, b, 0) + behavior.raw(1, b, 1);
            if (m0 - m1).abs() > NS_TOL {
                return Err(Error::Validation(format!(
                    "middle-outcome marginal for b={b} depends on the input: {m0} vs {m1}"
                )));
            }
        }
        Ok(behavior)
    }

    pub fn b_alphabet(&self) -> usize {
        self.b_alphabet
    }

    fn raw(&self, input: usize, b: usize, o: usize) -> f64 {
        self.probs[(input * self.b_alphabet + b) * 2 + o]
    }

    /// p(b, outcome | input)
    pub fn prob(&self, b: usize, outcome: Outcome, input: Setting) -> f64 {
        self.raw(input.index(), b, outcome.index())
    }

    /// Input-independent marginal probability of middle outcome `b`.
    pub fn outcome_marginal(&self, b: usize) -> f64 {
        self.raw(0, b, 0) + self.raw(0, b, 1)
    }

    /// Conditional correlator ⟨O|b⟩ at `input`, defined when the marginal
    /// of `b` is positive.
    pub fn conditional_correlator(&self, b: usize, input: Setting) -> Option<f64> {
        let pb = self.outcome_marginal(b);
        if pb <= 0.0 {
            return None;
        }
        Some((self.prob(b, Outcome::Plus, input) - self.prob(b, Outcome::Minus, input)) / pb)
    }
}

/// Enumerate the vertices of the no-signaling polytope for a given middle
/// alphabet by brute-force basis enumeration over its H-representation
/// (normalization and marginal-equality rows, then nonnegativity).
pub fn ns_polytope_vertices(b_alphabet: usize) -> Vec<NSBehavior> {
    let nvars = 4 * b_alphabet;
    let idx = |i: usize, b: usize, o: usize| (i * b_alphabet + b) * 2 + o;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for i in 0..2 {
        let mut row = vec![0.0; nvars];
        for b in 0..b_alphabet {
            row[idx(i, b, 0)] = 1.0;
            row[idx(i, b, 1)] = 1.0;
        }
        rows.push(row);
        rhs.push(1.0);
    }
    for b in 0..b_alphabet {
        let mut row = vec![0.0; nvars];
        row[idx(0, b, 0)] = 1.0;
        row[idx(0, b, 1)] = 1.0;
        row[idx(1, b, 0)] = -1.0;
        row[idx(1, b, 1)] = -1.0;
        rows.push(row);
        rhs.push(0.0);
    }
    // the marginal rows sum to the difference of the two normalization
    // rows, so the system rank is B + 1
    let rank = b_alphabet + 1;

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut keys: Vec<Vec<i64>> = Vec::new();
    for support in (0..nvars).combinations(rank) {
        let Some(solution) = solve_on_support(&rows, &rhs, &support, nvars) else {
            continue;
        };
        if solution.iter().any(|&v| v < -1e-9) {
            continue;
        }
        let cleaned: Vec<f64> = solution
            .iter()
            .map(|&v| if v.abs() < 1e-9 { 0.0 } else { v })
            .collect();
        let key: Vec<i64> = cleaned.iter().map(|&v| (v * 1e9).round() as i64).collect();
        if !keys.contains(&key) {
            keys.push(key);
            vertices.push(cleaned);
        }
    }
    vertices
        .into_iter()
        .map(|v| NSBehavior::new(b_alphabet, v).expect("enumerated vertex must validate"))
        .collect()
}

/// Solve the equality system restricted to `support` (all other variables
/// zero). Returns the full-length solution when it is unique and
/// consistent, `None` otherwise.
fn solve_on_support(
    rows: &[Vec<f64>],
    rhs: &[f64],
    support: &[usize],
    nvars: usize,
) -> Option<Vec<f64>> {
    let m = rows.len();
    let k = support.len();
    let mut aug: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row: Vec<f64> = support.iter().map(|&c| rows[r][c]).collect();
            row.push(rhs[r]);
            row
        })
        .collect();
    let mut pivot_of_col = vec![usize::MAX; k];
    let mut rank = 0;
    for col in 0..k {
        let pivot = (rank..m).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))?;
        if aug[pivot][col].abs() < 1e-10 {
            continue;
        }
        aug.swap(rank, pivot);
        let lead = aug[rank][col];
        for v in aug[rank].iter_mut() {
            *v /= lead;
        }
        let lead_row = aug[rank].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r != rank && row[col] != 0.0 {
                let factor = row[col];
                for (v, l) in row[col..=k].iter_mut().zip(&lead_row[col..=k]) {
                    *v -= factor * l;
                }
            }
        }
        pivot_of_col[col] = rank;
        rank += 1;
    }
    // unique solution requires every support column to carry a pivot
    if pivot_of_col.contains(&usize::MAX) {
        return None;
    }
    // consistency of the eliminated-out rows
    for row in aug.iter().skip(rank) {
        if row[k].abs() > 1e-9 {
            return None;
        }
    }
    let mut solution = vec![0.0; nvars];
    for (col, &var) in support.iter().enumerate() {
        solution[var] = aug[pivot_of_col[col]][k];
    }
    Some(solution)
}

/// Signs of the Bell combination E00 + E01 + E10 − E11.
fn bell_sign(x: Setting, z: Setting) -> f64 {
    if x == Setting::One && z == Setting::One {
        -1.0
    } else {
        1.0
    }
}

/// Maximum of the Bell combination, conditioned on any middle outcome with
/// positive probability, over all hybrid models of the scenario.
///
/// The classical side runs over the four deterministic strategies; the
/// no-signaling side runs over the polytope vertices. The exact maximum
/// is 2.
pub fn max_bell_hybrid(scenario: &HybridScenario) -> f64 {
    let vertices = ns_polytope_vertices(scenario.b_alphabet);
    assert!(
        !vertices.is_empty(),
        "no-signaling polytope enumeration found no vertices"
    );
    let mut best = f64::NEG_INFINITY;
    for strategy in deterministic_strategies() {
        for vertex in &vertices {
            for b in 0..scenario.b_alphabet {
                if vertex.outcome_marginal(b) <= 0.0 {
                    continue;
                }
                let e = |i: Setting| {
                    vertex
                        .conditional_correlator(b, i)
                        .expect("positive marginal")
                };
                let mut value = 0.0;
                for x in Setting::ALL {
                    for z in Setting::ALL {
                        value += match scenario.classical_side {
                            ClassicalSide::AliceBob => {
                                bell_sign(x, z) * strategy.output(x) * e(z)
                            }
                            ClassicalSide::BobCharlie => {
                                bell_sign(x, z) * e(x) * strategy.output(z)
                            }
                        };
                    }
                }
                best = best.max(value);
            }
        }
    }
    best
}

/// A fully specified hybrid model instance: a distribution over the
/// classical variable, the classical party's stochastic response, and the
/// no-signaling behavior of the other source.
#[derive(Debug, Clone)]
pub struct HybridModel {
    /// Distribution of the classical variable.
    pub lambda_dist: Vec<f64>,
    /// `alice_plus[lambda][x]` = P(a = +1 | x, lambda).
    pub alice_plus: Vec<[f64; 2]>,
    /// No-signaling behavior between the middle and the far node.
    pub ns: NSBehavior,
}

/// Unconditioned correlators of a model: the joint ⟨A_x C_z⟩ summed over
/// every alphabet, against the product ⟨A_x⟩⟨C_z⟩.
#[derive(Debug, Clone, Copy)]
pub struct IndependenceReport {
    pub joint: [[f64; 2]; 2],
    pub product: [[f64; 2]; 2],
    pub max_deviation: f64,
}

/// Check that the chain topology forces the unconditioned end-to-end
/// correlator to factorize: the far node's marginal cannot depend on the
/// classical variable, so ⟨A_x C_z⟩ = ⟨A_x⟩⟨C_z⟩ identically. Computed by
/// direct summation over all alphabets, not by factoring.
pub fn independence_check(model: &HybridModel) -> Result<IndependenceReport> {
    if model.lambda_dist.is_empty() {
        return Err(Error::Validation("lambda alphabet is empty".into()));
    }
    if model.alice_plus.len() != model.lambda_dist.len() {
        return Err(Error::Validation(
            "alice response table must cover every lambda".into(),
        ));
    }
    let total: f64 = model.lambda_dist.iter().sum();
    if model.lambda_dist.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > NS_TOL {
        return Err(Error::Validation(
            "lambda distribution must be a probability vector".into(),
        ));
    }
    if model
        .alice_plus
        .iter()
        .flatten()
        .any(|p| !(0.0..=1.0).contains(p))
    {
        return Err(Error::Validation(
            "alice response probabilities must lie in [0, 1]".into(),
        ));
    }

    let mut joint = [[0.0; 2]; 2];
    let mut product = [[0.0; 2]; 2];
    let mut max_deviation: f64 = 0.0;
    for x in Setting::ALL {
        for z in Setting::ALL {
            let mut j = 0.0;
            for (lambda, &mu) in model.lambda_dist.iter().enumerate() {
                let p_plus = model.alice_plus[lambda][x.index()];
                for (a_sign, pa) in [(1.0, p_plus), (-1.0, 1.0 - p_plus)] {
                    for b in 0..model.ns.b_alphabet() {
                        for c in Outcome::ALL {
                            j += mu * pa * model.ns.prob(b, c, z) * a_sign * c.sign();
                        }
                    }
                }
            }
            let mean_a: f64 = model
                .lambda_dist
                .iter()
                .enumerate()
                .map(|(lambda, &mu)| mu * (2.0 * model.alice_plus[lambda][x.index()] - 1.0))
                .sum();
            let mean_c: f64 = (0..model.ns.b_alphabet())
                .map(|b| {
                    model.ns.prob(b, Outcome::Plus, z) - model.ns.prob(b, Outcome::Minus, z)
                })
                .sum();
            joint[x.index()][z.index()] = j;
            product[x.index()][z.index()] = mean_a * mean_c;
            max_deviation = max_deviation.max((j - mean_a * mean_c).abs());
        }
    }
    Ok(IndependenceReport {
        joint,
        product,
        max_deviation,
    })
}
