//! Exact Gaussian algebra over independent vacuum seeds.
//!
//! Every beam is carried in the Heisenberg picture: its x and p quadratures
//! are linear forms over the quadratures of a fixed set of vacuum seed modes.
//! Seed quadratures are zero-mean with variance 1/4 (the x = (a + a†)/2
//! scale), and all of them are mutually uncorrelated, so every second moment
//! of the network reduces to a coefficient inner product. No covariance
//! matrix is kept as state: discarding a beam loses nothing, because the
//! remaining forms still reference the shared seeds.
//!
//! The x and p sectors share seed indices but never mix. Every optical
//! element implemented here maps x-forms to x-forms and p-forms to p-forms,
//! so cross-sector second moments are identically zero by construction.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Variance of every seed quadrature in the vacuum state.
pub const VACUUM_VARIANCE: f64 = 0.25;

static NEXT_REGISTRY_TOKEN: AtomicU64 = AtomicU64::new(0);

/// Identifies one vacuum seed mode within a registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeedId(u32);

impl SeedId {
    pub(crate) fn new(index: u32) -> Self {
        SeedId(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Allocates vacuum seed modes. Each registry is an independent seed space;
/// forms from different registries never combine.
///
/// Allocation is the only mutation in the whole engine. Once modes are
/// built they are immutable and safe to share across threads.
#[derive(Debug)]
pub struct SeedRegistry {
    token: u64,
    next: u32,
}

impl SeedRegistry {
    pub fn new() -> Self {
        SeedRegistry {
            token: NEXT_REGISTRY_TOKEN.fetch_add(1, Ordering::Relaxed),
            next: 0,
        }
    }

    pub(crate) fn alloc(&mut self) -> SeedId {
        let id = SeedId(self.next);
        self.next = self
            .next
            .checked_add(1)
            .expect("seed registry exhausted");
        id
    }

    /// Number of seeds allocated so far.
    pub fn seed_count(&self) -> usize {
        self.next as usize
    }

    pub(crate) fn token(&self) -> u64 {
        self.token
    }
}

impl Default for SeedRegistry {
    fn default() -> Self {
        Self::new()
    }
}

/// A linear form over seed quadratures: the Heisenberg representation of one
/// quadrature (x or p) of one beam.
///
/// Terms are kept sorted by seed with no duplicates and no explicit zeros;
/// an absent seed has coefficient 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureForm {
    token: u64,
    terms: Vec<(SeedId, f64)>,
}

impl QuadratureForm {
    pub(crate) fn from_terms(token: u64, mut terms: Vec<(SeedId, f64)>) -> Self {
        terms.sort_by_key(|&(s, _)| s);
        terms.retain(|&(_, c)| c != 0.0);
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(terms.iter().all(|&(_, c)| c.is_finite()));
        QuadratureForm { token, terms }
    }

    pub(crate) fn unit(token: u64, seed: SeedId) -> Self {
        QuadratureForm {
            token,
            terms: vec![(seed, 1.0)],
        }
    }

    pub(crate) fn token(&self) -> u64 {
        self.token
    }

    /// Coefficient of `seed` (0 when absent).
    pub fn coefficient(&self, seed: SeedId) -> f64 {
        match self.terms.binary_search_by_key(&seed, |&(s, _)| s) {
            Ok(i) => self.terms[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn terms(&self) -> &[(SeedId, f64)] {
        &self.terms
    }

    /// The form scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        QuadratureForm::from_terms(
            self.token,
            self.terms.iter().map(|&(s, c)| (s, factor * c)).collect(),
        )
    }

    /// `alpha * f + beta * g`.
    pub fn combine(alpha: f64, f: &Self, beta: f64, g: &Self) -> Result<Self> {
        if f.token != g.token {
            return Err(Error::RegistryMismatch);
        }
        let mut terms = Vec::with_capacity(f.terms.len() + g.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < f.terms.len() || j < g.terms.len() {
            match (f.terms.get(i), g.terms.get(j)) {
                (Some(&(sf, cf)), Some(&(sg, cg))) => {
                    if sf == sg {
                        terms.push((sf, alpha * cf + beta * cg));
                        i += 1;
                        j += 1;
                    } else if sf < sg {
                        terms.push((sf, alpha * cf));
                        i += 1;
                    } else {
                        terms.push((sg, beta * cg));
                        j += 1;
                    }
                }
                (Some(&(sf, cf)), None) => {
                    terms.push((sf, alpha * cf));
                    i += 1;
                }
                (None, Some(&(sg, cg))) => {
                    terms.push((sg, beta * cg));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Ok(QuadratureForm::from_terms(f.token, terms))
    }

    fn dot(&self, other: &Self) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.terms.len() && j < other.terms.len() {
            let (si, ci) = self.terms[i];
            let (sj, cj) = other.terms[j];
            if si == sj {
                acc += ci * cj;
                i += 1;
                j += 1;
            } else if si < sj {
                i += 1;
            } else {
                j += 1;
            }
        }
        acc
    }

    /// Evaluate the form on concrete seed-quadrature draws.
    pub fn evaluate(&self, draws: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(s, c)| c * draws[s.index()])
            .sum()
    }
}

/// Second moment of two quadrature forms.
///
/// Both forms in the same sector (x with x, or p with p): `1/4 * Σ f_i g_i`.
/// Forms in opposite sectors are uncorrelated and the moment is 0.
pub fn second_moment(f: &QuadratureForm, g: &QuadratureForm, same_sector: bool) -> Result<f64> {
    if f.token != g.token {
        return Err(Error::RegistryMismatch);
    }
    if !same_sector {
        return Ok(0.0);
    }
    Ok(VACUUM_VARIANCE * f.dot(g))
}

/// Paired x/p quadrature forms of one beam.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalMode {
    pub x: QuadratureForm,
    pub p: QuadratureForm,
}

impl OpticalMode {
    /// ⟨x_self x_other⟩
    pub fn moment_xx(&self, other: &Self) -> Result<f64> {
        second_moment(&self.x, &other.x, true)
    }

    /// ⟨p_self p_other⟩
    pub fn moment_pp(&self, other: &Self) -> Result<f64> {
        second_moment(&self.p, &other.p, true)
    }

    /// ⟨x_self p_other⟩ (zero by construction, kept for audits)
    pub fn moment_xp(&self, other: &Self) -> Result<f64> {
        second_moment(&self.x, &other.p, false)
    }

    /// ⟨p_self x_other⟩
    pub fn moment_px(&self, other: &Self) -> Result<f64> {
        second_moment(&self.p, &other.x, false)
    }

    pub fn var_x(&self) -> f64 {
        second_moment(&self.x, &self.x, true).expect("same form")
    }

    pub fn var_p(&self) -> f64 {
        second_moment(&self.p, &self.p, true).expect("same form")
    }
}

/// Allocates one fresh vacuum mode: x and p each reference the new seed with
/// coefficient 1.
pub fn vacuum_mode(registry: &mut SeedRegistry) -> OpticalMode {
    let seed = registry.alloc();
    OpticalMode {
        x: QuadratureForm::unit(registry.token(), seed),
        p: QuadratureForm::unit(registry.token(), seed),
    }
}

/// Canonical-commutation audit: `Σ x_i p_i` over shared seeds. Every
/// physical mode must give 1.
pub fn commutator_norm(mode: &OpticalMode) -> f64 {
    debug_assert_eq!(mode.x.token, mode.p.token);
    mode.x.dot(&mode.p)
}
