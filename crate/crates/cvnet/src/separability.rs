//! Two-mode covariance extraction and the EPR-variance separability test.
//!
//! The test forms the weighted combinations û = a·x_A − sgn(c1)·x_B/a and
//! v̂ = a·p_A − sgn(c2)·p_B/a with weight a² = √((m1−¼)/(n1−¼)); every
//! separable state obeys ⟨û²⟩ + ⟨v̂²⟩ ≥ a²/2 + 1/(2a²), so a negative margin
//! certifies entanglement.

use crate::elements::{GainParam, SqueezeParam};
use crate::error::{Error, Result};
use crate::quad::{OpticalMode, VACUUM_VARIANCE};

/// The six independent entries of the 4×4 two-mode correlation matrix
/// (vacuum units 1/4): diag(n1, n2, m1, m2) with x- and p-sector
/// cross-covariances c1, c2 on the antidiagonal blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceBlock {
    pub n1: f64,
    pub n2: f64,
    pub m1: f64,
    pub m2: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Outcome of the separability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuanReport {
    /// Weight a² of the EPR-like combinations.
    pub a_sq: f64,
    pub u_var: f64,
    pub v_var: f64,
    /// Separable bound a²/2 + 1/(2a²).
    pub bound: f64,
    /// u_var + v_var − bound.
    pub margin: f64,
    pub separable: bool,
}

/// Tolerance absorbing rounding at the separability boundary.
const MARGIN_TOL: f64 = 1e-12;

/// Extract the two-mode correlation block of `(a, b)` from engine moments.
pub fn correlation_block(a: &OpticalMode, b: &OpticalMode) -> Result<CovarianceBlock> {
    Ok(CovarianceBlock {
        n1: a.moment_xx(a)?,
        n2: a.moment_pp(a)?,
        m1: b.moment_xx(b)?,
        m2: b.moment_pp(b)?,
        c1: a.moment_xx(b)?,
        c2: a.moment_pp(b)?,
    })
}

/// Evaluate the EPR-variance test on a correlation block.
///
/// Errors with `CriterionUndefined` when a marginal variance does not exceed
/// the vacuum level, which makes the weight a² degenerate.
pub fn duan_margin(block: &CovarianceBlock) -> Result<DuanReport> {
    let q = VACUUM_VARIANCE;
    let weight_defined = block.n1 > q && block.m1 > q;
    if !weight_defined {
        return Err(Error::CriterionUndefined);
    }
    let a_sq = ((block.m1 - q) / (block.n1 - q)).sqrt();
    let sgn = |c: f64| if c < 0.0 { -1.0 } else { 1.0 };
    let u_var = a_sq * block.n1 + block.m1 / a_sq - 2.0 * sgn(block.c1) * block.c1;
    let v_var = a_sq * block.n2 + block.m2 / a_sq - 2.0 * sgn(block.c2) * block.c2;
    let bound = 0.5 * a_sq + 0.5 / a_sq;
    let margin = u_var + v_var - bound;
    Ok(DuanReport {
        a_sq,
        u_var,
        v_var,
        bound,
        margin,
        separable: margin >= -MARGIN_TOL,
    })
}

/// Factored closed form whose sign predicts the separability of the source
/// mode paired with the amplified mode:
///
/// ```text
/// (cosh 2r1 − 1) · (G3(cosh 2r2 − 1) − (cosh 2r2 + 1))
/// ```
///
/// Its magnitude is not on the same scale as the margin; only the sign is
/// contractual.
pub fn lemma1_sign(r1: SqueezeParam, r2: SqueezeParam, g3: GainParam) -> f64 {
    let c1 = (2.0 * r1.value()).cosh();
    let c2 = (2.0 * r2.value()).cosh();
    (c1 - 1.0) * (g3.value() * (c2 - 1.0) - (c2 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_aoes_chain;
    use crate::quad::SeedRegistry;
    use approx::assert_abs_diff_eq;

    fn chain_block(r1: f64, r2: f64, g3: f64) -> (CovarianceBlock, CovarianceBlock) {
        let mut reg = SeedRegistry::new();
        let chain = build_aoes_chain(
            &mut reg,
            SqueezeParam::new(r1).unwrap(),
            SqueezeParam::new(r2).unwrap(),
            GainParam::new(g3).unwrap(),
        )
        .unwrap();
        (
            correlation_block(&chain.a1, &chain.a2_amp).unwrap(),
            correlation_block(&chain.a2_amp, &chain.a4).unwrap(),
        )
    }

    #[test]
    fn source_amplifier_block_matches_closed_forms() {
        // oracle: n = cosh(2r1)/4, m = [G cosh(2r1) + (G−1) cosh(2r2)]/4,
        //         c1 = −c2 = √G sinh(2r1)/4
        let (block, _) = chain_block(0.5, 0.5, 8.0);
        assert_abs_diff_eq!(block.n1, 0.385770158703811, epsilon = 1e-12);
        assert_abs_diff_eq!(block.n2, block.n1, epsilon = 1e-15);
        assert_abs_diff_eq!(block.m1, 5.786552380557164, epsilon = 1e-12);
        assert_abs_diff_eq!(block.m2, block.m1, epsilon = 1e-15);
        assert_abs_diff_eq!(block.c1, 0.830992733284057, epsilon = 1e-12);
        assert_abs_diff_eq!(block.c2, -block.c1, epsilon = 1e-15);
    }

    #[test]
    fn unsqueezed_source_is_uncorrelated() {
        let (block, _) = chain_block(0.0, 0.7, 4.0);
        assert_abs_diff_eq!(block.c1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(block.c2, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn margin_matches_direct_evaluation() {
        // oracle (direct evaluation of the EPR-variance combinations):
        // a² = 6.385832806910794, u = v = 1.707632963980543,
        // bound = 3.271214726496191, margin = 0.144051201464896
        let (block, _) = chain_block(0.5, 0.5, 8.0);
        let rep = duan_margin(&block).unwrap();
        assert_abs_diff_eq!(rep.a_sq, 6.385832806910794, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.u_var, 1.707632963980543, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.v_var, rep.u_var, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.bound, 3.271214726496191, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.margin, 0.144051201464896, epsilon = 1e-9);
        assert!(rep.separable);
        // algebraic cross-check: for symmetric blocks the margin collapses
        // to 4(√((n−¼)(m−¼)) − |c|)
        let alt = 4.0 * (((block.n1 - 0.25) * (block.m1 - 0.25)).sqrt() - block.c1.abs());
        assert_abs_diff_eq!(rep.margin, alt, epsilon = 1e-12);
    }

    #[test]
    fn unit_gain_pair_is_entangled() {
        // with G3 = 1 the amplifier is the identity and the pair is the raw
        // EPR pair; oracle margin = cosh(2r)−1−2·(sinh(2r)/2) evaluated
        // directly: −0.632120558828558
        let mut reg = SeedRegistry::new();
        let (a1, a2) = crate::elements::two_mode_squeeze(
            &mut reg,
            SqueezeParam::new(0.5).unwrap(),
        );
        let block = correlation_block(&a1, &a2).unwrap();
        let rep = duan_margin(&block).unwrap();
        assert_abs_diff_eq!(rep.a_sq, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.margin, -0.632120558828558, epsilon = 1e-9);
        assert!(!rep.separable);
    }

    #[test]
    fn product_state_is_separable() {
        let block = CovarianceBlock {
            n1: 0.4,
            n2: 0.4,
            m1: 0.4,
            m2: 0.4,
            c1: 0.0,
            c2: 0.0,
        };
        let rep = duan_margin(&block).unwrap();
        assert_abs_diff_eq!(rep.a_sq, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.u_var, 0.8, epsilon = 1e-15);
        assert!(rep.margin >= 0.0);
        assert!(rep.separable);
    }

    #[test]
    fn degenerate_block_is_rejected() {
        let block = CovarianceBlock {
            n1: 0.25,
            n2: 0.25,
            m1: 0.4,
            m2: 0.4,
            c1: 0.0,
            c2: 0.0,
        };
        assert!(matches!(duan_margin(&block), Err(Error::CriterionUndefined)));
    }

    #[test]
    fn lemma1_sign_examples() {
        let r = |v| SqueezeParam::new(v).unwrap();
        let g = |v| GainParam::new(v).unwrap();
        // oracle: (cosh1−1)(8(cosh1−1)−(cosh1+1))
        assert_abs_diff_eq!(
            lemma1_sign(r(0.5), r(0.5), g(8.0)),
            0.978394761748810,
            epsilon = 1e-9
        );
        // G3 = 1 collapses to −2(cosh 2r1 − 1)
        assert_abs_diff_eq!(
            lemma1_sign(r(0.5), r(0.7), g(1.0)),
            -2.0 * (1.0f64.cosh() - 1.0),
            epsilon = 1e-12
        );
        assert_eq!(lemma1_sign(r(0.0), r(0.7), g(4.0)), 0.0);
    }

    #[test]
    fn margin_sign_agrees_with_factored_form_on_grid() {
        for g3 in [2.0, 4.0, 8.0, 16.0] {
            for i in 1..=8 {
                for j in 1..=8 {
                    let r1 = 0.25 * i as f64;
                    let r2 = 0.25 * j as f64;
                    let (block, _) = chain_block(r1, r2, g3);
                    let margin = duan_margin(&block).unwrap().margin;
                    let sign = lemma1_sign(
                        SqueezeParam::new(r1).unwrap(),
                        SqueezeParam::new(r2).unwrap(),
                        GainParam::new(g3).unwrap(),
                    );
                    if sign != 0.0 {
                        assert_eq!(
                            margin.signum(),
                            sign.signum(),
                            "sign mismatch at r1={r1} r2={r2} g3={g3}: margin={margin}, factored={sign}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn extracted_blocks_are_physical() {
        // marginal variances at or above the vacuum level, cross terms
        // bounded by Cauchy-Schwarz
        for g3 in [2.0, 8.0] {
            for i in 1..=4 {
                for j in 1..=4 {
                    let (first, second) = chain_block(0.5 * i as f64, 0.5 * j as f64, g3);
                    for block in [first, second] {
                        assert!(block.n1 >= 0.25 - 1e-15 && block.n2 >= 0.25 - 1e-15);
                        assert!(block.m1 >= 0.25 - 1e-15 && block.m2 >= 0.25 - 1e-15);
                        assert!(block.c1.abs() <= (block.n1 * block.m1).sqrt() + 1e-12);
                        assert!(block.c2.abs() <= (block.n2 * block.m2).sqrt() + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn margin_invariant_under_sector_exchange() {
        // exchanging the x and p sectors of a symmetric block leaves the
        // report unchanged
        let (block, _) = chain_block(0.9, 1.3, 8.0);
        let swapped = CovarianceBlock {
            n1: block.n2,
            n2: block.n1,
            m1: block.m2,
            m2: block.m1,
            c1: block.c2,
            c2: block.c1,
        };
        let a = duan_margin(&block).unwrap();
        let b = duan_margin(&swapped).unwrap();
        assert_abs_diff_eq!(a.margin, b.margin, epsilon = 1e-12);
        assert_abs_diff_eq!(a.u_var, b.v_var, epsilon = 1e-12);
    }

    #[test]
    fn amplified_and_far_pair_is_separable_on_grid() {
        // the amplified beam paired with the second source's kept arm stays
        // separable for every tested parameter combination
        for g3 in [2.0, 4.0, 8.0, 16.0] {
            for i in 1..=8 {
                for j in 1..=8 {
                    let (_, block) = chain_block(0.25 * i as f64, 0.25 * j as f64, g3);
                    let rep = duan_margin(&block).unwrap();
                    assert!(
                        rep.separable,
                        "unexpected entanglement at r1={} r2={} g3={g3}: margin={}",
                        0.25 * i as f64,
                        0.25 * j as f64,
                        rep.margin
                    );
                }
            }
        }
    }
}
