//! The optical elements of the chain as linear maps on modes.
//!
//! Sign conventions follow the input–output relations of the sources, the
//! amplifier, and the couplers literally; all observable quantities are
//! sign-insensitive, so tests compare moments rather than coefficients.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::quad::{OpticalMode, QuadratureForm, SeedRegistry};

/// Squeezing parameter r ≥ 0 of a two-mode squeezer; the intensity gain of
/// the underlying four-wave mixer is G = cosh²r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParam(f64);

impl SqueezeParam {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::domain(format!(
                "squeezing parameter must be a finite number >= 0, got {r}"
            )));
        }
        Ok(SqueezeParam(r))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Intensity gain G ≥ 1 of the parametric amplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainParam(f64);

impl GainParam {
    pub fn new(g: f64) -> Result<Self> {
        if !g.is_finite() || g < 1.0 {
            return Err(Error::domain(format!("gain must be >= 1, got {g}")));
        }
        Ok(GainParam(g))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Two-mode squeezer over two fresh seeds (s, v):
///
/// ```text
/// x1 = (e^r x_s + e^-r x_v)/√2     x2 = (e^r x_s − e^-r x_v)/√2
/// p1 = (e^-r p_s + e^r p_v)/√2     p2 = (e^-r p_s − e^r p_v)/√2
/// ```
///
/// The fresh seeds are the EPR superposition basis, so r = 0 is not the
/// identity on seed labels, but the outputs carry exact vacuum statistics.
pub fn two_mode_squeeze(
    registry: &mut SeedRegistry,
    r: SqueezeParam,
) -> (OpticalMode, OpticalMode) {
    let s = registry.alloc();
    let v = registry.alloc();
    let tok = registry.token();
    let ep = FRAC_1_SQRT_2 * r.value().exp();
    let em = FRAC_1_SQRT_2 * (-r.value()).exp();
    let m1 = OpticalMode {
        x: QuadratureForm::from_terms(tok, vec![(s, ep), (v, em)]),
        p: QuadratureForm::from_terms(tok, vec![(s, em), (v, ep)]),
    };
    let m2 = OpticalMode {
        x: QuadratureForm::from_terms(tok, vec![(s, ep), (v, -em)]),
        p: QuadratureForm::from_terms(tok, vec![(s, em), (v, -ep)]),
    };
    (m1, m2)
}

/// Phase-insensitive amplifier with phase-conjugate idler:
/// `x' = √G x_sig + √(G−1) x_idl`, `p' = √G p_sig − √(G−1) p_idl`.
///
/// The second output port is discarded; the seed representation keeps the
/// discarded correlations intact.
pub fn parametric_amplify(
    signal: &OpticalMode,
    idler: &OpticalMode,
    gain: GainParam,
) -> Result<OpticalMode> {
    let g = gain.value();
    let cs = g.sqrt();
    let ci = (g - 1.0).sqrt();
    Ok(OpticalMode {
        x: QuadratureForm::combine(cs, &signal.x, ci, &idler.x)?,
        p: QuadratureForm::combine(cs, &signal.p, -ci, &idler.p)?,
    })
}

/// Beam splitter `√ε·in1 − √(1−ε)·in2`, applied to both sectors.
pub fn beam_split(in1: &OpticalMode, in2: &OpticalMode, transmission: f64) -> Result<OpticalMode> {
    if !transmission.is_finite() || !(0.0..=1.0).contains(&transmission) {
        return Err(Error::domain(format!(
            "transmission must be within [0, 1], got {transmission}"
        )));
    }
    let t = transmission.sqrt();
    let r = (1.0 - transmission).sqrt();
    Ok(OpticalMode {
        x: QuadratureForm::combine(t, &in1.x, -r, &in2.x)?,
        p: QuadratureForm::combine(t, &in1.p, -r, &in2.p)?,
    })
}

/// Half-wave plate plus polarizing splitter mixing a horizontal and a
/// vertical beam at `angle`:
///
/// ```text
/// (+) =  cosθ·mh + sinθ·mv
/// (−) = −sinθ·mh + cosθ·mv
/// ```
pub fn polarization_combine(
    mh: &OpticalMode,
    mv: &OpticalMode,
    angle: f64,
) -> Result<(OpticalMode, OpticalMode)> {
    let (sin, cos) = angle.sin_cos();
    let plus = OpticalMode {
        x: QuadratureForm::combine(cos, &mh.x, sin, &mv.x)?,
        p: QuadratureForm::combine(cos, &mh.p, sin, &mv.p)?,
    };
    let minus = OpticalMode {
        x: QuadratureForm::combine(-sin, &mh.x, cos, &mv.x)?,
        p: QuadratureForm::combine(-sin, &mh.p, cos, &mv.p)?,
    };
    Ok((plus, minus))
}

/// Coefficient comparison between the amplifier channel and the idealized
/// homodyne feed-forward channel it replaces.
///
/// The amplifier applies (√G, √(G−1)) to (signal, conjugated idler); the
/// feed-forward channel applies (K, K) with K = √G. The relative idler
/// deviation √(G−1)/√G → 1 as G → ∞, where the two become equivalent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EoEquivalence {
    /// (√G, √(G−1)) of the amplifier.
    pub pa_coeffs: (f64, f64),
    /// (K, K) of the feed-forward channel under K = √G.
    pub homodyne_coeffs: (f64, f64),
    /// √(G−1)/√G.
    pub idler_deviation: f64,
}

pub fn electro_optic_equivalence(gain: GainParam) -> EoEquivalence {
    let g = gain.value();
    let k = g.sqrt();
    let idler = (g - 1.0).sqrt();
    EoEquivalence {
        pa_coeffs: (k, idler),
        homodyne_coeffs: (k, k),
        idler_deviation: idler / k,
    }
}
