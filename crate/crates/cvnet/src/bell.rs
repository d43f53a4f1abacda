//! Photon-number correlators, conditional correlators, and the Bell value.
//!
//! Photon-number rates are reduced to second moments of the measured
//! quadratures through the Gaussian fourth-moment factorization
//! ⟨X²Y²⟩ = ⟨X²⟩⟨Y²⟩ + 2⟨XY⟩². The middle node's amplified beam is an
//! effective classical signal with a single deterministic outcome, so the
//! conditioning on it is trivial and the rates below are unconditioned
//! Gaussian moments.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};

use crate::chain::{build_bell_network, BellNetwork, MeasuredModes};
use crate::elements::{GainParam, SqueezeParam};
use crate::error::{Error, Result};
use crate::quad::{OpticalMode, SeedRegistry};

/// Binary measurement-setting label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Zero,
    One,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::Zero, Setting::One];

    pub fn index(self) -> usize {
        match self {
            Setting::Zero => 0,
            Setting::One => 1,
        }
    }
}

/// Sign outcome of one polarization analyzer port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

/// Default analyzer angles of the first node: 3π/8 for setting 0, π/8 for 1.
pub const DEFAULT_THETAS: [f64; 2] = [3.0 * FRAC_PI_8, FRAC_PI_8];
/// Default analyzer angles of the far node: π/4 for setting 0, 0 for 1.
pub const DEFAULT_VARTHETAS: [f64; 2] = [FRAC_PI_4, 0.0];
/// Default amplifier gain.
pub const DEFAULT_GAIN: f64 = 8.0;

/// Source, amplifier, and analyzer settings for one Bell run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellConfig {
    pub r1: SqueezeParam,
    pub r2: SqueezeParam,
    pub g3: GainParam,
    pub thetas: [f64; 2],
    pub varthetas: [f64; 2],
}

impl BellConfig {
    /// Configuration with the standard analyzer angles.
    pub fn new(r1: SqueezeParam, r2: SqueezeParam, g3: GainParam) -> Self {
        BellConfig {
            r1,
            r2,
            g3,
            thetas: DEFAULT_THETAS,
            varthetas: DEFAULT_VARTHETAS,
        }
    }

    pub fn with_angles(mut self, thetas: [f64; 2], varthetas: [f64; 2]) -> Self {
        self.thetas = thetas;
        self.varthetas = varthetas;
        self
    }

    pub fn theta(&self, x: Setting) -> f64 {
        self.thetas[x.index()]
    }

    pub fn vartheta(&self, z: Setting) -> f64 {
        self.varthetas[z.index()]
    }
}

/// The closed-form ingredients of the analytic rate expressions:
/// Γ1 = cosh 2r1 − 1, Γ2 = cosh 2r1 + (2G3−2)/G3 · e^{−2r2} − 1,
/// s = sinh² 2r1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormInputs {
    pub gamma1: f64,
    pub gamma2: f64,
    pub s: f64,
}

impl ClosedFormInputs {
    pub fn new(r1: SqueezeParam, r2: SqueezeParam, g3: GainParam) -> Self {
        let c1 = (2.0 * r1.value()).cosh();
        let g = g3.value();
        ClosedFormInputs {
            gamma1: c1 - 1.0,
            gamma2: c1 + (2.0 * g - 2.0) / g * (-2.0 * r2.value()).exp() - 1.0,
            s: (2.0 * r1.value()).sinh().powi(2),
        }
    }

    pub fn from_config(config: &BellConfig) -> Self {
        Self::new(config.r1, config.r2, config.g3)
    }
}

/// Analytic conditional correlator −cos 2(θ+ϑ) · s/(s + 2Γ1Γ2).
pub fn correlator_closed_form(inputs: &ClosedFormInputs, angle_sum: f64) -> f64 {
    -(2.0 * angle_sum).cos() * inputs.s / (inputs.s + 2.0 * inputs.gamma1 * inputs.gamma2)
}

/// Analytic Bell value 2√2 · s/(s + 2Γ1Γ2) at the standard analyzer angles.
pub fn bell_closed_form(inputs: &ClosedFormInputs) -> f64 {
    2.0 * SQRT_2 * inputs.s / (inputs.s + 2.0 * inputs.gamma1 * inputs.gamma2)
}

fn rate_of(mm: &MeasuredModes, a: Outcome, c: Outcome) -> f64 {
    let am = match a {
        Outcome::Plus => &mm.a_plus,
        Outcome::Minus => &mm.a_minus,
    };
    let cm = match c {
        Outcome::Plus => &mm.c_plus,
        Outcome::Minus => &mm.c_minus,
    };
    rate_of_modes(am, cm)
}

/// Wick-reduced coincidence rate of two measured beams:
/// `2(⟨x_a x_c⟩² + ⟨p_a p_c⟩² + ⟨x_a p_c⟩² + ⟨p_a x_c⟩²)
///  + (⟨x_a²⟩ + ⟨p_a²⟩ − ½)(⟨x_c²⟩ + ⟨p_c²⟩ − ½)`.
pub(crate) fn rate_of_modes(am: &OpticalMode, cm: &OpticalMode) -> f64 {
    let err = "measured modes share one registry";
    let xx = am.moment_xx(cm).expect(err);
    let pp = am.moment_pp(cm).expect(err);
    let xp = am.moment_xp(cm).expect(err);
    let px = am.moment_px(cm).expect(err);
    let na = am.var_x() + am.var_p() - 0.5;
    let nc = cm.var_x() + cm.var_p() - 0.5;
    2.0 * (xx * xx + pp * pp + xp * xp + px * px) + na * nc
}

/// Coincidence photon-pair rate for outcomes `(a, c)` at settings `(x, z)`.
pub fn photon_pair_rate(net: &BellNetwork, a: Outcome, c: Outcome, x: Setting, z: Setting) -> f64 {
    rate_of(&net.measured(x, z), a, c)
}

/// Conditional sign correlator (R⁺⁺ + R⁻⁻ − R⁺⁻ − R⁻⁺)/ΣR at `(x, z)`.
///
/// A source with r1 = 0 produces no coincidences and the ratio degenerates,
/// reported as `NoDetection`.
pub fn conditional_correlator(net: &BellNetwork, x: Setting, z: Setting) -> Result<f64> {
    if net.config().r1.value() == 0.0 {
        return Err(Error::NoDetection);
    }
    let mm = net.measured(x, z);
    let rpp = rate_of(&mm, Outcome::Plus, Outcome::Plus);
    let rmm = rate_of(&mm, Outcome::Minus, Outcome::Minus);
    let rpm = rate_of(&mm, Outcome::Plus, Outcome::Minus);
    let rmp = rate_of(&mm, Outcome::Minus, Outcome::Plus);
    let sum = rpp + rmm + rpm + rmp;
    if sum <= 0.0 {
        return Err(Error::NoDetection);
    }
    Ok((rpp + rmm - rpm - rmp) / sum)
}

/// All rates, the four conditional correlators, and the Bell combination
/// E00 + E01 + E10 − E11 for one network.
#[derive(Debug, Clone, Copy)]
pub struct CorrelatorTable {
    rates: [[[[f64; 2]; 2]; 2]; 2],
    correlators: [[f64; 2]; 2],
    pub bell: f64,
}

impl CorrelatorTable {
    pub fn rate(&self, a: Outcome, c: Outcome, x: Setting, z: Setting) -> f64 {
        self.rates[x.index()][z.index()][a.index()][c.index()]
    }

    pub fn correlator(&self, x: Setting, z: Setting) -> f64 {
        self.correlators[x.index()][z.index()]
    }
}

/// Evaluate every rate and correlator of the network.
pub fn correlator_table(net: &BellNetwork) -> Result<CorrelatorTable> {
    if net.config().r1.value() == 0.0 {
        return Err(Error::NoDetection);
    }
    let mut rates = [[[[0.0; 2]; 2]; 2]; 2];
    let mut correlators = [[0.0; 2]; 2];
    for x in Setting::ALL {
        for z in Setting::ALL {
            let mm = net.measured(x, z);
            let mut sum = 0.0;
            let mut signed = 0.0;
            for a in Outcome::ALL {
                for c in Outcome::ALL {
                    let r = rate_of(&mm, a, c);
                    rates[x.index()][z.index()][a.index()][c.index()] = r;
                    sum += r;
                    signed += a.sign() * c.sign() * r;
                }
            }
            if sum <= 0.0 {
                return Err(Error::NoDetection);
            }
            correlators[x.index()][z.index()] = signed / sum;
        }
    }
    let bell = correlators[0][0] + correlators[0][1] + correlators[1][0] - correlators[1][1];
    Ok(CorrelatorTable {
        rates,
        correlators,
        bell,
    })
}

/// How to evaluate the Bell value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellMethod {
    /// Closed form at the standard analyzer angles.
    Analytic,
    /// Full moment pipeline through the network rates; honors custom angles.
    Engine,
}

/// Bell value of the configured network.
pub fn bell_value(config: &BellConfig, method: BellMethod) -> Result<f64> {
    if config.r1.value() == 0.0 {
        return Err(Error::NoDetection);
    }
    match method {
        BellMethod::Analytic => Ok(bell_closed_form(&ClosedFormInputs::from_config(config))),
        BellMethod::Engine => {
            let mut registry = SeedRegistry::new();
            let net = build_bell_network(&mut registry, *config)?;
            Ok(correlator_table(&net)?.bell)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn config(r1: f64, r2: f64, g3: f64) -> BellConfig {
        BellConfig::new(
            SqueezeParam::new(r1).unwrap(),
            SqueezeParam::new(r2).unwrap(),
            GainParam::new(g3).unwrap(),
        )
    }

    fn network(cfg: BellConfig) -> BellNetwork {
        let mut reg = SeedRegistry::new();
        build_bell_network(&mut reg, cfg).unwrap()
    }

    #[test]
    fn default_angles() {
        let cfg = config(0.1, 2.0, 8.0);
        assert_abs_diff_eq!(cfg.theta(Setting::Zero), 3.0 * FRAC_PI_8);
        assert_abs_diff_eq!(cfg.theta(Setting::One), FRAC_PI_8);
        assert_abs_diff_eq!(cfg.vartheta(Setting::Zero), FRAC_PI_4);
        assert_abs_diff_eq!(cfg.vartheta(Setting::One), 0.0);
    }

    #[test]
    fn pair_rates_match_closed_forms() {
        // oracle: R^{++} = (sin²(θ+ϑ)·s + Γ1Γ2)/4,
        //         R^{+-} = (cos²(θ+ϑ)·s + Γ1Γ2)/4
        let net = network(config(0.1, 2.0, 8.0));
        let rpp = photon_pair_rate(&net, Outcome::Plus, Outcome::Plus, Setting::Zero, Setting::Zero);
        let rpm = photon_pair_rate(&net, Outcome::Plus, Outcome::Minus, Setting::Zero, Setting::Zero);
        assert_abs_diff_eq!(rpp, 8.91141516273241e-3, epsilon = 1e-12);
        assert_abs_diff_eq!(rpm, 1.74556217600133e-3, epsilon = 1e-12);
    }

    #[test]
    fn rates_are_pairwise_symmetric() {
        let net = network(config(0.4, 1.0, 8.0));
        for x in Setting::ALL {
            for z in Setting::ALL {
                let r = |a, c| photon_pair_rate(&net, a, c, x, z);
                assert_abs_diff_eq!(
                    r(Outcome::Plus, Outcome::Plus),
                    r(Outcome::Minus, Outcome::Minus),
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    r(Outcome::Plus, Outcome::Minus),
                    r(Outcome::Minus, Outcome::Plus),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn conditional_correlator_examples() {
        let net = network(config(0.1, 2.0, 8.0));
        // oracle: (√2/2)·s/(s + 2Γ1Γ2)
        let e00 = conditional_correlator(&net, Setting::Zero, Setting::Zero).unwrap();
        assert_abs_diff_eq!(e00, 0.672409517160757, epsilon = 1e-10);
        // settings (1,1) give θ+ϑ = π/8: same magnitude, opposite sign
        let e11 = conditional_correlator(&net, Setting::One, Setting::One).unwrap();
        assert_abs_diff_eq!(e11, -e00, epsilon = 1e-10);
        // θ+ϑ = π/4 zeroes the correlator
        let cfg = config(0.1, 2.0, 8.0).with_angles([FRAC_PI_8, FRAC_PI_8], [FRAC_PI_8, 0.0]);
        let net = network(cfg);
        assert_abs_diff_eq!(
            conditional_correlator(&net, Setting::Zero, Setting::Zero).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn correlator_matches_closed_form_everywhere() {
        for (r1, r2, g3) in [(0.1, 2.0, 8.0), (0.5, 0.5, 2.0), (1.5, 0.0, 64.0)] {
            let cfg = config(r1, r2, g3);
            let net = network(cfg);
            let inputs = ClosedFormInputs::from_config(&cfg);
            for x in Setting::ALL {
                for z in Setting::ALL {
                    let engine = conditional_correlator(&net, x, z).unwrap();
                    let form =
                        correlator_closed_form(&inputs, cfg.theta(x) + cfg.vartheta(z));
                    assert_abs_diff_eq!(engine, form, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn bell_value_examples() {
        // oracle: 2√2·s/(s+2Γ1Γ2)
        let v = bell_value(&config(0.1, 2.0, 8.0), BellMethod::Analytic).unwrap();
        assert_abs_diff_eq!(v, 2.689638068643028, epsilon = 1e-10);
        assert!(v > 2.0);
        let v = bell_value(&config(2.0, 2.0, 8.0), BellMethod::Analytic).unwrap();
        assert_abs_diff_eq!(v, 0.988627691727169, epsilon = 1e-10);
        assert!(v < 2.0);
        let v = bell_value(&config(0.3, 1.0, 8.0), BellMethod::Analytic).unwrap();
        assert_abs_diff_eq!(v, 2.040029057262209, epsilon = 1e-10);
    }

    #[test]
    fn engine_and_analytic_agree() {
        for (r1, r2, g3) in [
            (0.05, 0.0, 2.0),
            (0.1, 2.0, 8.0),
            (0.7, 1.3, 16.0),
            (2.0, 3.0, 64.0),
        ] {
            let cfg = config(r1, r2, g3);
            let a = bell_value(&cfg, BellMethod::Analytic).unwrap();
            let e = bell_value(&cfg, BellMethod::Engine).unwrap();
            assert_abs_diff_eq!(a, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_squeezing_is_no_detection() {
        let cfg = config(0.0, 2.0, 8.0);
        assert!(matches!(
            bell_value(&cfg, BellMethod::Analytic),
            Err(Error::NoDetection)
        ));
        assert!(matches!(
            bell_value(&cfg, BellMethod::Engine),
            Err(Error::NoDetection)
        ));
        let net = network(cfg);
        assert!(matches!(
            conditional_correlator(&net, Setting::Zero, Setting::Zero),
            Err(Error::NoDetection)
        ));
    }

    #[test]
    fn supremum_is_tsirelson() {
        // r1 → 0, r2 → ∞ drives the ratio to 1 and the value to 2√2
        let v = bell_value(&config(1e-4, 30.0, 8.0), BellMethod::Analytic).unwrap();
        assert!(v > 2.0 * SQRT_2 - 1e-6);
        assert!(v <= 2.0 * SQRT_2 + 1e-12);
    }

    proptest! {
        #[test]
        fn quantum_bound_holds(
            r1 in 1e-3f64..2.0,
            r2 in 0.0f64..3.0,
            g3 in 2.0f64..64.0,
        ) {
            let cfg = config(r1, r2, g3);
            let inputs = ClosedFormInputs::from_config(&cfg);
            prop_assert!(inputs.gamma1 >= 0.0);
            prop_assert!(inputs.gamma2 >= 0.0);
            prop_assert!(inputs.s >= 0.0);
            let v = bell_value(&cfg, BellMethod::Analytic).unwrap();
            prop_assert!(v <= 2.0 * SQRT_2 + 1e-12);
            prop_assert!(v >= 0.0);
        }

        #[test]
        fn engine_matches_analytic(
            r1 in 0.01f64..2.0,
            r2 in 0.0f64..3.0,
            g3 in 2.0f64..64.0,
        ) {
            let cfg = config(r1, r2, g3);
            let a = bell_value(&cfg, BellMethod::Analytic).unwrap();
            let e = bell_value(&cfg, BellMethod::Engine).unwrap();
            prop_assert!((a - e).abs() <= 1e-10, "analytic {a} vs engine {e}");
        }

        #[test]
        fn correlator_depends_only_on_angle_sum(
            r1 in 0.05f64..1.5,
            theta in 0.0f64..std::f64::consts::PI,
            shift in -1.0f64..1.0,
        ) {
            let base = config(r1, 1.0, 8.0);
            let cfg1 = base.with_angles([theta, 0.0], [0.3, 0.0]);
            let cfg2 = base.with_angles([theta - shift, 0.0], [0.3 + shift, 0.0]);
            let n1 = network(cfg1);
            let n2 = network(cfg2);
            let e1 = conditional_correlator(&n1, Setting::Zero, Setting::Zero).unwrap();
            let e2 = conditional_correlator(&n2, Setting::Zero, Setting::Zero).unwrap();
            prop_assert!((e1 - e2).abs() < 1e-10);
            prop_assert!(e1.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn rates_are_nonnegative(
            r1 in 0.0f64..2.0,
            r2 in 0.0f64..3.0,
            g3 in 1.5f64..64.0,
        ) {
            let net = network(config(r1, r2, g3));
            for x in Setting::ALL {
                for z in Setting::ALL {
                    for a in Outcome::ALL {
                        for c in Outcome::ALL {
                            prop_assert!(photon_pair_rate(&net, a, c, x, z) >= -1e-15);
                        }
                    }
                }
            }
        }
    }
}
