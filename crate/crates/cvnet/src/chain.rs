//! Assembly of the all-optical entanglement-swapping (AOES) chain and the
//! two-chain polarization Bell network.
//!
//! One chain: two two-mode squeezers produce the pairs (a1, a2) and
//! (a3, a4); the amplifier acts on (a2, a3) with gain G3; the output coupler
//! mixes the amplified beam with a4 at transmission 1/G3. No large-gain
//! approximation is taken anywhere: the residual of the finite-squeezing
//! source survives as an exact seed coefficient.

use crate::bell::{BellConfig, Setting};
use crate::elements::{
    beam_split, parametric_amplify, polarization_combine, two_mode_squeeze, GainParam,
    SqueezeParam,
};
use crate::error::{Error, Result};
use crate::quad::{OpticalMode, SeedId, SeedRegistry};

/// Seeds allocated by one chain, in allocation order.
#[derive(Debug, Clone, Copy)]
pub struct ChainSeeds {
    /// Seed of the first squeezer shared by a1 and a2.
    pub a0: SeedId,
    /// Companion seed of the first squeezer.
    pub v1: SeedId,
    /// Seed of the second squeezer shared by a3 and a4.
    pub v2: SeedId,
    /// Companion seed of the second squeezer.
    pub v3: SeedId,
}

/// All beams of one AOES chain.
#[derive(Debug, Clone)]
pub struct ChainModes {
    pub a1: OpticalMode,
    pub a2: OpticalMode,
    pub a3: OpticalMode,
    pub a4: OpticalMode,
    /// Amplifier output fed to the far node.
    pub a2_amp: OpticalMode,
    /// Final swapped beam held by the far node.
    pub a4_out: OpticalMode,
    pub seeds: ChainSeeds,
}

/// Build one chain: squeezer (r1), squeezer (r2), amplifier (G3), output
/// coupler at transmission 1/G3.
///
/// Requires G3 > 1; at G3 = 1 the coupler would pass the amplified beam
/// through unattenuated and the swap degenerates.
pub fn build_aoes_chain(
    registry: &mut SeedRegistry,
    r1: SqueezeParam,
    r2: SqueezeParam,
    g3: GainParam,
) -> Result<ChainModes> {
    if g3.value() <= 1.0 {
        return Err(Error::domain(format!(
            "g3 must be > 1 to build the swapping chain, got {}",
            g3.value()
        )));
    }
    let base = registry.seed_count() as u32;
    let (a1, a2) = two_mode_squeeze(registry, r1);
    let (a3, a4) = two_mode_squeeze(registry, r2);
    let a2_amp = parametric_amplify(&a2, &a3, g3)?;
    let a4_out = beam_split(&a2_amp, &a4, 1.0 / g3.value())?;
    Ok(ChainModes {
        a1,
        a2,
        a3,
        a4,
        a2_amp,
        a4_out,
        seeds: ChainSeeds {
            a0: SeedId::new(base),
            v1: SeedId::new(base + 1),
            v2: SeedId::new(base + 2),
            v3: SeedId::new(base + 3),
        },
    })
}

/// The four homodyne-measured beams for one pair of polarizer settings.
#[derive(Debug, Clone)]
pub struct MeasuredModes {
    pub a_plus: OpticalMode,
    pub a_minus: OpticalMode,
    pub c_plus: OpticalMode,
    pub c_minus: OpticalMode,
}

/// Two independent AOES chains feeding the polarization analyzers of the
/// end nodes. The first node holds the second chain's source beam
/// (horizontal) and the first chain's (vertical); the far node holds the
/// two swapped beams in the same arrangement.
#[derive(Debug)]
pub struct BellNetwork {
    a_chain: ChainModes,
    b_chain: ChainModes,
    config: BellConfig,
    seed_count: usize,
}

/// Build the full two-chain network for a Bell run. Both chains share the
/// registry but draw disjoint seeds.
pub fn build_bell_network(registry: &mut SeedRegistry, config: BellConfig) -> Result<BellNetwork> {
    let a_chain = build_aoes_chain(registry, config.r1, config.r2, config.g3)?;
    let b_chain = build_aoes_chain(registry, config.r1, config.r2, config.g3)?;
    Ok(BellNetwork {
        a_chain,
        b_chain,
        config,
        seed_count: registry.seed_count(),
    })
}

impl BellNetwork {
    pub fn config(&self) -> &BellConfig {
        &self.config
    }

    pub fn a_chain(&self) -> &ChainModes {
        &self.a_chain
    }

    pub fn b_chain(&self) -> &ChainModes {
        &self.b_chain
    }

    /// Seeds allocated when the network was built (for sampling).
    pub(crate) fn seed_count(&self) -> usize {
        self.seed_count
    }

    /// The (+, −) analyzer outputs at the first node for setting `x`.
    pub fn analyzer_a(&self, x: Setting) -> (OpticalMode, OpticalMode) {
        polarization_combine(&self.b_chain.a1, &self.a_chain.a1, self.config.theta(x))
            .expect("network modes share one registry")
    }

    /// The (+, −) analyzer outputs at the far node for setting `z`.
    pub fn analyzer_c(&self, z: Setting) -> (OpticalMode, OpticalMode) {
        polarization_combine(
            &self.a_chain.a4_out,
            &self.b_chain.a4_out,
            self.config.vartheta(z),
        )
        .expect("network modes share one registry")
    }

    /// All four measured beams for the setting pair `(x, z)`.
    pub fn measured(&self, x: Setting, z: Setting) -> MeasuredModes {
        let (a_plus, a_minus) = self.analyzer_a(x);
        let (c_plus, c_minus) = self.analyzer_c(z);
        MeasuredModes {
            a_plus,
            a_minus,
            c_plus,
            c_minus,
        }
    }
}
