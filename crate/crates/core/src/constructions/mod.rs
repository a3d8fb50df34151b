//! The two map families and the program container they share.

pub mod lemma;
pub mod main_family;
pub mod program;
pub mod times;

use serde::{Deserialize, Serialize};

pub use lemma::{lemma_nds, lemma_phi, lemma_psi, ASequence, ISequence, LemmaParams};
pub use main_family::{
    build_eta_stage, build_g1inf, build_k_interval, build_lambda, build_main_nds,
    build_phi_stage, build_psi_stage, epsilon0, stage_hull, StageParams, StageSpec,
};
pub use program::{BlockProgram, ProgramLayout, Run, Stage, TailPolicy};
pub use times::{block_end, perturbation_times, times_r, times_s};

use crate::blowup::{Atlas, LimitMapBundle};
use crate::error::Result;
use crate::plmap::PLMap;
use crate::rational::{de_q, half, ser_q, Q};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasParams {
    pub depth: usize,
    #[serde(serialize_with = "ser_q", deserialize_with = "de_q")]
    pub rho: Q,
    pub base: u64,
}

impl Default for AtlasParams {
    fn default() -> Self {
        AtlasParams { depth: 12, rho: half(), base: 4 }
    }
}

impl AtlasParams {
    pub fn bundle(&self) -> Result<LimitMapBundle> {
        LimitMapBundle::build(Atlas::build(self.depth, self.rho.clone(), self.base)?)
    }
}

/// Everything needed to rebuild a program deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Recipe {
    Lemma { params: LemmaParams, stages: usize },
    Main { atlas: AtlasParams, params: StageParams },
    /// `φ_{i,n}∘λ_i` followed by `η_i`, cycled.
    G1inf { atlas: AtlasParams, params: StageParams, stage: usize, level: usize },
    /// `f_D` alone.
    Limit { atlas: AtlasParams },
    Tent,
    Identity,
}

impl Recipe {
    /// Builds the program, returning the bundle too when the family has one.
    pub fn build(&self) -> Result<(BlockProgram, Option<LimitMapBundle>)> {
        Ok(match self {
            Recipe::Lemma { params, stages } => (lemma_nds(params, *stages)?, None),
            Recipe::Main { atlas, params } => {
                let b = atlas.bundle()?;
                (build_main_nds(&b, params)?, Some(b))
            }
            Recipe::G1inf { atlas, params, stage, level } => {
                let b = atlas.bundle()?;
                params.validate(b.atlas.depth)?;
                (build_g1inf(&b, params, *stage, *level)?, Some(b))
            }
            Recipe::Limit { atlas } => {
                let b = atlas.bundle()?;
                let mut p = BlockProgram::autonomous("f", b.f.clone());
                p.frontier = b.frontier_intervals();
                p.exact_horizon = Some(b.exact_horizon);
                (p, Some(b))
            }
            Recipe::Tent => (BlockProgram::autonomous("tent", PLMap::tent()), None),
            Recipe::Identity => (BlockProgram::autonomous("identity", PLMap::identity()), None),
        })
    }
}

/// Contents of a program file: the recipe plus its layout for inspection.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProgramFile {
    pub recipe: Recipe,
    pub layout: ProgramLayout,
}
