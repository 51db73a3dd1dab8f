use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rcac::{Parameterization, RcacHyperparams, RcacLoop};

/// The five adaptive loops, in log order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoopId {
    Pitch,
    Roll,
    RollRate,
    PitchRate,
    YawRate,
}

impl LoopId {
    pub const ALL: [LoopId; 5] = [
        LoopId::Pitch,
        LoopId::Roll,
        LoopId::RollRate,
        LoopId::PitchRate,
        LoopId::YawRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LoopId::Pitch => "pitch",
            LoopId::Roll => "roll",
            LoopId::RollRate => "roll_rate",
            LoopId::PitchRate => "pitch_rate",
            LoopId::YawRate => "yaw_rate",
        }
    }
}

/// Default bound on every loop's RCAC integrator state.
pub const DEFAULT_INTEGRATOR_CLAMP: f64 = 0.1;

fn table_loop(p0: f64, r_u: f64) -> RcacHyperparams {
    // z is setpoint minus measurement, so a positive adaptive input lowers z.
    RcacHyperparams::new(p0, r_u, Parameterization::PI, 0.004)
        .with_sigma(-1.0)
        .with_integrator_clamp(DEFAULT_INTEGRATOR_CLAMP)
}

/// Per-loop hyperparameters. Defaults for the four tabulated loops are
/// (P0, R_u) = (0.01, 0.001) pitch, (1, 0.001) roll, (1000, 0.1) pitch rate
/// and (0.001, 0.1) roll rate; yaw rate reuses the roll-rate row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "AdaptiveConfig::default_pitch")]
    pub pitch: RcacHyperparams,
    #[serde(default = "AdaptiveConfig::default_roll")]
    pub roll: RcacHyperparams,
    #[serde(default = "AdaptiveConfig::default_roll_rate")]
    pub roll_rate: RcacHyperparams,
    #[serde(default = "AdaptiveConfig::default_pitch_rate")]
    pub pitch_rate: RcacHyperparams,
    #[serde(default = "AdaptiveConfig::default_yaw_rate")]
    pub yaw_rate: RcacHyperparams,
}

impl AdaptiveConfig {
    pub fn default_pitch() -> RcacHyperparams {
        table_loop(0.01, 0.001)
    }

    pub fn default_roll() -> RcacHyperparams {
        table_loop(1.0, 0.001)
    }

    pub fn default_pitch_rate() -> RcacHyperparams {
        table_loop(1000.0, 0.1)
    }

    pub fn default_roll_rate() -> RcacHyperparams {
        table_loop(0.001, 0.1)
    }

    pub fn default_yaw_rate() -> RcacHyperparams {
        table_loop(0.001, 0.1)
    }

    pub fn with_enabled(mut self, enabled: bool) -> Self {
        self.enabled = enabled;
        self
    }

    pub fn loop_params(&self, id: LoopId) -> &RcacHyperparams {
        match id {
            LoopId::Pitch => &self.pitch,
            LoopId::Roll => &self.roll,
            LoopId::RollRate => &self.roll_rate,
            LoopId::PitchRate => &self.pitch_rate,
            LoopId::YawRate => &self.yaw_rate,
        }
    }

    pub fn loop_params_mut(&mut self, id: LoopId) -> &mut RcacHyperparams {
        match id {
            LoopId::Pitch => &mut self.pitch,
            LoopId::Roll => &mut self.roll,
            LoopId::RollRate => &mut self.roll_rate,
            LoopId::PitchRate => &mut self.pitch_rate,
            LoopId::YawRate => &mut self.yaw_rate,
        }
    }
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            enabled: false,
            pitch: Self::default_pitch(),
            roll: Self::default_roll(),
            roll_rate: Self::default_roll_rate(),
            pitch_rate: Self::default_pitch_rate(),
            yaw_rate: Self::default_yaw_rate(),
        }
    }
}

/// The RCAC instances feeding the attitude and rate loops.
///
/// When disabled every contribution is exactly `0.0` and no loop is stepped.
#[derive(Clone, Debug)]
pub struct AdaptiveSet {
    pub enabled: bool,
    /// Test hook: after each update the gains are forced back to zero.
    pub pin_zero: bool,
    loops: [RcacLoop; 5],
}

impl AdaptiveSet {
    /// Builds the loops; every loop's sample time is overridden by `sample_time`.
    pub fn new(config: &AdaptiveConfig, sample_time: f64) -> Result<Self> {
        let build = |id: LoopId| {
            let mut p = config.loop_params(id).clone();
            p.sample_time = sample_time;
            RcacLoop::new(p)
        };
        Ok(AdaptiveSet {
            enabled: config.enabled,
            pin_zero: false,
            loops: [
                build(LoopId::Pitch)?,
                build(LoopId::Roll)?,
                build(LoopId::RollRate)?,
                build(LoopId::PitchRate)?,
                build(LoopId::YawRate)?,
            ],
        })
    }

    pub fn disabled(sample_time: f64) -> Self {
        Self::new(&AdaptiveConfig::default(), sample_time).expect("default adaptive config is valid")
    }

    fn index(id: LoopId) -> usize {
        LoopId::ALL.iter().position(|x| *x == id).expect("listed")
    }

    pub fn get(&self, id: LoopId) -> &RcacLoop {
        &self.loops[Self::index(id)]
    }

    pub fn get_mut(&mut self, id: LoopId) -> &mut RcacLoop {
        &mut self.loops[Self::index(id)]
    }

    /// Returns the loop's control for this tick and feeds it the error `z`
    /// to prepare the next one.
    pub fn contribution(&mut self, id: LoopId, z: f64) -> Result<f64> {
        if !self.enabled {
            return Ok(0.0);
        }
        let pin = self.pin_zero;
        let lp = self.get_mut(id);
        let out = lp.output();
        lp.step(z, 0.0)?;
        if pin {
            let zeros = vec![0.0; lp.gains().len()];
            lp.state_mut().force_gains(&zeros);
        }
        Ok(out)
    }

    /// Current gain vectors, padded to four entries (K_p, K_i, K_d, K_ff).
    pub fn padded_gains(&self) -> [[f64; 4]; 5] {
        let mut out = [[0.0; 4]; 5];
        for (row, lp) in out.iter_mut().zip(self.loops.iter()) {
            for (dst, src) in row.iter_mut().zip(lp.gains().iter()) {
                *dst = *src;
            }
        }
        out
    }

    /// Sum over loops of the Euclidean gain norms.
    pub fn total_gain_norm(&self) -> f64 {
        self.loops.iter().map(|lp| lp.gains().norm()).sum()
    }
}
