use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{GuidanceCue, GuidanceMode};

/// Lowest forward speed a drawn user may walk at.
const MIN_SPEED: f64 = 0.05;

/// Behavioural parameters of the simulated walker user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserModel {
    pub reaction_delay_s: f64,
    /// Turn rate held while a left/right cue is active.
    pub turn_rate_rad_per_s: f64,
    pub heading_noise_std_rad_per_sqrt_s: f64,
    pub speed_mean_m_per_s: f64,
    pub speed_std_m_per_s: f64,
    /// Turn rate per radian of perceived source azimuth.
    pub binaural_gain_per_s: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for UserModel {
    fn default() -> Self {
        Self {
            reaction_delay_s: 0.4,
            turn_rate_rad_per_s: 0.5,
            heading_noise_std_rad_per_sqrt_s: 0.05,
            speed_mean_m_per_s: 0.42,
            speed_std_m_per_s: 0.05,
            binaural_gain_per_s: 0.8,
            seed: 0,
        }
    }
}

impl UserModel {
    /// Noise-free, instantly reacting user walking at exactly `speed`.
    pub fn ideal(speed: f64) -> Self {
        Self {
            reaction_delay_s: 0.0,
            heading_noise_std_rad_per_sqrt_s: 0.0,
            speed_mean_m_per_s: speed,
            speed_std_m_per_s: 0.0,
            ..Self::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("reaction_delay_s", self.reaction_delay_s),
            ("turn_rate_rad_per_s", self.turn_rate_rad_per_s),
            (
                "heading_noise_std_rad_per_sqrt_s",
                self.heading_noise_std_rad_per_sqrt_s,
            ),
            ("speed_std_m_per_s", self.speed_std_m_per_s),
            ("binaural_gain_per_s", self.binaural_gain_per_s),
        ] {
            if !(value >= 0.0) {
                return Err(format!("{name} must be >= 0, got {value}"));
            }
        }
        if !(self.speed_mean_m_per_s > 0.0) {
            return Err(format!(
                "speed_mean_m_per_s must be > 0, got {}",
                self.speed_mean_m_per_s
            ));
        }
        Ok(())
    }
}

/// Turn rate a user applies in response to an active cue.
///
/// Left/right symbols give `+-turn_rate`; a sound source gives a turn
/// proportional to its azimuth, towards it. Mechanical guidance steers the
/// wheels itself, so the user adds nothing.
pub fn cue_response(mode: GuidanceMode, cue: &GuidanceCue, model: &UserModel) -> f64 {
    match (mode, cue) {
        (GuidanceMode::Mechanical, _) | (_, GuidanceCue::None) => 0.0,
        (_, GuidanceCue::Symbol(symbol)) => symbol.turn_sign() * model.turn_rate_rad_per_s,
        // azimuth is positive to the right, yaw rate positive to the left
        (_, GuidanceCue::Target(target)) => -model.binaural_gain_per_s * target.walker_azimuth(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserCommand {
    pub v: f64,
    pub omega: f64,
    /// Heading random-walk increment for this step.
    pub heading_noise: f64,
}

/// A user walking at a constant drawn speed, reacting to cues after a fixed
/// delay. Deterministic for a given model seed.
#[derive(Debug, Clone)]
pub struct SimulatedUser {
    model: UserModel,
    rng: ChaCha8Rng,
    speed: f64,
    pending: VecDeque<(f64, GuidanceCue)>,
    active: GuidanceCue,
}

impl SimulatedUser {
    pub fn new(model: UserModel) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        let speed = Normal::new(model.speed_mean_m_per_s, model.speed_std_m_per_s)
            .map(|d| d.sample(&mut rng))
            .unwrap_or(model.speed_mean_m_per_s)
            .max(MIN_SPEED);
        Self {
            model,
            rng,
            speed,
            pending: VecDeque::new(),
            active: GuidanceCue::None,
        }
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn active_cue(&self) -> &GuidanceCue {
        &self.active
    }

    /// Queues a cue received at `t`; it takes effect after the reaction delay.
    pub fn perceive(&mut self, t: f64, cue: GuidanceCue) {
        self.pending
            .push_back((t + self.model.reaction_delay_s, cue));
    }

    pub fn step(&mut self, mode: GuidanceMode, t: f64, dt: f64) -> UserCommand {
        while let Some((ready, _)) = self.pending.front() {
            if *ready > t + 1e-9 {
                break;
            }
            let (_, cue) = self.pending.pop_front().expect("front exists");
            self.active = cue;
        }
        let omega = cue_response(mode, &self.active, &self.model);
        let sigma = self.model.heading_noise_std_rad_per_sqrt_s;
        let heading_noise = if mode == GuidanceMode::Mechanical || sigma == 0.0 {
            0.0
        } else {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            z * sigma * dt.sqrt()
        };
        UserCommand {
            v: self.speed,
            omega,
            heading_noise,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::guidance::GuidanceSymbol;
    use crate::sound::SoundTarget;

    #[test]
    fn response_rules() {
        let model = UserModel::default();
        let straight = GuidanceCue::Symbol(GuidanceSymbol::Straight);
        assert_eq!(cue_response(GuidanceMode::Haptic, &straight, &model), 0.0);
        let left = GuidanceCue::Symbol(GuidanceSymbol::Left);
        assert_eq!(cue_response(GuidanceMode::Haptic, &left, &model), 0.5);
        assert_eq!(cue_response(GuidanceMode::Acoustic, &left, &model), 0.5);
        assert_eq!(cue_response(GuidanceMode::Mechanical, &left, &model), 0.0);

        let ahead = SoundTarget::from_rendered(
            &Point::zeros(),
            &Point::new(1.2, 0.0),
            &Point::new(1.2, 0.0),
            0.0,
        );
        assert_eq!(
            cue_response(GuidanceMode::Binaural, &GuidanceCue::Target(ahead), &model),
            0.0
        );
        let on_left = SoundTarget::from_rendered(
            &Point::zeros(),
            &Point::new(0.0, 1.2),
            &Point::new(0.0, 1.2),
            0.0,
        );
        let w = cue_response(
            GuidanceMode::Binaural,
            &GuidanceCue::Target(on_left),
            &model,
        );
        assert!((w - 0.8 * std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn reaction_delay_applies() {
        let model = UserModel {
            heading_noise_std_rad_per_sqrt_s: 0.0,
            ..UserModel::default()
        };
        let mut user = SimulatedUser::new(model.with_seed(7));
        user.perceive(0.0, GuidanceCue::Symbol(GuidanceSymbol::Left));
        assert_eq!(user.step(GuidanceMode::Haptic, 0.39, 0.01).omega, 0.0);
        assert_eq!(user.step(GuidanceMode::Haptic, 0.40, 0.01).omega, 0.5);
        user.perceive(0.5, GuidanceCue::None);
        assert_eq!(user.step(GuidanceMode::Haptic, 0.91, 0.01).omega, 0.0);
    }

    #[test]
    fn seeded_users_repeat() {
        let model = UserModel::default();
        let mut a = SimulatedUser::new(model.with_seed(11));
        let mut b = SimulatedUser::new(model.with_seed(11));
        assert_eq!(a.speed(), b.speed());
        for k in 0..100 {
            let t = k as f64 * 0.01;
            assert_eq!(
                a.step(GuidanceMode::Haptic, t, 0.01),
                b.step(GuidanceMode::Haptic, t, 0.01)
            );
        }
        let c = SimulatedUser::new(model.with_seed(12));
        assert_ne!(a.speed(), c.speed());
    }

    #[test]
    fn ideal_user_is_exact() {
        let mut user = SimulatedUser::new(UserModel::ideal(0.42));
        assert_eq!(user.speed(), 0.42);
        let cmd = user.step(GuidanceMode::Haptic, 0.0, 0.01);
        assert_eq!(cmd.heading_noise, 0.0);
        assert!(UserModel {
            speed_mean_m_per_s: 0.0,
            ..UserModel::default()
        }
        .validate()
        .is_err());
    }
}
