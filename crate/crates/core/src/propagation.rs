//! Stochastic large-scale propagation: LOS probability, path loss with
//! shadow fading, and random clusters of scatterers.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::PropagationError;
use crate::model::{Environment, Frame, LinkLosMode, Point3, RngStream};

/// LOS component of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub los: bool,
    /// Linear power attenuation `L_LOS`, zero when `los` is false.
    pub attenuation: f64,
    /// Carrier phase `η` in `[0, 2π)`.
    pub phase: f64,
}

impl LinkState {
    pub const fn blocked() -> Self {
        LinkState {
            los: false,
            attenuation: 0.0,
            phase: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scatterer {
    pub position: Point3,
    /// `β ~ CN(0, 1)`
    pub gain: Complex64,
    /// Linear attenuation of the unfolded path through this scatterer.
    pub attenuation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub center: Point3,
    pub scatterers: Vec<Scatterer>,
}

/// Clusters of one link; each scatterer is one propagation path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
}

impl ClusterSet {
    pub fn empty() -> Self {
        ClusterSet::default()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Total number of paths, `Σ_c S_c`.
    pub fn path_count(&self) -> usize {
        self.clusters.iter().map(|c| c.scatterers.len()).sum()
    }

    pub fn scatterers(&self) -> impl Iterator<Item = &Scatterer> {
        self.clusters.iter().flat_map(|c| c.scatterers.iter())
    }

    /// The same scatterers and gains seen on a path from `tx` to a different
    /// `far_end`, with fresh NLOS attenuations (shadowing redrawn).
    pub fn retarget(
        &self,
        tx: Point3,
        far_end: Point3,
        env: &Environment,
        frequency_hz: f64,
        rng: &mut RngStream,
    ) -> Result<ClusterSet, PropagationError> {
        let clusters = self
            .clusters
            .iter()
            .map(|c| {
                let scatterers = c
                    .scatterers
                    .iter()
                    .map(|s| {
                        let d = tx.distance(s.position) + s.position.distance(far_end);
                        Ok(Scatterer {
                            attenuation: path_loss(d, frequency_hz, env, false, rng)?,
                            ..s.clone()
                        })
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Cluster {
                    center: c.center,
                    scatterers,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(ClusterSet { clusters })
    }
}

pub fn los_probability(d: f64, env: &Environment) -> Result<f64, PropagationError> {
    if !(d > 0.0) {
        return Err(PropagationError::NonPositiveDistance(d));
    }
    Ok(env.los_probability.evaluate(d))
}

/// Path loss in dB for a given shadowing realization, no clamping.
pub fn path_loss_db(d: f64, frequency_hz: f64, env: &Environment, los: bool, shadow_db: f64) -> f64 {
    let c = env.coefficients(los);
    c.intercept_db + c.distance_coef * d.log10() + c.frequency_coef * (frequency_hz / 1e9).log10() + shadow_db
}

/// Linear attenuation `10^(-PL/10)` with log-normal shadowing drawn from
/// `rng`. Distances under 1 m are evaluated at 1 m.
pub fn path_loss(
    d: f64,
    frequency_hz: f64,
    env: &Environment,
    los: bool,
    rng: &mut RngStream,
) -> Result<f64, PropagationError> {
    if !(d > 0.0) {
        return Err(PropagationError::NonPositiveDistance(d));
    }
    let d = if d < 1.0 {
        log::warn!("path length {d:.3} m is below the 1 m model floor; clamped");
        1.0
    } else {
        d
    };
    // Always consume one normal so streams stay aligned across sigma settings.
    let z: f64 = rng.sample(StandardNormal);
    let shadow = z * env.coefficients(los).shadow_sigma_db;
    let pl = path_loss_db(d, frequency_hz, env, los, shadow);
    Ok(10f64.powf(-pl / 10.0).min(1.0))
}

fn standard_complex_gaussian(rng: &mut RngStream) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn reflect_above_ground(p: Point3) -> Point3 {
    Point3::new(p.x, p.y, p.z.abs())
}

/// Random clusters between a departing terminal at `tx` (with local frame
/// `departure`) and `far_end`.
///
/// Cluster count is `max(1, Poisson(λ_C))`, scatterers per cluster uniform
/// on `[S_min, S_max]`. Each cluster sits at a departure direction drawn
/// around broadside and a radius uniform on `[1, d_link]`; scatterers share
/// the radius and deviate from the cluster direction by the angular spread.
pub fn draw_clusters(
    tx: Point3,
    departure: &Frame,
    far_end: Point3,
    env: &Environment,
    frequency_hz: f64,
    rng: &mut RngStream,
) -> Result<ClusterSet, PropagationError> {
    let link = tx.distance(far_end);
    if !(link > 0.0) {
        return Err(PropagationError::NonPositiveDistance(link));
    }
    let poisson =
        Poisson::new(env.cluster_intensity).expect("validated environments have a positive cluster intensity");
    let count = (poisson.sample(rng) as usize).max(1);

    let placement = &env.placement;
    let az_half = placement.azimuth_half_width_deg.to_radians();
    let el_half = placement.elevation_half_width_deg.to_radians();
    let spread = placement.angular_spread_deg.to_radians();

    let toward = |az: f64, el: f64, r: f64| -> Point3 {
        let (se, ce) = el.sin_cos();
        let (sa, ca) = az.sin_cos();
        let v = departure.to_global([ce * ca, ce * sa, se]);
        reflect_above_ground(tx.offset(v.map(|c| c * r)))
    };

    let mut clusters = Vec::with_capacity(count);
    for _ in 0..count {
        let paths = rng.random_range(env.min_scatterers..=env.max_scatterers) as usize;
        let az = rng.uniform_in(-az_half, az_half);
        let el = rng.uniform_in(-el_half, el_half);
        let radius = rng.uniform_in(1.0, link);
        let center = toward(az, el, radius);
        let mut scatterers = Vec::with_capacity(paths);
        for _ in 0..paths {
            let s_az = az + rng.uniform_in(-spread, spread);
            let s_el = (el + rng.uniform_in(-spread, spread)).clamp(-FRAC_PI_2, FRAC_PI_2);
            let position = toward(s_az, s_el, radius);
            let unfolded = tx.distance(position) + position.distance(far_end);
            let attenuation = path_loss(unfolded, frequency_hz, env, false, rng)?;
            let gain = standard_complex_gaussian(rng);
            scatterers.push(Scatterer {
                position,
                gain,
                attenuation,
            });
        }
        clusters.push(Cluster { center, scatterers });
    }
    Ok(ClusterSet { clusters })
}

/// Bernoulli LOS draw; when present, LOS path loss and a uniform phase.
pub fn draw_link_state(
    d: f64,
    frequency_hz: f64,
    env: &Environment,
    rng: &mut RngStream,
) -> Result<LinkState, PropagationError> {
    draw_link_state_with(LinkLosMode::Auto, d, frequency_hz, env, rng)
}

/// [`draw_link_state`] with the LOS indicator optionally forced.
pub fn draw_link_state_with(
    mode: LinkLosMode,
    d: f64,
    frequency_hz: f64,
    env: &Environment,
    rng: &mut RngStream,
) -> Result<LinkState, PropagationError> {
    let p = los_probability(d, env)?;
    let los = match mode {
        LinkLosMode::Auto => rng.uniform() < p,
        LinkLosMode::Present => true,
        LinkLosMode::Blocked => false,
    };
    if !los {
        return Ok(LinkState::blocked());
    }
    let attenuation = path_loss(d, frequency_hz, env, true, rng)?;
    let phase = rng.uniform_in(0.0, 2.0 * PI);
    Ok(LinkState {
        los,
        attenuation,
        phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{spawn_rng, LinkTag};
    use approx::assert_relative_eq;

    const F28: f64 = 28e9;

    fn rng(i: u64) -> RngStream {
        spawn_rng(7, i, LinkTag::TxRis(0))
    }

    fn no_shadow(mut env: Environment) -> Environment {
        env.los.shadow_sigma_db = 0.0;
        env.nlos.shadow_sigma_db = 0.0;
        env
    }

    #[test]
    fn umi_los_probability() {
        let env = Environment::street_canyon();
        assert_relative_eq!(los_probability(18.0, &env).unwrap(), 1.0);
        assert_relative_eq!(los_probability(36.0, &env).unwrap(), 0.5 + 0.5 * (-1f64).exp());
        assert_relative_eq!(los_probability(36.0, &env).unwrap(), 0.6839, epsilon = 1e-4);
        assert!(los_probability(1e6, &env).unwrap() < 1e-4);
    }

    #[test]
    fn inh_los_probability() {
        let env = Environment::indoor_office();
        assert_eq!(los_probability(1.0, &env).unwrap(), 1.0);
        assert_relative_eq!(los_probability(5.9, &env).unwrap(), (-1f64).exp());
        assert_relative_eq!(los_probability(39.1, &env).unwrap(), 0.32 * (-1f64).exp());
        assert!(los_probability(1e4, &env).unwrap() < 1e-100);
        assert!(matches!(
            los_probability(0.0, &env),
            Err(PropagationError::NonPositiveDistance(_))
        ));
    }

    #[test]
    fn inh_los_path_loss_reference() {
        let env = no_shadow(Environment::indoor_office());
        let pl = path_loss_db(10.0, F28, &env, true, 0.0);
        assert_relative_eq!(pl, 32.4 + 17.3 + 20.0 * 28f64.log10());
        assert_relative_eq!(pl, 78.643, epsilon = 1e-3);
        let l = path_loss(10.0, F28, &env, true, &mut rng(0)).unwrap();
        assert_relative_eq!(l, 1.3668e-8, max_relative = 1e-3);
        assert_eq!(l, path_loss(10.0, F28, &env, true, &mut rng(1)).unwrap());
    }

    #[test]
    fn doubling_distance_adds_exponent() {
        let env = Environment::indoor_office();
        for los in [true, false] {
            let b = env.coefficients(los).distance_coef;
            let d1 = path_loss_db(13.0, F28, &env, los, 0.0);
            let d2 = path_loss_db(26.0, F28, &env, los, 0.0);
            assert_relative_eq!(d2 - d1, b * 2f64.log10(), epsilon = 1e-12);
        }
    }

    #[test]
    fn sub_meter_distance_clamped() {
        let env = no_shadow(Environment::indoor_office());
        let a = path_loss(0.2, F28, &env, true, &mut rng(0)).unwrap();
        let b = path_loss(1.0, F28, &env, true, &mut rng(0)).unwrap();
        assert_eq!(a, b);
        assert!(path_loss(-1.0, F28, &env, true, &mut rng(0)).is_err());
    }

    #[test]
    fn clusters_are_reproducible_and_valid() {
        let env = Environment::indoor_office();
        let tx = Point3::new(0.0, 25.0, 2.0);
        let far = Point3::new(40.0, 50.0, 2.0);
        for i in 0..200 {
            let a = draw_clusters(tx, &Frame::global(), far, &env, F28, &mut rng(i)).unwrap();
            let b = draw_clusters(tx, &Frame::global(), far, &env, F28, &mut rng(i)).unwrap();
            assert_eq!(a, b);
            assert!(a.cluster_count() >= 1);
            for c in &a.clusters {
                assert!((1..=30).contains(&c.scatterers.len()));
            }
            for s in a.scatterers() {
                assert!(s.position.z >= 0.0);
                assert!(s.attenuation > 0.0 && s.attenuation <= 1.0);
            }
        }
    }

    #[test]
    fn retarget_keeps_positions() {
        let env = Environment::indoor_office();
        let tx = Point3::new(0.0, 25.0, 2.0);
        let set = draw_clusters(
            tx,
            &Frame::global(),
            Point3::new(40.0, 50.0, 2.0),
            &env,
            F28,
            &mut rng(3),
        )
        .unwrap();
        let moved = set
            .retarget(tx, Point3::new(45.0, 45.0, 1.0), &env, F28, &mut rng(4))
            .unwrap();
        assert_eq!(set.path_count(), moved.path_count());
        for (a, b) in set.scatterers().zip(moved.scatterers()) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.gain, b.gain);
        }
    }

    #[test]
    fn near_link_always_los() {
        let env = Environment::indoor_office();
        for i in 0..500 {
            let s = draw_link_state(1.0, F28, &env, &mut rng(i)).unwrap();
            assert!(s.los);
            assert!(s.attenuation > 0.0 && s.attenuation <= 1.0);
            assert!((0.0..2.0 * PI).contains(&s.phase));
        }
    }

    #[test]
    fn blocked_link_is_zero() {
        let env = Environment::indoor_office();
        let s = draw_link_state_with(LinkLosMode::Blocked, 3.0, F28, &env, &mut rng(0)).unwrap();
        assert_eq!(s, LinkState::blocked());
        let s = draw_link_state_with(LinkLosMode::Present, 300.0, F28, &env, &mut rng(0)).unwrap();
        assert!(s.los);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn los_probability_nonincreasing(a in 1.0..500.0f64, b in 1.0..500.0f64) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                for env in [Environment::indoor_office(), Environment::street_canyon()] {
                    let (p_lo, p_hi) = (los_probability(lo, &env).unwrap(), los_probability(hi, &env).unwrap());
                    prop_assert!((0.0..=1.0).contains(&p_lo));
                    prop_assert!(p_hi <= p_lo + 1e-15);
                }
            }

            #[test]
            fn path_loss_decreasing_in_distance_and_frequency(
                d in 1.0..500.0f64, dd in 0.01..100.0f64, f in 1.0..100.0f64, df in 0.01..50.0f64, los: bool
            ) {
                for env in [no_shadow(Environment::indoor_office()), no_shadow(Environment::street_canyon())] {
                    let l = path_loss(d, f * 1e9, &env, los, &mut rng(0)).unwrap();
                    let far = path_loss(d + dd, f * 1e9, &env, los, &mut rng(0)).unwrap();
                    let high = path_loss(d, (f + df) * 1e9, &env, los, &mut rng(0)).unwrap();
                    prop_assert!(far < l);
                    prop_assert!(high < l);
                    prop_assert!(l > 0.0 && l <= 1.0);
                }
            }
        }
    }
}
