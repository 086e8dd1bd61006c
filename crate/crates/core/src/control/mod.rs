//! RIS phase selection, surface selection and link metrics.

mod metrics;

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::SVD;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{CMatrix, PhaseVector};
use crate::error::{ConfigError, ControlError};

pub use metrics::{achievable_rate, far_field_power, select_nearest, select_ris, RateResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseAlgorithm {
    /// One-shot pseudoinverse alignment.
    #[default]
    PinvAlign,
    /// Coherent combining; single-antenna links only.
    SisoOptimal,
    /// Uncontrolled reflectarray: i.i.d. uniform phases.
    RandomBaseline,
    /// Uncontrolled reflectarray: all phases zero.
    ZeroBaseline,
}

impl FromStr for PhaseAlgorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "pinv" | "pinv-align" => Ok(PhaseAlgorithm::PinvAlign),
            "siso" | "siso-optimal" => Ok(PhaseAlgorithm::SisoOptimal),
            "random" | "random-baseline" => Ok(PhaseAlgorithm::RandomBaseline),
            "zero" | "zero-baseline" => Ok(PhaseAlgorithm::ZeroBaseline),
            _ => Err(ConfigError::invalid(
                "algorithm",
                format!("unknown phase algorithm `{s}`"),
            )),
        }
    }
}

/// Target effective channel `M` for [`pinv_phases`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PinvTarget {
    /// `Σ_k w_k u_k(G) v_k(H)ᴴ` over the shared dominant modes, with
    /// `w_k ∝ (σ_k(G) σ_k(H))²`.
    #[default]
    DominantModes,
    /// Identity padded or truncated to Nr×Nt, scaled by `‖G‖_F ‖H‖_F`.
    ScaledIdentity,
}

/// Algorithm plus optional quantization to `bits` bits per element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseControl {
    pub algorithm: PhaseAlgorithm,
    pub target: PinvTarget,
    /// `None` keeps phases continuous.
    pub bits: Option<u8>,
}

impl PhaseControl {
    pub fn new(algorithm: PhaseAlgorithm) -> Self {
        PhaseControl {
            algorithm,
            ..Default::default()
        }
    }

    pub fn with_bits(mut self, bits: u8) -> Self {
        self.bits = Some(bits);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.bits {
            Some(0) => Err(ConfigError::invalid("bits", "quantization needs at least 1 bit")),
            Some(b) if b > 32 => Err(ConfigError::invalid(
                "bits",
                format!("{b} bits is beyond f64 resolution"),
            )),
            _ => Ok(()),
        }
    }

    /// Phases for one surface given its `H` (N×Nt), `G` (Nr×N) and the
    /// direct channel. Degenerate channels fall back to random phases.
    pub fn phases<R: Rng + ?Sized>(
        &self,
        h: &CMatrix,
        g: &CMatrix,
        d: &CMatrix,
        rng: &mut R,
    ) -> Result<PhaseVector, ControlError> {
        let n = h.nrows();
        let raw = match self.algorithm {
            PhaseAlgorithm::ZeroBaseline => baseline_phases(Baseline::Zero, n, rng),
            PhaseAlgorithm::RandomBaseline => baseline_phases(Baseline::Random, n, rng),
            PhaseAlgorithm::SisoOptimal => {
                let (hv, gv) = siso_vectors(h, g)?;
                siso_optimal_phases(&hv, &gv)?
            }
            PhaseAlgorithm::PinvAlign => match pinv_phases(h, g, d, self.target) {
                Err(ControlError::SingularPinv(which)) => {
                    log::warn!("pseudoinverse undefined ({which} is zero); using random phases");
                    baseline_phases(Baseline::Random, n, rng)
                }
                other => other?,
            },
        };
        Ok(match self.bits {
            Some(b) => quantize(&raw, b),
            None => raw,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Zero,
    Random,
}

/// Phases of a surface that does not adapt to the channel.
pub fn baseline_phases<R: Rng + ?Sized>(kind: Baseline, n: usize, rng: &mut R) -> PhaseVector {
    match kind {
        Baseline::Zero => PhaseVector::zeros(n),
        Baseline::Random => PhaseVector::new((0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect()),
    }
}

/// Splits a single-antenna pair into `h` (N) and `g` (N).
pub fn siso_vectors(h: &CMatrix, g: &CMatrix) -> Result<(Vec<Complex64>, Vec<Complex64>), ControlError> {
    if h.ncols() != 1 || g.nrows() != 1 || h.nrows() != g.ncols() {
        return Err(ControlError::DimensionError {
            expected: format!("H {n}x1 and G 1x{n}", n = h.nrows()),
            actual: format!("H {}x{} and G {}x{}", h.nrows(), h.ncols(), g.nrows(), g.ncols()),
        });
    }
    Ok((h.iter().copied().collect(), g.iter().copied().collect()))
}

/// `θ_n = −(arg h_n + arg g_n)`, which makes every term of `Σ g_n e^{jθ_n} h_n`
/// real and positive.
pub fn siso_optimal_phases(h: &[Complex64], g: &[Complex64]) -> Result<PhaseVector, ControlError> {
    if h.len() != g.len() {
        return Err(ControlError::DimensionError {
            expected: format!("g of length {}", h.len()),
            actual: format!("length {}", g.len()),
        });
    }
    Ok(PhaseVector::new(
        h.iter().zip(g).map(|(h, g)| -(h.arg() + g.arg())).collect(),
    ))
}

/// Rounds each phase to the nearest of `2^bits` uniform levels.
pub fn quantize(phases: &PhaseVector, bits: u8) -> PhaseVector {
    let levels = 2f64.powi(i32::from(bits));
    let step = 2.0 * PI / levels;
    PhaseVector::new(phases.as_slice().iter().map(|t| (t / step).round() * step).collect())
}

/// Thin SVD with singular triplets sorted by decreasing singular value.
struct Modes {
    u: CMatrix,
    s: Vec<f64>,
    v_t: CMatrix,
    order: Vec<usize>,
}

impl Modes {
    fn of(m: &CMatrix) -> Self {
        let svd = SVD::new(m.clone(), true, true);
        let s: Vec<f64> = svd.singular_values.iter().copied().collect();
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        Modes {
            u: svd.u.expect("requested"),
            s,
            v_t: svd.v_t.expect("requested"),
            order,
        }
    }

    fn largest(&self) -> f64 {
        self.order.first().map_or(0.0, |&i| self.s[i])
    }

    /// Count of singular values above the numerical noise floor.
    fn rank(&self, m: &CMatrix) -> usize {
        let tol = self.largest() * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
        self.s.iter().filter(|&&s| s > tol).count()
    }
}

/// One-shot pseudoinverse phase alignment.
///
/// Forms `X = G⁺ M H⁺` for the target `M` and returns `θ_n = arg X_nn`.
/// Only the diagonal of `X` is evaluated. Single-antenna links delegate to
/// [`siso_optimal_phases`]. The direct channel does not enter the target.
pub fn pinv_phases(h: &CMatrix, g: &CMatrix, d: &CMatrix, target: PinvTarget) -> Result<PhaseVector, ControlError> {
    let n = h.nrows();
    if g.ncols() != n || d.nrows() != g.nrows() || d.ncols() != h.ncols() {
        return Err(ControlError::DimensionError {
            expected: format!("H Nx{nt}, G {nr}xN, D {nr}x{nt}", nt = d.ncols(), nr = d.nrows()),
            actual: format!("H {}x{}, G {}x{}", h.nrows(), h.ncols(), g.nrows(), g.ncols()),
        });
    }
    let (nr, nt) = (g.nrows(), h.ncols());
    if n > 0 && n < nr.max(nt) {
        log::warn!("RIS has {n} elements for a {nr}x{nt} link; pinv alignment is underdetermined");
    }
    if nr == 1 && nt == 1 {
        let (hv, gv) = siso_vectors(h, g)?;
        return siso_optimal_phases(&hv, &gv);
    }
    let mg = Modes::of(g);
    let mh = Modes::of(h);
    if !(mg.largest() > 0.0) {
        return Err(ControlError::SingularPinv("G"));
    }
    if !(mh.largest() > 0.0) {
        return Err(ControlError::SingularPinv("H"));
    }

    let diag: Vec<Complex64> = match target {
        PinvTarget::DominantModes => {
            // G⁺ u_k(G) = v_k(G) / σ_k(G) and v_k(H)ᴴ H⁺ = u_k(H)ᴴ / σ_k(H),
            // so X_nn = Σ_k w_k / (σ_k(G) σ_k(H)) · v_k(G)[n] · conj(u_k(H)[n]).
            let modes = mg.rank(g).min(mh.rank(h));
            let top = mg.largest() * mh.largest();
            (0..n)
                .map(|i| {
                    (0..modes)
                        .map(|k| {
                            let (kg, kh) = (mg.order[k], mh.order[k]);
                            let scale = mg.s[kg] * mh.s[kh] / top;
                            mg.v_t[(kg, i)].conj() * mh.u[(i, kh)].conj() * scale
                        })
                        .sum()
                })
                .collect()
        }
        PinvTarget::ScaledIdentity => {
            let gp = pinv_from(&mg, g);
            let hp = pinv_from(&mh, h);
            let scale = g.norm() * h.norm();
            (0..n)
                .map(|i| (0..nr.min(nt)).map(|j| gp[(i, j)] * hp[(j, i)]).sum::<Complex64>() * scale)
                .collect()
        }
    };
    Ok(PhaseVector::new(diag.iter().map(|x| x.arg()).collect()))
}

fn pinv_from(modes: &Modes, m: &CMatrix) -> CMatrix {
    let tol = modes.largest() * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in modes.s.iter().enumerate() {
        if s > tol {
            let v = modes.v_t.row(k).adjoint();
            let u = modes.u.column(k).adjoint();
            out += v * u * Complex64::new(1.0 / s, 0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::cascade;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im) / 2f64.sqrt()
        })
    }

    fn combined(h: &[Complex64], g: &[Complex64], p: &PhaseVector) -> f64 {
        h.iter()
            .zip(g)
            .zip(p.responses())
            .map(|((h, g), r)| g * r * h)
            .sum::<Complex64>()
            .norm()
    }

    #[test]
    fn siso_real_positive_is_zero_phase() {
        let p = siso_optimal_phases(&[c(1.0, 0.0), c(2.0, 0.0)], &[c(0.5, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn siso_example() {
        let h = [c(1.0, 0.0), c(0.0, 1.0)];
        let g = [c(1.0, 0.0), c(1.0, 0.0)];
        let p = siso_optimal_phases(&h, &g).unwrap();
        assert_relative_eq!(p.as_slice()[0], 0.0);
        assert_relative_eq!(p.as_slice()[1], 1.5 * PI, epsilon = 1e-12);
        assert_relative_eq!(combined(&h, &g, &p), 2.0, epsilon = 1e-12);
        // 16-level grid never beats it
        let step = 2.0 * PI / 16.0;
        for a in 0..16 {
            for b in 0..16 {
                let q = PhaseVector::new(vec![a as f64 * step, b as f64 * step]);
                assert!(combined(&h, &g, &q) <= 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn siso_common_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h: Vec<_> = gaussian(6, 1, &mut rng).iter().copied().collect();
        let g: Vec<_> = gaussian(1, 6, &mut rng).iter().copied().collect();
        let base = combined(&h, &g, &siso_optimal_phases(&h, &g).unwrap());
        let rot = Complex64::from_polar(1.0, 1.234);
        let h2: Vec<_> = h.iter().map(|v| v * rot).collect();
        let again = combined(&h2, &g, &siso_optimal_phases(&h2, &g).unwrap());
        assert_relative_eq!(base, again, epsilon = 1e-12);
        let sum_abs: f64 = h.iter().zip(&g).map(|(h, g)| h.norm() * g.norm()).sum();
        assert_relative_eq!(base, sum_abs, epsilon = 1e-12);
    }

    #[test]
    fn siso_dimension_errors() {
        assert!(matches!(
            siso_optimal_phases(&[c(1.0, 0.0)], &[]),
            Err(ControlError::DimensionError { .. })
        ));
        assert!(matches!(
            siso_vectors(&CMatrix::zeros(4, 2), &CMatrix::zeros(1, 4)),
            Err(ControlError::DimensionError { .. })
        ));
    }

    #[test]
    fn baselines() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(baseline_phases(Baseline::Zero, 4, &mut rng).as_slice(), &[0.0; 4]);
        let a = baseline_phases(Baseline::Random, 8, &mut ChaCha8Rng::seed_from_u64(3));
        let b = baseline_phases(Baseline::Random, 8, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        let big = baseline_phases(Baseline::Random, 100_000, &mut rng);
        let mean = big.as_slice().iter().sum::<f64>() / 1e5;
        assert!((mean - PI).abs() < 0.01 * PI, "mean {mean}");
    }

    #[test]
    fn quantize_levels() {
        let p = PhaseVector::new(vec![0.1, PI / 2.0 + 0.2, 2.0 * PI - 0.05]);
        let q = quantize(&p, 2);
        assert_relative_eq!(q.as_slice()[0], 0.0);
        assert_relative_eq!(q.as_slice()[1], PI / 2.0, epsilon = 1e-12);
        assert_eq!(q.as_slice()[2], 0.0);
        let step = 2.0 * PI / 8.0;
        for &t in quantize(&p, 3).as_slice() {
            assert!(((t / step) - (t / step).round()).abs() < 1e-9);
        }
    }

    #[test]
    fn quantization_loss_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for bits in 1..=4u8 {
            let mut cont = 0.0;
            let mut quant = 0.0;
            for _ in 0..2000 {
                let h: Vec<_> = gaussian(32, 1, &mut rng).iter().copied().collect();
                let g: Vec<_> = gaussian(1, 32, &mut rng).iter().copied().collect();
                let p = siso_optimal_phases(&h, &g).unwrap();
                let full = combined(&h, &g, &p);
                let coarse = combined(&h, &g, &quantize(&p, bits));
                assert!(coarse <= full * (1.0 + 1e-12));
                cont += full;
                quant += coarse;
            }
            let bound = (PI / 2f64.powi(i32::from(bits))).cos();
            assert!(
                quant >= bound * cont * 0.99,
                "bits {bits}: {} < {}",
                quant / cont,
                bound
            );
        }
    }

    #[test]
    fn pinv_siso_delegates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = gaussian(16, 1, &mut rng);
        let g = gaussian(1, 16, &mut rng);
        let d = CMatrix::zeros(1, 1);
        let p = pinv_phases(&h, &g, &d, PinvTarget::DominantModes).unwrap();
        let (hv, gv) = siso_vectors(&h, &g).unwrap();
        let s = siso_optimal_phases(&hv, &gv).unwrap();
        let r1 = achievable_rate(&cascade(&g, &p, &h, &d).unwrap(), 1.0, 1.0).unwrap();
        let r2 = achievable_rate(&cascade(&g, &s, &h, &d).unwrap(), 1.0, 1.0).unwrap();
        assert!((r1 - r2).abs() < 1e-9);
    }

    #[test]
    fn pinv_rank_one_matches_coherent_combining() {
        // G = a bᴴ and H = c eᴴ: the best phases align conj(b_n) c_n.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (a, b) = (gaussian(4, 1, &mut rng), gaussian(32, 1, &mut rng));
        let (cv, e) = (gaussian(32, 1, &mut rng), gaussian(3, 1, &mut rng));
        let g = &a * b.adjoint();
        let h = &cv * e.adjoint();
        let d = CMatrix::zeros(4, 3);
        let p = pinv_phases(&h, &g, &d, PinvTarget::DominantModes).unwrap();
        let got: Complex64 = (0..32)
            .map(|n| b[n].conj() * cv[n] * Complex64::from_polar(1.0, p.as_slice()[n]))
            .sum();
        let best: f64 = (0..32).map(|n| b[n].norm() * cv[n].norm()).sum();
        assert_relative_eq!(got.norm(), best, max_relative = 1e-9);
    }

    #[test]
    fn pinv_outputs_unit_modulus_and_beats_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut pinv_sum, mut rand_sum) = (0.0, 0.0);
        for trial in 0..1000 {
            let (nt, nr, n) = (1 + trial % 4, 1 + (trial / 4) % 4, 16);
            let h = gaussian(n, nt, &mut rng);
            let g = gaussian(nr, n, &mut rng);
            let d = CMatrix::zeros(nr, nt);
            let p = pinv_phases(&h, &g, &d, PinvTarget::DominantModes).unwrap();
            assert_eq!(p.len(), n);
            for r in p.responses() {
                assert!((r.norm() - 1.0).abs() < 1e-12);
            }
            let q = baseline_phases(Baseline::Random, n, &mut rng);
            pinv_sum += achievable_rate(&cascade(&g, &p, &h, &d).unwrap(), 1.0, 1.0).unwrap();
            rand_sum += achievable_rate(&cascade(&g, &q, &h, &d).unwrap(), 1.0, 1.0).unwrap();
        }
        assert!(pinv_sum > rand_sum, "{pinv_sum} vs {rand_sum}");
    }

    #[test]
    fn scaled_identity_target_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = gaussian(8, 2, &mut rng);
        let g = gaussian(2, 8, &mut rng);
        let p = pinv_phases(&h, &g, &CMatrix::zeros(2, 2), PinvTarget::ScaledIdentity).unwrap();
        assert_eq!(p.len(), 8);
    }

    #[test]
    fn zero_channel_is_singular_and_falls_back() {
        let h = CMatrix::zeros(8, 2);
        let g = CMatrix::from_element(2, 8, c(1.0, 0.0));
        let d = CMatrix::zeros(2, 2);
        assert!(matches!(
            pinv_phases(&h, &g, &d, PinvTarget::DominantModes),
            Err(ControlError::SingularPinv("H"))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = PhaseControl::default().phases(&h, &g, &d, &mut rng).unwrap();
        assert_eq!(p.len(), 8);
    }

    #[test]
    fn control_validation_and_parsing() {
        assert!(PhaseControl::default().with_bits(0).validate().is_err());
        assert!(PhaseControl::default().with_bits(3).validate().is_ok());
        assert_eq!("pinv".parse::<PhaseAlgorithm>().unwrap(), PhaseAlgorithm::PinvAlign);
        assert_eq!(
            "random-baseline".parse::<PhaseAlgorithm>().unwrap(),
            PhaseAlgorithm::RandomBaseline
        );
        assert!("best".parse::<PhaseAlgorithm>().is_err());
    }
}
