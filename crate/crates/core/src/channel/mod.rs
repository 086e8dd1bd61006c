//! Channel matrices of one realization: Tx-RIS `H` (N×Nt), RIS-Rx `G`
//! (Nr×N) and direct `D` (Nr×Nt), the RIS response `Φ`, and the composite
//! channel `C = Σ_k G_k Φ_k H_k + D`.

mod dump;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ChannelError, Result};
use crate::model::{spawn_rng, Aperture, Frame, LinkLosMode, LinkTag, Point3, RxOrientation, ValidatedConfig};
use crate::propagation::{draw_clusters, draw_link_state_with, ClusterSet, LinkState};
use crate::spatial::{element_gain, geometry_relation, response};

pub use dump::{read_matrix, write_matrix, DumpManifest, DumpRealization, MatrixEntry};

pub type CMatrix = DMatrix<Complex64>;

/// RIS phase shifts in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    /// Wraps every phase into `[0, 2π)`.
    pub fn new(phases: Vec<f64>) -> Self {
        PhaseVector(phases.into_iter().map(wrap_phase).collect())
    }

    pub fn zeros(n: usize) -> Self {
        PhaseVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `e^{jθ_n}` for each element.
    pub fn responses(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.0.iter().map(|&t| Complex64::from_polar(1.0, t))
    }
}

pub(crate) fn wrap_phase(t: f64) -> f64 {
    let w = t.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Diagonal `Φ = diag(e^{jθ_1}, …, e^{jθ_N})`.
pub fn phase_matrix(phases: &PhaseVector) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(phases.len(), phases.responses()))
}

fn check_dims(what: &'static str, m: &CMatrix, rows: usize, cols: usize) -> Result<(), ChannelError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(ChannelError::DimensionMismatch {
            what,
            expected_rows: rows,
            expected_cols: cols,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// `G Φ H + D` for a single surface.
pub fn cascade(g: &CMatrix, phases: &PhaseVector, h: &CMatrix, d: &CMatrix) -> Result<CMatrix, ChannelError> {
    let n = phases.len();
    check_dims("G", g, d.nrows(), n)?;
    check_dims("H", h, n, d.ncols())?;
    let mut scaled = g.clone();
    for (mut col, r) in scaled.column_iter_mut().zip(phases.responses()) {
        col *= r;
    }
    Ok(scaled * h + d)
}

/// One end of a link as the channel assembly sees it.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub position: Point3,
    pub frame: Frame,
    /// Local element coordinates in meters.
    pub elements: Vec<[f64; 3]>,
    /// RIS element pattern exponent; `None` for isotropic Tx/Rx antennas.
    pub gain_exponent: Option<f64>,
}

impl Endpoint {
    fn pattern(&self, off_broadside: f64) -> f64 {
        match self.gain_exponent {
            Some(q) => element_gain(off_broadside, q),
            None => 1.0,
        }
    }
}

/// `γ Σ_c Σ_s β √(G_e L) a_arr a_depᵀ + LOS term`, with `γ = √(1/Σ S_c)`,
/// the element pattern applied wherever an endpoint is an RIS.
/// Rows index `arrival` elements, columns `departure` elements.
pub fn assemble_paths(
    departure: &Endpoint,
    arrival: &Endpoint,
    clusters: &ClusterSet,
    link: &LinkState,
    wavelength: f64,
) -> Result<CMatrix> {
    let k = 2.0 * PI / wavelength;
    let mut m = CMatrix::zeros(arrival.elements.len(), departure.elements.len());

    let mut add_path = |toward_dep: Point3, toward_arr: Point3, amplitude: Complex64| -> Result<()> {
        let dep = geometry_relation(departure.position, toward_dep, &departure.frame)?;
        let arr = geometry_relation(arrival.position, toward_arr, &arrival.frame)?;
        let pattern = departure.pattern(dep.off_broadside()) * arrival.pattern(arr.off_broadside());
        if pattern == 0.0 {
            return Ok(());
        }
        let a_dep = response(&departure.elements, dep.direction(), k);
        let a_arr = response(&arrival.elements, arr.direction(), k);
        m.ger(amplitude * pattern.sqrt(), &a_arr, &a_dep, Complex64::new(1.0, 0.0));
        Ok(())
    };

    let paths = clusters.path_count();
    if paths > 0 {
        let gamma = (1.0 / paths as f64).sqrt();
        for s in clusters.scatterers() {
            let amp = s.gain * (gamma * s.attenuation.sqrt());
            add_path(s.position, s.position, amp)?;
        }
    }
    if link.los {
        let amp = Complex64::from_polar(link.attenuation.sqrt(), link.phase);
        add_path(arrival.position, departure.position, amp)?;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkSide {
    TxToRis,
    RisToRx,
}

/// Geometry of one realization: every endpoint with its frame and elements.
#[derive(Debug, Clone)]
pub struct Scene {
    pub wavelength: f64,
    pub frequency_hz: f64,
    pub tx: Endpoint,
    pub rx: Endpoint,
    pub ris: Vec<Endpoint>,
}

impl Scene {
    /// Scene for `cfg` with the receiver at `rx_position`, turned by
    /// `rx_rotation` radians about the vertical.
    pub fn new(cfg: &ValidatedConfig, rx_position: Point3, rx_rotation: f64) -> Self {
        let c = cfg.config();
        let wl = cfg.wavelength();
        let tx = Endpoint {
            position: c.tx.position,
            frame: c.tx.frame(),
            elements: c.tx.element_positions(wl),
            gain_exponent: None,
        };
        let rx = Endpoint {
            position: rx_position,
            frame: c.rx.frame().rotated_about_z(rx_rotation),
            elements: c.rx.element_positions(wl),
            gain_exponent: None,
        };
        let ris = c
            .ris
            .iter()
            .map(|r| Endpoint {
                position: r.position,
                frame: r.frame(c.tx.position),
                elements: r.element_positions(wl),
                gain_exponent: Some(r.gain_exponent),
            })
            .collect();
        Scene {
            wavelength: wl,
            frequency_hz: c.frequency_hz(),
            tx,
            rx,
            ris,
        }
    }
}

/// `H` (Tx to RIS `ris`) or `G` (RIS `ris` to Rx).
pub fn assemble_link_channel(
    side: LinkSide,
    clusters: &ClusterSet,
    link: &LinkState,
    scene: &Scene,
    ris: usize,
) -> Result<CMatrix> {
    let surface = scene.ris.get(ris).ok_or(ChannelError::DimensionMismatch {
        what: "RIS index",
        expected_rows: scene.ris.len(),
        expected_cols: 0,
        rows: ris,
        cols: 0,
    })?;
    match side {
        LinkSide::TxToRis => assemble_paths(&scene.tx, surface, clusters, link, scene.wavelength),
        LinkSide::RisToRx => assemble_paths(surface, &scene.rx, clusters, link, scene.wavelength),
    }
}

/// `D`, Tx to Rx without any element pattern.
pub fn assemble_direct_channel(clusters: &ClusterSet, link: &LinkState, scene: &Scene) -> Result<CMatrix> {
    assemble_paths(&scene.tx, &scene.rx, clusters, link, scene.wavelength)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisChannels {
    /// N×Nt
    pub h: CMatrix,
    /// Nr×N
    pub g: CMatrix,
    pub h_los: bool,
    pub g_los: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTriple {
    pub realization: u64,
    pub seed: u64,
    pub rx_position: Point3,
    pub rx_rotation: f64,
    pub ris: Vec<RisChannels>,
    /// Nr×Nt
    pub direct: CMatrix,
    pub direct_los: bool,
}

impl ChannelTriple {
    /// `Σ_k G_k Φ_k H_k + D` over the listed surfaces only.
    pub fn composite_of(&self, active: &[(usize, &PhaseVector)]) -> Result<CMatrix, ChannelError> {
        let mut c = self.direct.clone();
        for &(k, phases) in active {
            let link = self.ris.get(k).ok_or(ChannelError::DimensionMismatch {
                what: "RIS index",
                expected_rows: self.ris.len(),
                expected_cols: 0,
                rows: k,
                cols: 0,
            })?;
            c = cascade(&link.g, phases, &link.h, &c)?;
        }
        Ok(c)
    }
}

/// `C = Σ_k G_k Φ_k H_k + D` with one phase vector per surface.
pub fn composite_channel(triple: &ChannelTriple, phases: &[PhaseVector]) -> Result<CMatrix, ChannelError> {
    if phases.len() != triple.ris.len() {
        return Err(ChannelError::DimensionMismatch {
            what: "phase vectors",
            expected_rows: triple.ris.len(),
            expected_cols: 1,
            rows: phases.len(),
            cols: 1,
        });
    }
    let active: Vec<_> = phases.iter().enumerate().collect();
    triple.composite_of(&active)
}

/// Draw all channels of `realization` with the receiver at its configured
/// position.
pub fn draw_realization(cfg: &ValidatedConfig, realization: u64) -> Result<ChannelTriple> {
    draw_realization_at(cfg, cfg.config().rx.position, realization)
}

/// Draw all channels of `realization` with the receiver moved to `rx_position`.
///
/// Each link reads its own substream, so surface `k`'s channels do not
/// depend on how many other surfaces exist.
pub fn draw_realization_at(cfg: &ValidatedConfig, rx_position: Point3, realization: u64) -> Result<ChannelTriple> {
    let c = cfg.config();
    let seed = c.seed;
    let env = &c.environment;

    let rx_rotation = match c.rx_orientation {
        RxOrientation::Fixed => 0.0,
        RxOrientation::UniformAzimuth => spawn_rng(seed, realization, LinkTag::RxOrientation).uniform_in(0.0, 2.0 * PI),
    };
    let scene = Scene::new(cfg, rx_position, rx_rotation);
    let f = scene.frequency_hz;

    let mut ris = Vec::with_capacity(scene.ris.len());
    let mut first_h_clusters = None;
    for (k, surface) in scene.ris.iter().enumerate() {
        let tag = k as u16;

        let mut rng = spawn_rng(seed, realization, LinkTag::TxRis(tag));
        let h_link = draw_link_state_with(
            c.ris_link_los,
            scene.tx.position.distance(surface.position),
            f,
            env,
            &mut rng,
        )?;
        let h_clusters = if c.scattering {
            draw_clusters(scene.tx.position, &scene.tx.frame, surface.position, env, f, &mut rng)?
        } else {
            ClusterSet::empty()
        };
        let h = assemble_link_channel(LinkSide::TxToRis, &h_clusters, &h_link, &scene, k)?;

        let mut rng = spawn_rng(seed, realization, LinkTag::RisRx(tag));
        let g_link = draw_link_state_with(c.ris_link_los, surface.position.distance(rx_position), f, env, &mut rng)?;
        let g_clusters = if c.scattering {
            draw_clusters(surface.position, &surface.frame, rx_position, env, f, &mut rng)?
        } else {
            ClusterSet::empty()
        };
        let g = assemble_link_channel(LinkSide::RisToRx, &g_clusters, &g_link, &scene, k)?;

        if k == 0 {
            first_h_clusters = Some(h_clusters);
        }
        ris.push(RisChannels {
            h,
            g,
            h_los: h_link.los,
            g_los: g_link.los,
        });
    }

    let (nr, nt) = (scene.rx.elements.len(), scene.tx.elements.len());
    let blocked = c.direct_path == LinkLosMode::Blocked;
    let (direct, direct_los) = if blocked && !c.direct_scattering_when_blocked {
        (CMatrix::zeros(nr, nt), false)
    } else {
        let mut rng = spawn_rng(seed, realization, LinkTag::Direct);
        let d_link = draw_link_state_with(c.direct_path, scene.tx.position.distance(rx_position), f, env, &mut rng)?;
        let clusters = match (c.scattering, c.shared_clusters, first_h_clusters) {
            (false, _, _) => ClusterSet::empty(),
            (true, true, Some(shared)) => shared.retarget(scene.tx.position, rx_position, env, f, &mut rng)?,
            (true, _, _) => draw_clusters(scene.tx.position, &scene.tx.frame, rx_position, env, f, &mut rng)?,
        };
        (assemble_direct_channel(&clusters, &d_link, &scene)?, d_link.los)
    };

    Ok(ChannelTriple {
        realization,
        seed,
        rx_position,
        rx_rotation,
        ris,
        direct,
        direct_los,
    })
}
