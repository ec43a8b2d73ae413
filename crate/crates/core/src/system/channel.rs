use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use super::config::{db_to_linear, Pathloss};
use super::topology::{distance2, distance3, Topology};
use super::SystemConfig;
use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Which direct AP–user links are completely blocked, indexed `(n, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockageMask {
    n_aps: usize,
    n_users: usize,
    blocked: Vec<bool>,
}

impl BlockageMask {
    pub fn none(n_aps: usize, n_users: usize) -> Self {
        Self::filled(n_aps, n_users, false)
    }

    pub fn filled(n_aps: usize, n_users: usize, value: bool) -> Self {
        Self {
            n_aps,
            n_users,
            blocked: vec![value; n_aps * n_users],
        }
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn get(&self, n: usize, k: usize) -> bool {
        self.blocked[n * self.n_users + k]
    }

    pub fn set(&mut self, n: usize, k: usize, blocked: bool) {
        self.blocked[n * self.n_users + k] = blocked;
    }

    pub fn count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    pub fn as_rows(&self) -> Vec<Vec<bool>> {
        self.blocked.chunks(self.n_users).map(|c| c.to_vec()).collect()
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n_aps = rows.len();
        let n_users = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_users) {
            return Err(Error::Dimension("ragged blockage mask".into()));
        }
        Ok(Self {
            n_aps,
            n_users,
            blocked: rows.concat(),
        })
    }
}

/// Independent Bernoulli(`blockage_prob`) per direct link.
pub fn draw_blockage_mask<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> BlockageMask {
    let p = config.blockage_prob.clamp(0.0, 1.0);
    let dist = Bernoulli::new(p).expect("probability clamped to [0, 1]");
    let blocked = (0..config.n_aps * config.n_users)
        .map(|_| dist.sample(rng))
        .collect();
    BlockageMask {
        n_aps: config.n_aps,
        n_users: config.n_users,
        blocked,
    }
}

/// Channel coefficients of one coherence block.
///
/// Direct blocks are stored unmasked; the blockage mask is applied on read so
/// a mask can be lifted again. RIS-side channels are never masked.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    n_aps: usize,
    antennas: usize,
    n_users: usize,
    n_elements: usize,
    /// `h_{n,k}`, index `n * K + k`, each `L × 1`.
    direct: Vec<CVector>,
    /// `H_n`, each `L × M`.
    ap_to_ris: Vec<CMatrix>,
    /// `g_k`, each `M × 1`.
    ris_to_user: Vec<CVector>,
    mask: BlockageMask,
    seed: u64,
    clamped_links: usize,
}

impl ChannelState {
    /// Assembles a state from explicit blocks (all links unblocked).
    pub fn from_parts(
        n_aps: usize,
        antennas: usize,
        n_users: usize,
        n_elements: usize,
        direct: Vec<CVector>,
        ap_to_ris: Vec<CMatrix>,
        ris_to_user: Vec<CVector>,
    ) -> Result<Self> {
        let dim = |m: String| Err(Error::Dimension(m));
        if direct.len() != n_aps * n_users || direct.iter().any(|h| h.len() != antennas) {
            return dim(format!("expected {n_aps}x{n_users} direct blocks of length {antennas}"));
        }
        if ap_to_ris.len() != n_aps
            || ap_to_ris
                .iter()
                .any(|h| h.nrows() != antennas || h.ncols() != n_elements)
        {
            return dim(format!("expected {n_aps} AP-RIS blocks of size {antennas}x{n_elements}"));
        }
        if ris_to_user.len() != n_users || ris_to_user.iter().any(|g| g.len() != n_elements) {
            return dim(format!("expected {n_users} RIS-user vectors of length {n_elements}"));
        }
        Ok(Self {
            n_aps,
            antennas,
            n_users,
            n_elements,
            direct,
            ap_to_ris,
            ris_to_user,
            mask: BlockageMask::none(n_aps, n_users),
            seed: 0,
            clamped_links: 0,
        })
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn antennas_per_ap(&self) -> usize {
        self.antennas
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// `N · L`, the length of aggregate vectors.
    pub fn total_antennas(&self) -> usize {
        self.n_aps * self.antennas
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of links whose distance was raised to the minimum distance.
    pub fn clamped_links(&self) -> usize {
        self.clamped_links
    }

    pub fn mask(&self) -> &BlockageMask {
        &self.mask
    }

    pub fn is_blocked(&self, n: usize, k: usize) -> bool {
        self.mask.get(n, k)
    }

    /// Unmasked `h_{n,k}`.
    pub fn raw_direct(&self, n: usize, k: usize) -> &CVector {
        &self.direct[n * self.n_users + k]
    }

    /// Effective `h_{n,k}`: zero when the link is blocked.
    pub fn direct(&self, n: usize, k: usize) -> CVector {
        if self.is_blocked(n, k) {
            CVector::zeros(self.antennas)
        } else {
            self.raw_direct(n, k).clone()
        }
    }

    pub fn ap_to_ris(&self, n: usize) -> &CMatrix {
        &self.ap_to_ris[n]
    }

    pub fn ris_to_user(&self, k: usize) -> &CVector {
        &self.ris_to_user[k]
    }

    /// Effective aggregate `h_k` (`NL × 1`), AP blocks stacked in index order.
    pub fn aggregate_direct(&self, k: usize) -> CVector {
        let l = self.antennas;
        let mut h = CVector::zeros(self.total_antennas());
        for n in 0..self.n_aps {
            if !self.is_blocked(n, k) {
                h.rows_mut(n * l, l).copy_from(self.raw_direct(n, k));
            }
        }
        h
    }

    /// Aggregate `H` (`NL × M`).
    pub fn aggregate_ap_to_ris(&self) -> CMatrix {
        let l = self.antennas;
        let mut h = CMatrix::zeros(self.total_antennas(), self.n_elements);
        for n in 0..self.n_aps {
            h.rows_mut(n * l, l).copy_from(&self.ap_to_ris[n]);
        }
        h
    }

    /// `G_k = H · diag(g_k)` (`NL × M`).
    pub fn cascaded(&self, k: usize) -> CMatrix {
        let mut g = self.aggregate_ap_to_ris();
        let gk = &self.ris_to_user[k];
        for (m, mut col) in g.column_iter_mut().enumerate() {
            col *= gk[m];
        }
        g
    }

    /// Effective channel `h_k + G_k v` of user `k`.
    pub fn effective_channel(&self, k: usize, phases: &CVector) -> CVector {
        let mut a = self.aggregate_direct(k);
        if self.n_elements > 0 {
            let scaled = self.ris_to_user[k].component_mul(phases);
            a += self.aggregate_ap_to_ris() * scaled;
        }
        a
    }

    /// Effective channels of all users, sharing one aggregate `H`.
    pub fn effective_channels(&self, phases: &CVector) -> Vec<CVector> {
        let h = (self.n_elements > 0).then(|| self.aggregate_ap_to_ris());
        (0..self.n_users)
            .map(|k| {
                let mut a = self.aggregate_direct(k);
                if let Some(h) = &h {
                    a += h * self.ris_to_user[k].component_mul(phases);
                }
                a
            })
            .collect()
    }

    /// Same state with `mask` as the blockage pattern (replacing any previous
    /// mask). An all-false mask lifts every blockage.
    pub fn apply_blockage(&self, mask: &BlockageMask) -> Result<Self> {
        if mask.n_aps != self.n_aps || mask.n_users != self.n_users {
            return Err(Error::Dimension(format!(
                "mask is {}x{}, channels are {}x{}",
                mask.n_aps, mask.n_users, self.n_aps, self.n_users
            )));
        }
        let mut out = self.clone();
        out.mask = mask.clone();
        Ok(out)
    }

    /// The same direct links with the RIS removed (`M = 0`).
    pub fn without_ris(&self) -> Self {
        let mut out = self.clone();
        out.n_elements = 0;
        out.ap_to_ris = vec![CMatrix::zeros(self.antennas, 0); self.n_aps];
        out.ris_to_user = vec![CVector::zeros(0); self.n_users];
        out
    }
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Isotropic-scattering correlation of a planar array:
/// `R[m, m'] = sinc(2 ‖u_m − u_m'‖ / λ)`.
pub fn ris_correlation(elements: &[[f64; 3]], wavelength_m: f64) -> DMatrix<f64> {
    let m = elements.len();
    DMatrix::from_fn(m, m, |i, j| {
        sinc(2.0 * distance3(elements[i], elements[j]) / wavelength_m)
    })
}

/// Symmetric square root of a PSD matrix (negative eigenvalues from
/// round-off are clipped to zero).
pub fn psd_sqrt(r: &DMatrix<f64>) -> DMatrix<f64> {
    if r.nrows() == 0 {
        return r.clone();
    }
    let eig = SymmetricEigen::new(r.clone());
    let d = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `sqrt(β) · R^{1/2} z` with `z ~ CN(0, I_M)`.
pub fn correlated_vector<R: Rng + ?Sized>(sqrt_r: &DMatrix<f64>, beta: f64, rng: &mut R) -> CVector {
    let m = sqrt_r.nrows();
    let z = CVector::from_fn(m, |_, _| cn01(rng));
    let s = beta.sqrt();
    CVector::from_fn(m, |i, _| {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            acc += z[j] * sqrt_r[(i, j)];
        }
        acc * s
    })
}

/// Attenuation models used by [`generate_channels_with`].
pub struct LinkModels<'a> {
    pub direct: &'a dyn Pathloss,
    pub ap_ris: &'a dyn Pathloss,
    pub ris_user: &'a dyn Pathloss,
}

/// Rayleigh direct links with log-normal shadowing and spatially correlated
/// Rayleigh RIS links, using the power laws stored in `config`.
pub fn generate_channels<R: Rng + ?Sized>(
    config: &SystemConfig,
    topology: &Topology,
    rng: &mut R,
) -> Result<ChannelState> {
    let models = LinkModels {
        direct: &config.direct_pathloss,
        ap_ris: &config.ap_ris_pathloss,
        ris_user: &config.ris_user_pathloss,
    };
    generate_channels_with(config, topology, &models, rng)
}

/// As [`generate_channels`] with explicit attenuation models.
///
/// Draw order is fixed: all direct links first (`N·K` shadowing values and
/// `N·K·L` fading coefficients), then AP–RIS rows, then RIS–user vectors.
/// For a given seed the direct links are therefore independent of `M`.
pub fn generate_channels_with<R: Rng + ?Sized>(
    config: &SystemConfig,
    topology: &Topology,
    models: &LinkModels<'_>,
    rng: &mut R,
) -> Result<ChannelState> {
    config.validate()?;
    let (n_aps, l, n_users, m) = (
        config.n_aps,
        config.antennas_per_ap,
        config.n_users,
        config.n_ris_elements,
    );
    if topology.ap_positions.len() != n_aps
        || topology.user_positions.len() != n_users
        || topology.ris_element_positions.len() != m
    {
        return Err(Error::Dimension("topology does not match config".into()));
    }
    let mut clamped = 0usize;
    let mut clamp = |d: f64| {
        if d < config.min_distance_m {
            clamped += 1;
            config.min_distance_m
        } else {
            d
        }
    };

    let mut direct = Vec::with_capacity(n_aps * n_users);
    for n in 0..n_aps {
        for k in 0..n_users {
            let d = clamp(distance2(topology.ap_positions[n], topology.user_positions[k]));
            let shadow_db: f64 = {
                let z: f64 = StandardNormal.sample(rng);
                z * config.shadowing_std_db
            };
            let beta = models.direct.power_gain(d) * db_to_linear(shadow_db);
            let s = beta.sqrt();
            direct.push(CVector::from_fn(l, |_, _| cn01(rng) * s));
        }
    }

    let sqrt_r = psd_sqrt(&ris_correlation(
        &topology.ris_element_positions,
        config.wavelength_m,
    ));
    let mut ap_to_ris = Vec::with_capacity(n_aps);
    for n in 0..n_aps {
        let d = clamp(distance2(topology.ap_positions[n], topology.ris_position));
        let beta = models.ap_ris.power_gain(d);
        let mut h = CMatrix::zeros(l, m);
        for row in 0..l {
            let r = correlated_vector(&sqrt_r, beta, rng);
            for col in 0..m {
                h[(row, col)] = r[col];
            }
        }
        ap_to_ris.push(h);
    }
    let mut ris_to_user = Vec::with_capacity(n_users);
    for k in 0..n_users {
        let d = clamp(distance2(topology.ris_position, topology.user_positions[k]));
        let beta = models.ris_user.power_gain(d);
        ris_to_user.push(correlated_vector(&sqrt_r, beta, rng));
    }

    let mut state = ChannelState::from_parts(n_aps, l, n_users, m, direct, ap_to_ris, ris_to_user)?;
    state.seed = config.rng_seed;
    state.clamped_links = clamped;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::generate_topology;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> SystemConfig {
        SystemConfig::default().with_dimensions(2, 2, 3, 4)
    }

    fn state(seed: u64) -> ChannelState {
        let c = small();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = generate_topology(&c, &mut rng);
        generate_channels(&c, &t, &mut rng).unwrap()
    }

    #[test]
    fn correlation_diagonal_is_one_and_half_wavelength_is_zero() {
        let lambda = 0.1;
        let els = [[0.0, 0.0, 0.0], [0.0, lambda / 2.0, 0.0]];
        let r = ris_correlation(&els, lambda);
        assert_eq!(r[(0, 0)], 1.0);
        assert_eq!(r[(1, 1)], 1.0);
        assert!(r[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let els = crate::system::topology::ris_grid([0.0, 0.0], 3, 0.025);
        let r = ris_correlation(&els, 0.1);
        let s = psd_sqrt(&r);
        assert!((&s * &s - &r).abs().max() < 1e-10);
    }

    #[test]
    fn dimensions_match_config() {
        let s = state(1);
        assert_eq!(s.n_aps(), 2);
        assert_eq!(s.total_antennas(), 4);
        assert_eq!(s.aggregate_direct(0).len(), 4);
        assert_eq!(s.aggregate_ap_to_ris().shape(), (4, 4));
        assert_eq!(s.cascaded(2).shape(), (4, 4));
        assert_eq!(s.mask().count(), 0);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(state(42), state(42));
        assert_ne!(state(42), state(43));
    }

    #[test]
    fn aggregate_stacks_blocks_in_ap_order() {
        let s = state(2);
        let h = s.aggregate_direct(1);
        for n in 0..2 {
            for l in 0..2 {
                assert_eq!(h[n * 2 + l], s.raw_direct(n, 1)[l]);
            }
        }
    }

    #[test]
    fn masks_zero_only_selected_blocks() {
        let s = state(3);
        let none = s.apply_blockage(&BlockageMask::none(2, 3)).unwrap();
        for k in 0..3 {
            assert_eq!(none.aggregate_direct(k), s.aggregate_direct(k));
        }
        let all = s.apply_blockage(&BlockageMask::filled(2, 3, true)).unwrap();
        for k in 0..3 {
            assert!(all.aggregate_direct(k).iter().all(|c| c.norm() == 0.0));
            assert_eq!(all.ris_to_user(k), s.ris_to_user(k));
        }
        let mut one = BlockageMask::none(2, 3);
        one.set(1, 2, true);
        let b = s.apply_blockage(&one).unwrap();
        for n in 0..2 {
            for k in 0..3 {
                if (n, k) == (1, 2) {
                    assert!(b.direct(n, k).iter().all(|c| c.norm() == 0.0));
                } else {
                    assert_eq!(b.direct(n, k), s.direct(n, k));
                }
            }
        }
        assert_eq!(b.apply_blockage(&one).unwrap(), b);
        // lifting restores the original coefficients
        let lifted = b.apply_blockage(&BlockageMask::none(2, 3)).unwrap();
        assert_eq!(lifted, s);
    }

    #[test]
    fn mask_dimension_checked() {
        let s = state(3);
        assert!(s.apply_blockage(&BlockageMask::none(3, 3)).is_err());
    }

    #[test]
    fn blockage_probability_extremes() {
        let mut c = small();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        c.blockage_prob = 0.0;
        assert_eq!(draw_blockage_mask(&c, &mut rng).count(), 0);
        c.blockage_prob = 1.0;
        assert_eq!(draw_blockage_mask(&c, &mut rng).count(), 6);
    }

    #[test]
    fn zero_distance_is_clamped() {
        let c = small();
        let t = Topology {
            ap_positions: vec![[0.0, 0.0], [10.0, 0.0]],
            user_positions: vec![[0.0, 0.0], [5.0, 5.0], [-3.0, 1.0]],
            ris_position: [0.0, 0.0],
            ris_element_positions: crate::system::topology::ris_grid([0.0, 0.0], 2, 0.025),
        };
        let s = generate_channels(&c, &t, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        // AP 0 - user 0, AP 0 - RIS, RIS - user 0
        assert_eq!(s.clamped_links(), 3);
        assert!(s.raw_direct(0, 0).iter().all(|c| c.re.is_finite()));
    }

    #[test]
    fn without_ris_keeps_direct_links() {
        let s = state(4);
        let v = CVector::from_element(4, Complex64::new(1.0, 0.0));
        let bare = s.without_ris();
        assert_eq!(bare.n_elements(), 0);
        assert_eq!(bare.effective_channel(0, &CVector::zeros(0)), s.aggregate_direct(0));
        assert_ne!(s.effective_channel(0, &v), s.aggregate_direct(0));
    }
}
