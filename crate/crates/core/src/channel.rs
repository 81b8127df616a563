//! Channel sampling and the structural transforms applied to realizations:
//! receive-antenna deactivation, antenna disablement and symbol extension.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{CMat, Cx, Error, Result};

pub const NUM_USERS: usize = 3;

/// Antenna/relay counts plus the per-pair stream target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// User antennas.
    #[serde(rename = "M")]
    pub m: usize,
    /// Relay antennas.
    #[serde(rename = "N")]
    pub n: usize,
    /// Number of relays.
    #[serde(rename = "K")]
    pub k: usize,
    /// Per-pair stream count.
    pub d: usize,
}

impl SystemConfig {
    pub fn new(m: usize, n: usize, k: usize, d: usize) -> Result<Self> {
        if m < 1 || n < 1 || k < 1 {
            return Err(Error::invalid(format!(
                "M, N, K must all be >= 1 (got M={m}, N={n}, K={k})"
            )));
        }
        if d > m {
            return Err(Error::invalid(format!(
                "stream count d={d} exceeds user antennas M={m}"
            )));
        }
        Ok(Self { m, n, k, d })
    }

    pub fn ratio(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

/// One draw of all uplink blocks `H_{k,j}` and downlink blocks `G_{j,k}`.
///
/// Uplink blocks are `n_rx x M` (where `n_rx <= N` after receive-antenna
/// deactivation), downlink blocks `M x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub config: SystemConfig,
    pub seed: u64,
    /// Active receive antennas per relay; equals `config.n` unless deactivated.
    pub n_rx: usize,
    uplink: Vec<CMat>,
    downlink: Vec<CMat>,
}

impl ChannelRealization {
    pub fn from_blocks(
        config: SystemConfig,
        seed: u64,
        n_rx: usize,
        uplink: Vec<CMat>,
        downlink: Vec<CMat>,
    ) -> Result<Self> {
        if uplink.len() != NUM_USERS * config.k || downlink.len() != NUM_USERS * config.k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} uplink and downlink blocks, got {} and {}",
                NUM_USERS * config.k,
                uplink.len(),
                downlink.len()
            )));
        }
        for h in &uplink {
            if h.shape() != (n_rx, config.m) {
                return Err(Error::DimensionMismatch(format!(
                    "uplink block is {}x{}, expected {}x{}",
                    h.nrows(),
                    h.ncols(),
                    n_rx,
                    config.m
                )));
            }
        }
        for g in &downlink {
            if g.shape() != (config.m, config.n) {
                return Err(Error::DimensionMismatch(format!(
                    "downlink block is {}x{}, expected {}x{}",
                    g.nrows(),
                    g.ncols(),
                    config.m,
                    config.n
                )));
            }
        }
        Ok(Self {
            config,
            seed,
            n_rx,
            uplink,
            downlink,
        })
    }

    /// Uplink block from user `j` to relay `k`.
    pub fn h(&self, k: usize, j: usize) -> &CMat {
        &self.uplink[k * NUM_USERS + j]
    }

    /// Downlink block from relay `k` to user `j`.
    pub fn g(&self, j: usize, k: usize) -> &CMat {
        &self.downlink[j * self.config.k + k]
    }

    pub fn uplink_blocks(&self) -> &[CMat] {
        &self.uplink
    }

    pub fn downlink_blocks(&self) -> &[CMat] {
        &self.downlink
    }
}

const PHASE_UPLINK: u64 = 0;
const PHASE_DOWNLINK: u64 = 1;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-block substream so that block order never affects sampled values.
fn block_seed(seed: u64, phase: u64, k: usize, j: usize, l: usize) -> u64 {
    let mut s = splitmix(seed);
    s = splitmix(s ^ phase);
    s = splitmix(s ^ (k as u64).wrapping_mul(0x517c_c1b7_2722_0a95));
    s = splitmix(s ^ (j as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
    splitmix(s ^ (l as u64).wrapping_mul(0x9e6c_63d0_876a_68ed))
}

fn gaussian_block(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            // CN(0, 1): each quadrature carries half the unit variance.
            m[(r, c)] = Cx::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    m
}

/// Draw a realization with i.i.d. circularly-symmetric unit-variance complex
/// Gaussian entries. Identical `(config, seed)` yields identical matrices.
pub fn sample_channel(config: SystemConfig, seed: u64) -> ChannelRealization {
    let mut uplink = Vec::with_capacity(NUM_USERS * config.k);
    for k in 0..config.k {
        for j in 0..NUM_USERS {
            uplink.push(gaussian_block(
                config.n,
                config.m,
                block_seed(seed, PHASE_UPLINK, k, j, 0),
            ));
        }
    }
    let mut downlink = Vec::with_capacity(NUM_USERS * config.k);
    for j in 0..NUM_USERS {
        for k in 0..config.k {
            downlink.push(gaussian_block(
                config.m,
                config.n,
                block_seed(seed, PHASE_DOWNLINK, k, j, 0),
            ));
        }
    }
    ChannelRealization {
        config,
        seed,
        n_rx: config.n,
        uplink,
        downlink,
    }
}

/// Keep only the first `n_prime` receive antennas at every relay.
///
/// Uplink blocks shrink to `n_prime x M`; downlink blocks are untouched
/// because transmit antennas stay active.
pub fn deactivate_rx_antennas(
    ch: &ChannelRealization,
    n_prime: usize,
) -> Result<ChannelRealization> {
    if n_prime == 0 || n_prime > ch.n_rx {
        return Err(Error::invalid(format!(
            "N' = {n_prime} out of range (0, {}]",
            ch.n_rx
        )));
    }
    let uplink = ch
        .uplink
        .iter()
        .map(|h| h.rows(0, n_prime).into_owned())
        .collect();
    Ok(ChannelRealization {
        config: ch.config,
        seed: ch.seed,
        n_rx: n_prime,
        uplink,
        downlink: ch.downlink.clone(),
    })
}

/// Shrink the antenna budget of a configuration (user and relay side).
pub fn disable_antennas(
    config: SystemConfig,
    m_star: usize,
    n_star: usize,
) -> Result<SystemConfig> {
    if m_star == 0 || m_star > config.m {
        return Err(Error::invalid(format!(
            "M* = {m_star} out of range (0, {}]",
            config.m
        )));
    }
    if n_star == 0 || n_star > config.n {
        return Err(Error::invalid(format!(
            "N* = {n_star} out of range (0, {}]",
            config.n
        )));
    }
    SystemConfig::new(m_star, n_star, config.k, config.d.min(m_star))
}

/// Submatrix view of a realization under antenna disablement: the first
/// `m_star` user antennas and `n_star` relay antennas stay active in both
/// phases.
pub fn restrict_channel(
    ch: &ChannelRealization,
    m_star: usize,
    n_star: usize,
) -> Result<ChannelRealization> {
    let config = disable_antennas(ch.config, m_star, n_star)?;
    if ch.n_rx != ch.config.n {
        return Err(Error::invalid(
            "antenna disablement must precede receive deactivation",
        ));
    }
    let uplink = ch
        .uplink
        .iter()
        .map(|h| h.view((0, 0), (n_star, m_star)).into_owned())
        .collect();
    let downlink = ch
        .downlink
        .iter()
        .map(|g| g.view((0, 0), (m_star, n_star)).into_owned())
        .collect();
    ChannelRealization::from_blocks(config, ch.seed, n_star, uplink, downlink)
}

/// Layout of an `L`-fold symbol extension with a rational effective user
/// antenna count `M* = m_star_num / m_star_den`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionPlan {
    #[serde(rename = "L")]
    pub l: usize,
    pub m_star_num: usize,
    pub m_star_den: usize,
    pub block_col_sizes: Vec<usize>,
}

impl ExtensionPlan {
    pub fn new(l: usize, m_star_num: usize, m_star_den: usize) -> Result<Self> {
        if l == 0 || m_star_num == 0 || m_star_den == 0 {
            return Err(Error::invalid("extension plan entries must be positive"));
        }
        if (l * m_star_num) % m_star_den != 0 {
            return Err(Error::invalid(format!(
                "L * M* = {l} * {m_star_num}/{m_star_den} is not an integer"
            )));
        }
        let total = l * m_star_num / m_star_den;
        let floor = m_star_num / m_star_den;
        let ceil = m_star_num.div_ceil(m_star_den);
        // The first L(M* - floor(M*)) per-use blocks get ceil(M*) columns.
        let n_ceil = total - l * floor;
        let mut block_col_sizes = vec![ceil; n_ceil];
        block_col_sizes.extend(std::iter::repeat(floor).take(l - n_ceil));
        debug_assert_eq!(block_col_sizes.iter().sum::<usize>(), total);
        Ok(Self {
            l,
            m_star_num,
            m_star_den,
            block_col_sizes,
        })
    }

    /// Total user dimension of the extended channel, `L * M*`.
    pub fn total_cols(&self) -> usize {
        self.l * self.m_star_num / self.m_star_den
    }

    pub fn m_star(&self) -> f64 {
        self.m_star_num as f64 / self.m_star_den as f64
    }
}

/// Build the `L`-use block-diagonal super-channel of a realization.
///
/// Every channel use gets an independently sampled sub-block (derived from
/// the realization's seed), so `L = 1` with `M* = M` reproduces the plain
/// realization exactly.
pub fn extend_channel(ch: &ChannelRealization, plan: &ExtensionPlan) -> Result<ChannelRealization> {
    let base = ch.config;
    if ch.n_rx != base.n {
        return Err(Error::invalid(
            "symbol extension must precede receive deactivation",
        ));
    }
    let total_cols = plan.total_cols();
    if plan.block_col_sizes.len() != plan.l
        || plan.block_col_sizes.iter().sum::<usize>() != total_cols
        || plan.block_col_sizes.iter().any(|&c| c == 0 || c > base.m)
    {
        return Err(Error::invalid("inconsistent extension plan"));
    }
    let config = SystemConfig::new(total_cols, plan.l * base.n, base.k, base.d.min(total_cols))?;

    let mut uplink = Vec::with_capacity(NUM_USERS * base.k);
    let mut downlink_by_jk = vec![Vec::new(); NUM_USERS * base.k];
    for k in 0..base.k {
        for j in 0..NUM_USERS {
            let mut h = CMat::zeros(plan.l * base.n, total_cols);
            let mut g = CMat::zeros(total_cols, plan.l * base.n);
            let mut col = 0;
            for (l, &cols) in plan.block_col_sizes.iter().enumerate() {
                let hb = gaussian_block(base.n, cols, block_seed(ch.seed, PHASE_UPLINK, k, j, l));
                let gb = gaussian_block(cols, base.n, block_seed(ch.seed, PHASE_DOWNLINK, k, j, l));
                h.view_mut((l * base.n, col), (base.n, cols)).copy_from(&hb);
                g.view_mut((col, l * base.n), (cols, base.n)).copy_from(&gb);
                col += cols;
            }
            uplink.push(h);
            downlink_by_jk[j * base.k + k] = vec![g];
        }
    }
    let downlink = downlink_by_jk.into_iter().map(|mut v| v.remove(0)).collect();
    ChannelRealization::from_blocks(config, ch.seed, config.n, uplink, downlink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::numerical_rank;
    use crate::Tol;

    fn cfg(m: usize, n: usize, k: usize, d: usize) -> SystemConfig {
        SystemConfig::new(m, n, k, d).unwrap()
    }

    #[test]
    fn sample_shapes() {
        let ch = sample_channel(cfg(2, 3, 2, 1), 7);
        assert_eq!(ch.uplink_blocks().len(), 6);
        assert_eq!(ch.downlink_blocks().len(), 6);
        for k in 0..2 {
            for j in 0..3 {
                assert_eq!(ch.h(k, j).shape(), (3, 2));
                assert_eq!(ch.g(j, k).shape(), (2, 3));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_channel(cfg(2, 3, 2, 1), 7);
        let b = sample_channel(cfg(2, 3, 2, 1), 7);
        assert_eq!(a, b);
        let c = sample_channel(cfg(2, 3, 2, 1), 8);
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_blocks_have_full_column_rank() {
        let tol = Tol::default();
        for seed in 0..100 {
            let ch = sample_channel(cfg(2, 3, 1, 1), seed);
            assert_eq!(numerical_rank(ch.h(0, 0), &tol).unwrap(), 2);
        }
    }

    #[test]
    fn deactivation_truncates_uplink_only() {
        let ch = sample_channel(cfg(4, 10, 2, 1), 1);
        let red = deactivate_rx_antennas(&ch, 8).unwrap();
        assert_eq!(red.h(1, 2).shape(), (8, 4));
        assert_eq!(red.g(2, 1).shape(), (4, 10));
        assert_eq!(red.h(1, 2), &ch.h(1, 2).rows(0, 8).into_owned());

        let same = deactivate_rx_antennas(&ch, 10).unwrap();
        assert_eq!(&same, &ch);

        assert!(deactivate_rx_antennas(&ch, 11).is_err());
        assert!(deactivate_rx_antennas(&ch, 0).is_err());
    }

    #[test]
    fn deactivation_composes() {
        let ch = sample_channel(cfg(4, 10, 2, 1), 5);
        let once = deactivate_rx_antennas(&ch, 6).unwrap();
        let twice = deactivate_rx_antennas(&deactivate_rx_antennas(&ch, 8).unwrap(), 6).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn disablement_rules() {
        let c = cfg(3, 5, 2, 1);
        let d = disable_antennas(c, 3, 3).unwrap();
        assert_eq!((d.m, d.n), (3, 3));
        let noop = disable_antennas(c, 3, 5).unwrap();
        assert_eq!((noop.m, noop.n), (3, 5));
        assert!(disable_antennas(c, 3, 0).is_err());
        assert!(disable_antennas(c, 4, 5).is_err());
    }

    #[test]
    fn restriction_takes_leading_submatrices() {
        let ch = sample_channel(cfg(3, 5, 2, 1), 9);
        let red = restrict_channel(&ch, 2, 3).unwrap();
        assert_eq!(red.h(0, 1).shape(), (3, 2));
        assert_eq!(red.g(1, 0).shape(), (2, 3));
        assert_eq!(red.h(0, 1), &ch.h(0, 1).view((0, 0), (3, 2)).into_owned());
    }

    #[test]
    fn extension_plan_block_sizes() {
        let plan = ExtensionPlan::new(2, 3, 2).unwrap();
        assert_eq!(plan.block_col_sizes, vec![2, 1]);
        assert_eq!(plan.total_cols(), 3);

        let plan = ExtensionPlan::new(3, 4, 3).unwrap();
        assert_eq!(plan.block_col_sizes, vec![2, 1, 1]);

        assert!(ExtensionPlan::new(3, 3, 2).is_err());
    }

    #[test]
    fn extension_is_block_diagonal_with_exact_zeros() {
        let ch = sample_channel(cfg(2, 3, 2, 1), 4);
        let plan = ExtensionPlan::new(2, 3, 2).unwrap();
        let ext = extend_channel(&ch, &plan).unwrap();
        assert_eq!(ext.config.m, 3);
        assert_eq!(ext.config.n, 6);
        let h = ext.h(0, 0);
        assert_eq!(h.shape(), (6, 3));
        // Off-diagonal blocks are exactly zero.
        for r in 0..3 {
            for c in 2..3 {
                assert_eq!(h[(r, c)], Cx::new(0.0, 0.0));
            }
        }
        for r in 3..6 {
            for c in 0..2 {
                assert_eq!(h[(r, c)], Cx::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn unit_extension_reproduces_plain_realization() {
        let ch = sample_channel(cfg(2, 3, 2, 1), 4);
        let plan = ExtensionPlan::new(1, 2, 1).unwrap();
        let ext = extend_channel(&ch, &plan).unwrap();
        assert_eq!(ext, ch);
    }
}
