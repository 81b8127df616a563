//! Construction of the transceiver processors: user precoders aligned in the
//! relays' receive space, relay precoders solved from a Kronecker null-space
//! system, and receive post-processors nulling the leftover interference.
//!
//! Three schemes are implemented. Alignment I aligns each message pair across
//! the full relay receive space; Alignment II first deactivates relay receive
//! antennas down to `N' = (2M - d)/K` so the alignment subspace has dimension
//! exactly `d`; the no-alignment scheme uses selection precoders and lets the
//! relay precoders neutralize all six interference terms directly (feasible
//! when `K N^2 > 3 M^2`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{
    deactivate_rx_antennas, extend_channel, restrict_channel, ChannelRealization, ExtensionPlan,
};
use crate::formulas::theorem1_dof;
use crate::numerics::{kronecker, null_space_basis, numerical_rank, unvectorize};
use crate::verifier;
use crate::{CMat, Cx, Error, Result, Tol};

pub const RETRY_BUDGET: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    AlignmentI,
    AlignmentII,
    NoAlignment,
}

/// A feasible construction recipe: which scheme to run, at how many streams,
/// and which channel transforms (antenna disablement, symbol extension) to
/// apply first.
///
/// `d` counts streams per pair on the design channel; under an `L`-fold
/// extension the per-use rate is `d / L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub d: usize,
    /// Columns of each precoder neutralized at the relays, `max(0, 3d - M)`.
    pub d_prime: usize,
    /// Retained relay receive dimension (Alignment II only).
    pub n_prime: Option<usize>,
    /// `(M*, N*)` antenna disablement applied before everything else.
    pub disablement: Option<(usize, usize)>,
    pub extension: Option<ExtensionPlan>,
}

impl Strategy {
    fn native(kind: StrategyKind, d: usize, m: usize, n_prime: Option<usize>) -> Self {
        Self {
            kind,
            d,
            d_prime: (3 * d).saturating_sub(m),
            n_prime,
            disablement: None,
            extension: None,
        }
    }

    pub fn trivial() -> Self {
        Self {
            kind: StrategyKind::AlignmentI,
            d: 0,
            d_prime: 0,
            n_prime: None,
            disablement: None,
            extension: None,
        }
    }
}

/// The constructed linear processors.
///
/// All matrices live on the verification channel returned alongside by
/// [`design`]: `U_{j,j'}` is `M x d`, `F_k` is `N x N` (Alignment II leaves
/// its last `N - N'` columns exactly zero), `V_j` is `2d x M`.
#[derive(Debug, Clone)]
pub struct TransceiverDesign {
    pub strategy: Strategy,
    /// Six precoders indexed by [`u_index`].
    pub user_precoders: Vec<CMat>,
    pub relay_precoders: Vec<CMat>,
    pub postprocessors: Vec<CMat>,
    /// Resamples consumed anywhere in the construction (0 = first try).
    pub retries: usize,
}

impl TransceiverDesign {
    pub fn d(&self) -> usize {
        self.strategy.d
    }

    /// Precoder `U_{j,jp}` where `jp` is one of `j`'s two partners.
    pub fn u(&self, j: usize, jp: usize) -> &CMat {
        &self.user_precoders[u_index(j, jp)]
    }
}

/// Storage slot of `U_{j,jp}`: partner `j+1` first, then partner `j+2`.
pub fn u_index(j: usize, jp: usize) -> usize {
    debug_assert!(j < 3 && jp < 3 && j != jp);
    if jp == (j + 1) % 3 {
        j * 2
    } else {
        j * 2 + 1
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Cx::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

fn mix_seed(seed: u64, attempt: usize) -> u64 {
    seed ^ (attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5851_f42d_4c95_7f2d
}

// ---------------------------------------------------------------------------
// Strategy selection
// ---------------------------------------------------------------------------

struct NativeChoice {
    kind: StrategyKind,
    d: usize,
    n_prime: Option<usize>,
}

/// Largest per-pair stream count allowed by the closed-form total DoF.
fn stream_cap(m: usize, n: usize, k: usize) -> usize {
    ((theorem1_dof(m as f64, n as f64, k as u32) + 1e-9) / 3.0).floor() as usize
}

/// Best scheme at the given antenna counts without any channel transform.
fn best_native(m: usize, n: usize, k: usize) -> Option<NativeChoice> {
    let cap = stream_cap(m, n, k);
    let mut best: Option<NativeChoice> = None;
    let mut consider = |c: NativeChoice| {
        if best.as_ref().is_none_or(|b| c.d > b.d) {
            best = Some(c);
        }
    };

    if k * n * n > 3 * m * m && m % 2 == 0 && m / 2 >= 1 {
        consider(NativeChoice {
            kind: StrategyKind::NoAlignment,
            d: m / 2,
            n_prime: None,
        });
    }

    // Alignment I: d below the formula cap, d columns available in the
    // alignment null space, split consistent (2d <= M), and a wide relay
    // system whenever the relays must neutralize anything.
    let hi = cap.min(m / 2).min((2 * m).saturating_sub(k * n));
    for d in (1..=hi).rev() {
        let dp = (3 * d).saturating_sub(m);
        if dp > 0 && k * n * n <= 3 * dp * m {
            continue;
        }
        consider(NativeChoice {
            kind: StrategyKind::AlignmentI,
            d,
            n_prime: None,
        });
        break;
    }

    // Alignment II: N' = (2M - d)/K must be a positive integer <= N.
    for d in (1..=cap.min(m / 2)).rev() {
        if (2 * m - d) % k != 0 {
            continue;
        }
        let np = (2 * m - d) / k;
        if np == 0 || np > n {
            continue;
        }
        let dp = (3 * d).saturating_sub(m);
        if dp > 0 && k * n * np <= 3 * dp * m {
            continue;
        }
        consider(NativeChoice {
            kind: StrategyKind::AlignmentII,
            d,
            n_prime: Some(np),
        });
        break;
    }

    best
}

const L_MAX: usize = 12;

/// Choose scheme, stream count and channel transforms for `(M, N, K)`.
///
/// Preference order: a native design at the largest feasible integer `d`;
/// then antenna disablement (relay side down to `M` when `M < N`, user side
/// down to the full-relay ratio boundary when above it); then a minimal-`L`
/// symbol extension maximizing the per-use stream count. When nothing is
/// feasible the trivial `d = 0` strategy is reported.
pub fn select_strategy(m: usize, n: usize, k: usize) -> Result<Strategy> {
    if m < 1 || n < 1 || k < 1 {
        return Err(Error::invalid(format!(
            "M, N, K must all be >= 1 (got M={m}, N={n}, K={k})"
        )));
    }

    if let Some(c) = best_native(m, n, k) {
        return Ok(Strategy::native(c.kind, c.d, m, c.n_prime));
    }

    // Disablement candidates (identity excluded).
    let mut disablements: Vec<(usize, usize)> = Vec::new();
    if m < n {
        disablements.push((m, m));
    }
    if k >= 2 {
        let kf = k as f64;
        let b3 = (3.0 * kf + (9.0 * kf * kf - 12.0 * kf).sqrt()) / 6.0;
        if m as f64 >= b3 * n as f64 {
            let m_star = ((b3 * n as f64).ceil() as usize).clamp(1, m);
            if m_star < m {
                disablements.push((m_star, n));
            }
        }
    }

    // Prefer the higher per-use stream count d / L; ties keep the earlier
    // (smaller-L, earlier-listed) candidate.
    fn consider(best: &mut Option<Strategy>, s: Strategy) {
        let l = |x: &Strategy| x.extension.as_ref().map_or(1, |p| p.l);
        if best.as_ref().is_none_or(|b| s.d * l(b) > b.d * l(&s)) {
            *best = Some(s);
        }
    }

    let mut best: Option<Strategy> = None;
    for &(ms, ns) in &disablements {
        if let Some(c) = best_native(ms, ns, k) {
            consider(
                &mut best,
                Strategy {
                    disablement: Some((ms, ns)),
                    ..Strategy::native(c.kind, c.d, ms, c.n_prime)
                },
            );
        }
    }
    if let Some(s) = best {
        return Ok(s);
    }

    let mut best: Option<Strategy> = None;
    let bases: Vec<Option<(usize, usize)>> = std::iter::once(None)
        .chain(disablements.iter().copied().map(Some))
        .collect();
    for l in 2..=L_MAX {
        for &dis in &bases {
            let (mb, nb) = dis.unwrap_or((m, n));
            if let Some(c) = best_native(l * mb, l * nb, k) {
                consider(
                    &mut best,
                    Strategy {
                        disablement: dis,
                        extension: Some(ExtensionPlan::new(l, mb, 1)?),
                        ..Strategy::native(c.kind, c.d, l * mb, c.n_prime)
                    },
                );
            }
        }
    }
    Ok(best.unwrap_or_else(Strategy::trivial))
}

// ---------------------------------------------------------------------------
// User precoders
// ---------------------------------------------------------------------------

/// Stacked alignment matrix `K_j = [H_{k,j}, -H_{k,j+1}]_k` on the active
/// (possibly receive-reduced) uplink.
fn alignment_matrix(ch: &ChannelRealization, j: usize) -> CMat {
    let (m, nr, k) = (ch.config.m, ch.n_rx, ch.config.k);
    let jp = (j + 1) % 3;
    let mut kj = CMat::zeros(k * nr, 2 * m);
    for kk in 0..k {
        kj.view_mut((kk * nr, 0), (nr, m)).copy_from(ch.h(kk, j));
        kj.view_mut((kk * nr, m), (nr, m))
            .copy_from(&(-ch.h(kk, jp)));
    }
    kj
}

/// Align each message pair: `H_{k,j} U_{j,j+1} = H_{k,j+1} U_{j+1,j}` at
/// every relay of the given (possibly reduced) channel.
///
/// Returns the six precoders in [`u_index`] order; stacked columns are
/// unit-norm so the shared scaling preserves the alignment exactly.
pub fn align_uplink(
    ch: &ChannelRealization,
    d: usize,
    rng: &mut ChaCha8Rng,
    retries: &mut usize,
) -> Result<Vec<CMat>> {
    let m = ch.config.m;
    if d == 0 {
        return Err(Error::InfeasibleAlignment("need d >= 1".into()));
    }
    let tol = Tol::default();
    let mut out = vec![CMat::zeros(1, 1); 6];
    for j in 0..3 {
        let jp = (j + 1) % 3;
        // Feasibility is judged on the computed null space, not the generic
        // count 2M - K*N_rx: block-diagonal (extended) channels decompose
        // per use and can exceed it.
        let basis = null_space_basis(&alignment_matrix(ch, j), &tol)?;
        if basis.ncols() < d {
            return Err(Error::InfeasibleAlignment(format!(
                "alignment null space has dimension {} < d = {d}",
                basis.ncols()
            )));
        }
        let mut done = false;
        for attempt in 0..RETRY_BUDGET {
            let mut x = &basis * gaussian(basis.ncols(), d, rng);
            for c in 0..d {
                let nrm = x.column(c).norm();
                x.column_mut(c).unscale_mut(nrm);
            }
            let top = x.rows(0, m).into_owned();
            let bot = x.rows(m, m).into_owned();
            if numerical_rank(&top, &tol)? == d && numerical_rank(&bot, &tol)? == d {
                out[u_index(j, jp)] = top;
                out[u_index(jp, j)] = bot;
                *retries += attempt;
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::DegenerateInstance {
                stage: "user-precoder-rank",
                attempts: RETRY_BUDGET,
            });
        }
    }
    Ok(out)
}

/// Alignment II front end: derive `N'`, deactivate receive antennas, then
/// align on the reduced channel (where the alignment null space has dimension
/// exactly `d`).
pub fn align_uplink_ii(
    ch: &ChannelRealization,
    d: usize,
    rng: &mut ChaCha8Rng,
    retries: &mut usize,
) -> Result<(usize, ChannelRealization, Vec<CMat>)> {
    let (m, n, k) = (ch.config.m, ch.config.n, ch.config.k);
    if d == 0 || 2 * m <= d || (2 * m - d) % k != 0 {
        return Err(Error::InfeasibleAlignment(format!(
            "N' = (2M - d)/K = (2*{m} - {d})/{k} is not a positive integer"
        )));
    }
    let np = (2 * m - d) / k;
    if np == 0 || np > n {
        return Err(Error::InfeasibleAlignment(format!(
            "N' = {np} outside (0, {n}]"
        )));
    }
    let reduced = deactivate_rx_antennas(ch, np)?;
    let precoders = align_uplink(&reduced, d, rng, retries)?;
    Ok((np, reduced, precoders))
}

/// Split a precoder into the relay-neutralized part `U^(L)` (first `d'`
/// columns) and the receiver-nulled part `U^(R)`.
pub fn split_precoders(u: &CMat, d_prime: usize) -> Result<(CMat, CMat)> {
    let d = u.ncols();
    if d_prime > d {
        return Err(Error::invalid(format!(
            "split point d' = {d_prime} exceeds d = {d}"
        )));
    }
    Ok((
        u.columns(0, d_prime).into_owned(),
        u.columns(d_prime, d - d_prime).into_owned(),
    ))
}

// ---------------------------------------------------------------------------
// Relay precoders
// ---------------------------------------------------------------------------

/// Effective desired-signal block at relay `k` for receiver `j`:
/// `W_{k,j} = [H_{k,j+1} U_{j+1,j}, H_{k,j+2} U_{j+2,j}]` on the given
/// channel (full or reduced).
pub fn effective_signal(
    ch: &ChannelRealization,
    precoders: &[CMat],
    k: usize,
    j: usize,
) -> CMat {
    let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
    let a = ch.h(k, j1) * &precoders[u_index(j1, j)];
    let b = ch.h(k, j2) * &precoders[u_index(j2, j)];
    let mut w = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    w.view_mut((0, 0), a.shape()).copy_from(&a);
    w.view_mut((0, a.ncols()), b.shape()).copy_from(&b);
    w
}

/// Pre-postprocessor rank certificate input for receiver `j`:
/// `sum_k G_{j,k} F_k [W_{k,j}, H_{k,j+1} U^(R)_{j+1,j+2}]`.
pub(crate) fn certificate_matrix(
    ch: &ChannelRealization,
    f: &[CMat],
    precoders: &[CMat],
    d_prime: usize,
    j: usize,
) -> CMat {
    let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
    let d = precoders[0].ncols();
    let m = ch.config.m;
    let mut x = CMat::zeros(m, 3 * d - d_prime);
    for kk in 0..ch.config.k {
        let w = effective_signal(ch, precoders, kk, j);
        let ur = precoders[u_index(j1, j2)].columns(d_prime, d - d_prime);
        let hur = ch.h(kk, j1) * ur;
        let mut cols = CMat::zeros(w.nrows(), 3 * d - d_prime);
        cols.view_mut((0, 0), w.shape()).copy_from(&w);
        cols.view_mut((0, 2 * d), hur.shape()).copy_from(&hur);
        x += ch.g(j, kk) * &f[kk] * cols;
    }
    x
}

/// Solve for the relay precoders neutralizing the `U^(L)` interference.
///
/// Builds the stacked Kronecker system with block rows
/// `(H_{k,j+1} U^(L)_{j+1,j+2})^T (x) G_{j,k}` (3 d' M rows, K*N*N_rx
/// columns), samples a random null-space combination, and certifies the
/// three rank conditions with a retry budget. `ch` is the active channel
/// (receive-reduced for Alignment II); each returned `F~_k` is `N x N_rx`.
pub fn solve_relay_precoders(
    ch: &ChannelRealization,
    precoders: &[CMat],
    d: usize,
    d_prime: usize,
    rng: &mut ChaCha8Rng,
    retries: &mut usize,
) -> Result<Vec<CMat>> {
    let (m, n, nr, k) = (ch.config.m, ch.config.n, ch.n_rx, ch.config.k);
    let tol = Tol::default();

    let basis = if d_prime == 0 {
        // Nothing to neutralize at the relays; any precoder works and the
        // certificate filters degenerate draws.
        None
    } else {
        let rows = 3 * d_prime * m;
        let cols = k * n * nr;
        if cols <= rows {
            return Err(Error::InfeasibleDimension(format!(
                "relay system is {rows}x{cols}; need K*N*N_rx > 3*d'*M"
            )));
        }
        let mut sys = CMat::zeros(rows, cols);
        for j in 0..3 {
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            let ul = precoders[u_index(j1, j2)].columns(0, d_prime).into_owned();
            for kk in 0..k {
                let hu = ch.h(kk, j1) * &ul;
                let block = kronecker(&hu.transpose(), ch.g(j, kk));
                sys.view_mut((j * d_prime * m, kk * n * nr), (d_prime * m, n * nr))
                    .copy_from(&block);
            }
        }
        let b = null_space_basis(&sys, &tol)?;
        if b.ncols() == 0 {
            return Err(Error::InfeasibleDimension(
                "relay system has an empty null space".into(),
            ));
        }
        Some(b)
    };

    for attempt in 0..RETRY_BUDGET {
        let f: Vec<CMat> = match &basis {
            None => (0..k).map(|_| gaussian(n, nr, rng)).collect(),
            Some(b) => {
                let mut v = b * gaussian(b.ncols(), 1, rng);
                let nrm = v.norm();
                v.unscale_mut(nrm);
                (0..k)
                    .map(|kk| {
                        unvectorize(&v.rows(kk * n * nr, n * nr).into_owned(), n, nr)
                            .expect("segment shape")
                    })
                    .collect()
            }
        };
        let expect = (3 * d - d_prime).min(m);
        let mut ok = true;
        for j in 0..3 {
            let x = certificate_matrix(ch, &f, precoders, d_prime, j);
            if numerical_rank(&x, &tol)? != expect {
                ok = false;
                break;
            }
        }
        if ok {
            *retries += attempt;
            return Ok(f);
        }
    }
    Err(Error::DegenerateInstance {
        stage: "relay-rank-certificate",
        attempts: RETRY_BUDGET,
    })
}

// ---------------------------------------------------------------------------
// Post-processors
// ---------------------------------------------------------------------------

/// Receive post-processors: `V_j` spans `2d` directions of the left null
/// space of the residual interference `sum_k G_{j,k} F_k H_{k,j+1} U^(R)`.
/// With `d' = d` there is nothing left to null and any orthonormal `2d x M`
/// matrix works.
pub fn build_postprocessors(
    ch: &ChannelRealization,
    f: &[CMat],
    precoders: &[CMat],
    d: usize,
    d_prime: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CMat>> {
    let m = ch.config.m;
    let tol = Tol::default();
    let mut out = Vec::with_capacity(3);
    for j in 0..3 {
        let v = if d_prime == d {
            gaussian(m, m, rng).qr().q().columns(0, 2 * d).adjoint()
        } else {
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            let ur = precoders[u_index(j1, j2)]
                .columns(d_prime, d - d_prime)
                .into_owned();
            let mut target = CMat::zeros(m, d - d_prime);
            for kk in 0..ch.config.k {
                target += ch.g(j, kk) * &f[kk] * (ch.h(kk, j1) * &ur);
            }
            let ln = crate::numerics::left_null_space_basis(&target, &tol)?;
            if ln.nrows() < 2 * d {
                return Err(Error::DegenerateInstance {
                    stage: "postprocessor-null-space",
                    attempts: 1,
                });
            }
            ln.rows(0, 2 * d).into_owned()
        };
        out.push(v);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// No-alignment scheme
// ---------------------------------------------------------------------------

/// Selection-matrix construction: `U_{j,j+1} = [I_d; 0]`, `U_{j,j+2} =
/// [0; I_d]`, `V_j = I_M`, with the relays neutralizing all six interference
/// terms through a `3M^2 x K N^2` Kronecker system.
pub fn design_no_alignment(
    ch: &ChannelRealization,
    rng: &mut ChaCha8Rng,
    retries: &mut usize,
) -> Result<(Vec<CMat>, Vec<CMat>, Vec<CMat>, usize)> {
    let (m, n, k) = (ch.config.m, ch.config.n, ch.config.k);
    if k * n * n <= 3 * m * m {
        return Err(Error::InfeasibleDimension(format!(
            "no-alignment needs K*N^2 > 3*M^2, got {} vs {}",
            k * n * n,
            3 * m * m
        )));
    }
    if m % 2 != 0 {
        return Err(Error::invalid(format!(
            "no-alignment needs even M, got {m} (wrap with a symbol extension)"
        )));
    }
    let d = m / 2;
    let tol = Tol::default();

    let mut precoders = Vec::with_capacity(6);
    for _j in 0..3 {
        let mut top = CMat::zeros(m, d);
        top.view_mut((0, 0), (d, d)).copy_from(&CMat::identity(d, d));
        let mut bot = CMat::zeros(m, d);
        bot.view_mut((d, 0), (d, d)).copy_from(&CMat::identity(d, d));
        precoders.push(top);
        precoders.push(bot);
    }

    // Six block rows: for each receiver j, both interfering precoders of the
    // (j+1, j+2) pair must be neutralized separately.
    let rows = 3 * m * m;
    let cols = k * n * n;
    let mut sys = CMat::zeros(rows, cols);
    for j in 0..3 {
        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
        for (s, (src, dst)) in [(j1, j2), (j2, j1)].into_iter().enumerate() {
            let row0 = (j * 2 + s) * d * m;
            for kk in 0..k {
                let hu = ch.h(kk, src) * &precoders[u_index(src, dst)];
                let block = kronecker(&hu.transpose(), ch.g(j, kk));
                sys.view_mut((row0, kk * n * n), (d * m, n * n))
                    .copy_from(&block);
            }
        }
    }
    let basis = null_space_basis(&sys, &tol)?;
    if basis.ncols() == 0 {
        return Err(Error::InfeasibleDimension(
            "no-alignment system has an empty null space".into(),
        ));
    }

    let postprocessors = vec![CMat::identity(m, m); 3];
    for attempt in 0..RETRY_BUDGET {
        let mut v = &basis * gaussian(basis.ncols(), 1, rng);
        let nrm = v.norm();
        v.unscale_mut(nrm);
        let f: Vec<CMat> = (0..k)
            .map(|kk| unvectorize(&v.rows(kk * n * n, n * n).into_owned(), n, n).expect("segment"))
            .collect();
        let mut ok = true;
        for j in 0..3 {
            let mut x = CMat::zeros(m, 2 * d);
            for kk in 0..k {
                x += ch.g(j, kk) * &f[kk] * effective_signal(ch, &precoders, kk, j);
            }
            if numerical_rank(&x, &tol)? != m {
                ok = false;
                break;
            }
        }
        if ok {
            *retries += attempt;
            return Ok((precoders, f, postprocessors, d));
        }
    }
    Err(Error::DegenerateInstance {
        stage: "no-alignment-rank-certificate",
        attempts: RETRY_BUDGET,
    })
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

fn build_once(
    ch: &ChannelRealization,
    strategy: &Strategy,
    rng: &mut ChaCha8Rng,
    retries: &mut usize,
) -> Result<(Vec<CMat>, Vec<CMat>, Vec<CMat>)> {
    let (m, n) = (ch.config.m, ch.config.n);
    let d = strategy.d;
    match strategy.kind {
        StrategyKind::AlignmentI => {
            let precoders = align_uplink(ch, d, rng, retries)?;
            let f = solve_relay_precoders(ch, &precoders, d, strategy.d_prime, rng, retries)?;
            let v = build_postprocessors(ch, &f, &precoders, d, strategy.d_prime, rng)?;
            Ok((precoders, f, v))
        }
        StrategyKind::AlignmentII => {
            let (np, reduced, precoders) = align_uplink_ii(ch, d, rng, retries)?;
            if strategy.n_prime.is_some_and(|x| x != np) {
                return Err(Error::invalid(format!(
                    "strategy N' = {:?} but (2M-d)/K = {np}",
                    strategy.n_prime
                )));
            }
            let ft = solve_relay_precoders(&reduced, &precoders, d, strategy.d_prime, rng, retries)?;
            let v = build_postprocessors(&reduced, &ft, &precoders, d, strategy.d_prime, rng)?;
            // Embed F~_k E: zero columns for the deactivated receive antennas.
            let f = ft
                .into_iter()
                .map(|fk| {
                    let mut full = CMat::zeros(n, n);
                    full.view_mut((0, 0), (n, np)).copy_from(&fk);
                    full
                })
                .collect();
            Ok((precoders, f, v))
        }
        StrategyKind::NoAlignment => {
            if d * 2 != m {
                return Err(Error::invalid(format!(
                    "no-alignment requires d = M/2, got d = {d}, M = {m}"
                )));
            }
            let (u, f, v, _) = design_no_alignment(ch, rng, retries)?;
            Ok((u, f, v))
        }
    }
}

/// Run the full pipeline for a strategy on a sampled channel.
///
/// Returns the design together with the channel it should be verified on:
/// the original realization (with processors zero-padded back to full size
/// under antenna disablement), or the extended super-channel when a symbol
/// extension is in play.
pub fn design(
    ch: &ChannelRealization,
    strategy: &Strategy,
    seed: u64,
) -> Result<(TransceiverDesign, ChannelRealization)> {
    let mut base = ch.clone();
    if let Some((ms, ns)) = strategy.disablement {
        base = restrict_channel(&base, ms, ns)?;
    }
    let design_ch = match &strategy.extension {
        Some(plan) => extend_channel(&base, plan)?,
        None => base,
    };
    let (m, _n) = (design_ch.config.m, design_ch.config.n);
    let d = strategy.d;
    let expected_dp = (3 * d).saturating_sub(m);
    if strategy.d_prime != expected_dp || expected_dp > d {
        return Err(Error::invalid(format!(
            "inconsistent split: d' = {} but max(0, 3d - M) = {expected_dp}, d = {d}",
            strategy.d_prime
        )));
    }

    // Verification channel: the untouched realization unless a symbol
    // extension changed the channel itself.
    let verify_ch = if strategy.extension.is_some() {
        design_ch.clone()
    } else {
        ch.clone()
    };
    let (mv, nv) = (verify_ch.config.m, verify_ch.config.n);

    if d == 0 {
        let design = TransceiverDesign {
            strategy: strategy.clone(),
            user_precoders: vec![CMat::zeros(mv, 0); 6],
            relay_precoders: vec![CMat::zeros(nv, nv); verify_ch.config.k],
            postprocessors: vec![CMat::zeros(0, mv); 3],
            retries: 0,
        };
        return Ok((design, verify_ch));
    }

    let embed = strategy.extension.is_none() && strategy.disablement.is_some();
    let mut total_retries = 0usize;
    let mut last_err: Option<Error> = None;
    for attempt in 0..RETRY_BUDGET {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt));
        let built = build_once(&design_ch, strategy, &mut rng, &mut total_retries);
        let (u, f, v) = match built {
            Ok(parts) => parts,
            Err(e @ Error::DegenerateInstance { .. }) => {
                last_err = Some(e);
                total_retries += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (u, f, v) = if embed {
            let md = design_ch.config.m;
            let nd = design_ch.config.n;
            let u = u
                .into_iter()
                .map(|x| {
                    let mut p = CMat::zeros(mv, d);
                    p.view_mut((0, 0), (md, d)).copy_from(&x);
                    p
                })
                .collect();
            let f = f
                .into_iter()
                .map(|x| {
                    let mut p = CMat::zeros(nv, nv);
                    p.view_mut((0, 0), (nd, nd)).copy_from(&x);
                    p
                })
                .collect();
            let v = v
                .into_iter()
                .map(|x| {
                    let mut p = CMat::zeros(2 * d, mv);
                    p.view_mut((0, 0), (2 * d, md)).copy_from(&x);
                    p
                })
                .collect();
            (u, f, v)
        } else {
            (u, f, v)
        };
        let design = TransceiverDesign {
            strategy: strategy.clone(),
            user_precoders: u,
            relay_precoders: f,
            postprocessors: v,
            retries: total_retries,
        };
        let report = verifier::verify(&verify_ch, &design)?;
        if report.passed {
            return Ok((design, verify_ch));
        }
        last_err = Some(Error::Unverified(format!(
            "residuals {:?}, ranks {:?}",
            report.neutralization_residuals, report.decodability_ranks
        )));
        total_retries += 1;
    }
    Err(last_err.unwrap_or(Error::DegenerateInstance {
        stage: "design",
        attempts: RETRY_BUDGET,
    }))
}
