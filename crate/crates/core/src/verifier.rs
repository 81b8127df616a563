//! Independent certification of a constructed design: interference
//! neutralization residuals, decodability ranks, and a high-SNR rate-slope
//! estimate of the achieved total DoF.
//!
//! All checks run on the channel the design was returned with — for the
//! receive-deactivated scheme that is the FULL downlink/uplink realization,
//! so the zero-column structure of the relay precoders is validated
//! end-to-end rather than assumed.

use serde::Serialize;

use crate::channel::ChannelRealization;
use crate::designer::{effective_signal, u_index, TransceiverDesign};
use crate::numerics::numerical_rank;
use crate::{CMat, Cx, Error, Result, Tol};

/// Residuals below this pass; two orders above the null-space construction
/// tolerance to absorb accumulation across relay sums.
pub const RESIDUAL_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    /// One relative residual per neutralization equation, receiver-major:
    /// `(j, j', j'') = (0,1,2), (0,2,1), (1,2,0), (1,0,2), (2,0,1), (2,1,0)`.
    pub neutralization_residuals: Vec<f64>,
    pub decodability_ranks: Vec<usize>,
    /// Self-interference is pre-cancelled at the receivers, not checked here.
    pub self_interference_note: &'static str,
    pub passed: bool,
    pub retries_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateTrace {
    pub snr_db: Vec<f64>,
    pub sum_rate_bits: Vec<f64>,
    pub slope_estimate: f64,
}

fn check_dims(ch: &ChannelRealization, design: &TransceiverDesign) -> Result<()> {
    let (m, n, k) = (ch.config.m, ch.config.n, ch.config.k);
    let d = design.d();
    if design.user_precoders.len() != 6
        || design.relay_precoders.len() != k
        || design.postprocessors.len() != 3
    {
        return Err(Error::DimensionMismatch(
            "design must carry 6 precoders, K relay precoders, 3 postprocessors".into(),
        ));
    }
    for u in &design.user_precoders {
        if u.shape() != (m, d) {
            return Err(Error::DimensionMismatch(format!(
                "user precoder is {}x{}, expected {m}x{d}",
                u.nrows(),
                u.ncols()
            )));
        }
    }
    for f in &design.relay_precoders {
        if f.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "relay precoder is {}x{}, expected {n}x{n}",
                f.nrows(),
                f.ncols()
            )));
        }
    }
    for v in &design.postprocessors {
        if v.shape() != (2 * d, m) {
            return Err(Error::DimensionMismatch(format!(
                "postprocessor is {}x{}, expected {}x{m}",
                v.nrows(),
                v.ncols(),
                2 * d
            )));
        }
    }
    Ok(())
}

/// The six interference equations at each receiver `j`: the signals of the
/// pair `(j+1, j+2)` exchanged in both directions.
fn interference_triples() -> [(usize, usize, usize); 6] {
    [
        (0, 1, 2),
        (0, 2, 1),
        (1, 2, 0),
        (1, 0, 2),
        (2, 0, 1),
        (2, 1, 0),
    ]
}

/// Relative neutralization residual per equation:
/// `||sum_k V_j G_{j,k} F_k H_{k,j'} U_{j',j''}||_F` over the sum of the
/// per-relay term norms, so exact cross-relay cancellation (large terms,
/// tiny sum) measures as small.
///
/// A denominator that is itself negligible against the factor-norm scale
/// counts as 0 (trivially neutralized): with a single relay the whole term
/// vanishes to rounding error and the raw tiny/tiny ratio would be
/// meaningless.
pub fn neutralization_residuals(
    ch: &ChannelRealization,
    design: &TransceiverDesign,
) -> Result<Vec<f64>> {
    check_dims(ch, design)?;
    let d = design.d();
    let mut out = Vec::with_capacity(6);
    for (j, jp, jpp) in interference_triples() {
        let mut sum = CMat::zeros(2 * d, d);
        let mut den = 0.0;
        let mut scale = 0.0;
        for k in 0..ch.config.k {
            let v = &design.postprocessors[j];
            let f = &design.relay_precoders[k];
            let u = &design.user_precoders[u_index(jp, jpp)];
            let term = v * ch.g(j, k) * f * ch.h(k, jp) * u;
            den += term.norm();
            scale += v.norm() * ch.g(j, k).norm() * f.norm() * ch.h(k, jp).norm() * u.norm();
            sum += term;
        }
        out.push(if den <= 1e-10 * scale {
            0.0
        } else {
            sum.norm() / den
        });
    }
    Ok(out)
}

fn rank_or_zero(a: &CMat, tol: &Tol) -> Result<usize> {
    if a.is_empty() {
        return Ok(0);
    }
    numerical_rank(a, tol)
}

/// Effective desired channel `A_j = sum_k V_j G_{j,k} F_k W_{k,j}` (`2d x 2d`).
fn desired_channel(ch: &ChannelRealization, design: &TransceiverDesign, j: usize) -> CMat {
    let d = design.d();
    let mut a = CMat::zeros(2 * d, 2 * d);
    for k in 0..ch.config.k {
        a += &design.postprocessors[j]
            * ch.g(j, k)
            * &design.relay_precoders[k]
            * effective_signal(ch, &design.user_precoders, k, j);
    }
    a
}

/// Rank of the effective desired channel at each receiver; decodability of
/// both messages requires `2d`.
pub fn decodability_ranks(
    ch: &ChannelRealization,
    design: &TransceiverDesign,
) -> Result<Vec<usize>> {
    check_dims(ch, design)?;
    let tol = Tol::default();
    (0..3)
        .map(|j| rank_or_zero(&desired_channel(ch, design, j), &tol))
        .collect()
}

pub fn verify(ch: &ChannelRealization, design: &TransceiverDesign) -> Result<VerificationReport> {
    let residuals = neutralization_residuals(ch, design)?;
    let ranks = decodability_ranks(ch, design)?;
    let d = design.d();
    let passed = residuals.iter().all(|&r| r <= RESIDUAL_THRESHOLD)
        && ranks.iter().all(|&r| r == 2 * d);
    Ok(VerificationReport {
        neutralization_residuals: residuals,
        decodability_ranks: ranks,
        self_interference_note: "self-interference pre-cancelled at receivers; not checked",
        passed,
        retries_used: design.retries,
    })
}

fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).unscale(2.0)
}

/// `log2 det(I + S)` for Hermitian PSD `S`, via Cholesky of `I + S`.
fn log2_det_i_plus(s: &CMat) -> Result<f64> {
    let n = s.nrows();
    let x = hermitize(&(CMat::identity(n, n) + s));
    let chol = nalgebra::linalg::Cholesky::new(x).ok_or_else(|| {
        Error::Unverified("rate matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let mut ln_det = 0.0;
    for i in 0..n {
        ln_det += 2.0 * l[(i, i)].re.ln();
    }
    Ok(ln_det / std::f64::consts::LN_2)
}

/// Estimate the achieved total DoF as half the slope of the sum rate versus
/// `log2 P` between the first and last SNR points.
///
/// All relay precoders are scaled by one COMMON factor so the busiest
/// relay's expected output power equals `P` — per-relay scaling would break
/// the cross-relay neutralization identities. Per-stream transmit power is
/// `P/(2d)`; noise power `sigma2` applies at relays and receivers.
pub fn estimate_rate_slope(
    ch: &ChannelRealization,
    design: &TransceiverDesign,
    snr_db: &[f64],
    sigma2: f64,
) -> Result<RateTrace> {
    if snr_db.len() < 2 {
        return Err(Error::invalid("need at least 2 SNR points"));
    }
    if sigma2 <= 0.0 {
        return Err(Error::invalid("noise power must be positive"));
    }
    let report = verify(ch, design)?;
    if !report.passed {
        return Err(Error::Unverified(
            "rate slope requested for a design that fails verification".into(),
        ));
    }
    let d = design.d();
    if d == 0 {
        return Ok(RateTrace {
            snr_db: snr_db.to_vec(),
            sum_rate_bits: vec![0.0; snr_db.len()],
            slope_estimate: 0.0,
        });
    }
    let (n, kcount) = (ch.config.n, ch.config.k);

    let mut rates = Vec::with_capacity(snr_db.len());
    for &db in snr_db {
        let p = 10f64.powf(db / 10.0);
        // Relay receive covariance and the common output-power scaling.
        let mut max_tx = 0.0f64;
        for k in 0..kcount {
            let mut r = CMat::identity(n, n) * Cx::new(sigma2, 0.0);
            for j in 0..3 {
                for jp in [(j + 1) % 3, (j + 2) % 3] {
                    let hu = ch.h(k, j) * &design.user_precoders[u_index(j, jp)];
                    r += (&hu * hu.adjoint()) * Cx::new(p / (2.0 * d as f64), 0.0);
                }
            }
            let fr = &design.relay_precoders[k] * r * design.relay_precoders[k].adjoint();
            max_tx = max_tx.max(fr.trace().re);
        }
        if max_tx <= 0.0 {
            return Err(Error::Unverified("relay precoders carry no power".into()));
        }
        let gamma2 = p / max_tx;
        let gamma = gamma2.sqrt();

        let mut rate = 0.0;
        for j in 0..3 {
            let a = desired_channel(ch, design, j) * Cx::new(gamma, 0.0);
            // Colored noise: forwarded relay noise plus receiver noise.
            let mut c = (&design.postprocessors[j] * design.postprocessors[j].adjoint())
                * Cx::new(sigma2, 0.0);
            for k in 0..kcount {
                let vgf = &design.postprocessors[j] * ch.g(j, k) * &design.relay_precoders[k];
                c += (&vgf * vgf.adjoint()) * Cx::new(sigma2 * gamma2, 0.0);
            }
            let chol = nalgebra::linalg::Cholesky::new(hermitize(&c)).ok_or_else(|| {
                Error::Unverified("noise covariance is not positive definite".into())
            })?;
            let ci_a = chol.solve(&a);
            let s = (a.adjoint() * ci_a) * Cx::new(p / (2.0 * d as f64), 0.0);
            rate += log2_det_i_plus(&hermitize(&s))?;
        }
        rates.push(rate);
    }

    let (p_lo, p_hi) = (snr_db[0], snr_db[snr_db.len() - 1]);
    let dlog2p = (p_hi - p_lo) / 10.0 * 10f64.log2();
    let slope_estimate = 0.5 * (rates[rates.len() - 1] - rates[0]) / dlog2p;
    Ok(RateTrace {
        snr_db: snr_db.to_vec(),
        sum_rate_bits: rates,
        slope_estimate,
    })
}

/// CSV emission for rate traces: `snr_db,sum_rate_bits`.
pub fn write_rate_csv<W: std::io::Write>(trace: &RateTrace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "snr_db,sum_rate_bits")?;
    for (db, r) in trace.snr_db.iter().zip(&trace.sum_rate_bits) {
        writeln!(w, "{:.11e},{:.11e}", db, r)?;
    }
    Ok(())
}
