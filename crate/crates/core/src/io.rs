//! JSON serialization of channels, designs and verification reports, plus the
//! run manifest embedded in every emitted artifact.
//!
//! Matrices are stored dense and row-major as `[re, im]` pairs so the files
//! stay language-neutral; channel blocks carry their `(k, j)` labels and user
//! precoders their `(j, j')` pair.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SystemConfig};
use crate::designer::{u_index, Strategy, TransceiverDesign};
use crate::verifier::VerificationReport;
use crate::{CMat, Cx, Error, Result};

fn to_entries(a: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(a.nrows() * a.ncols());
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            out.push([a[(r, c)].re, a[(r, c)].im]);
        }
    }
    out
}

fn from_entries(rows: usize, cols: usize, entries: &[[f64; 2]]) -> Result<CMat> {
    if entries.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} entries cannot fill a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    Ok(CMat::from_fn(rows, cols, |r, c| {
        let e = entries[r * cols + c];
        Cx::new(e[0], e[1])
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelBlockDto {
    pub k: usize,
    pub j: usize,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDto {
    pub config: SystemConfig,
    pub seed: u64,
    pub n_rx: usize,
    #[serde(rename = "H")]
    pub h: Vec<ChannelBlockDto>,
    #[serde(rename = "G")]
    pub g: Vec<ChannelBlockDto>,
}

pub fn channel_to_dto(ch: &ChannelRealization) -> ChannelDto {
    let k = ch.config.k;
    let mut h = Vec::with_capacity(3 * k);
    for kk in 0..k {
        for j in 0..3 {
            let b = ch.h(kk, j);
            h.push(ChannelBlockDto {
                k: kk,
                j,
                rows: b.nrows(),
                cols: b.ncols(),
                entries: to_entries(b),
            });
        }
    }
    let mut g = Vec::with_capacity(3 * k);
    for j in 0..3 {
        for kk in 0..k {
            let b = ch.g(j, kk);
            g.push(ChannelBlockDto {
                k: kk,
                j,
                rows: b.nrows(),
                cols: b.ncols(),
                entries: to_entries(b),
            });
        }
    }
    ChannelDto {
        config: ch.config,
        seed: ch.seed,
        n_rx: ch.n_rx,
        h,
        g,
    }
}

pub fn channel_from_dto(dto: &ChannelDto) -> Result<ChannelRealization> {
    let k = dto.config.k;
    let mut uplink = vec![None; 3 * k];
    for b in &dto.h {
        if b.k >= k || b.j >= 3 {
            return Err(Error::DimensionMismatch("uplink block label out of range".into()));
        }
        uplink[b.k * 3 + b.j] = Some(from_entries(b.rows, b.cols, &b.entries)?);
    }
    let mut downlink = vec![None; 3 * k];
    for b in &dto.g {
        if b.k >= k || b.j >= 3 {
            return Err(Error::DimensionMismatch("downlink block label out of range".into()));
        }
        downlink[b.j * k + b.k] = Some(from_entries(b.rows, b.cols, &b.entries)?);
    }
    let unwrap_all = |v: Vec<Option<CMat>>| -> Result<Vec<CMat>> {
        v.into_iter()
            .map(|x| x.ok_or_else(|| Error::DimensionMismatch("missing channel block".into())))
            .collect()
    };
    ChannelRealization::from_blocks(
        dto.config,
        dto.seed,
        dto.n_rx,
        unwrap_all(uplink)?,
        unwrap_all(downlink)?,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDto {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

fn matrix_to_dto(a: &CMat) -> MatrixDto {
    MatrixDto {
        rows: a.nrows(),
        cols: a.ncols(),
        entries: to_entries(a),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserPrecoderDto {
    pub j: usize,
    pub jp: usize,
    #[serde(flatten)]
    pub matrix: MatrixDto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignDto {
    #[serde(rename = "U")]
    pub u: Vec<UserPrecoderDto>,
    #[serde(rename = "F")]
    pub f: Vec<MatrixDto>,
    #[serde(rename = "V")]
    pub v: Vec<MatrixDto>,
    pub retries: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDto {
    pub residuals: Vec<f64>,
    pub ranks: Vec<usize>,
    pub self_interference_note: String,
    pub passed: bool,
    pub retries_used: usize,
}

impl From<&VerificationReport> for ReportDto {
    fn from(r: &VerificationReport) -> Self {
        Self {
            residuals: r.neutralization_residuals.clone(),
            ranks: r.decodability_ranks.clone(),
            self_interference_note: r.self_interference_note.to_string(),
            passed: r.passed,
            retries_used: r.retries_used,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// Complete on-disk record of one design run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub channel: ChannelDto,
    pub strategy: Strategy,
    pub design: DesignDto,
    pub report: ReportDto,
}

pub fn design_to_dto(design: &TransceiverDesign) -> DesignDto {
    let mut u = Vec::with_capacity(6);
    for j in 0..3 {
        for jp in [(j + 1) % 3, (j + 2) % 3] {
            u.push(UserPrecoderDto {
                j,
                jp,
                matrix: matrix_to_dto(&design.user_precoders[u_index(j, jp)]),
            });
        }
    }
    DesignDto {
        u,
        f: design.relay_precoders.iter().map(matrix_to_dto).collect(),
        v: design.postprocessors.iter().map(matrix_to_dto).collect(),
        retries: design.retries,
    }
}

pub fn design_from_dto(strategy: &Strategy, dto: &DesignDto) -> Result<TransceiverDesign> {
    if dto.u.len() != 6 || dto.v.len() != 3 {
        return Err(Error::DimensionMismatch(
            "design file must carry 6 precoders and 3 postprocessors".into(),
        ));
    }
    let mut user_precoders = vec![None; 6];
    for p in &dto.u {
        if p.j >= 3 || p.jp >= 3 || p.j == p.jp {
            return Err(Error::DimensionMismatch("bad precoder pair label".into()));
        }
        user_precoders[u_index(p.j, p.jp)] =
            Some(from_entries(p.matrix.rows, p.matrix.cols, &p.matrix.entries)?);
    }
    let user_precoders: Vec<CMat> = user_precoders
        .into_iter()
        .map(|x| x.ok_or_else(|| Error::DimensionMismatch("missing user precoder".into())))
        .collect::<Result<_>>()?;
    let relay_precoders = dto
        .f
        .iter()
        .map(|m| from_entries(m.rows, m.cols, &m.entries))
        .collect::<Result<_>>()?;
    let postprocessors = dto
        .v
        .iter()
        .map(|m| from_entries(m.rows, m.cols, &m.entries))
        .collect::<Result<_>>()?;
    Ok(TransceiverDesign {
        strategy: strategy.clone(),
        user_precoders,
        relay_precoders,
        postprocessors,
        retries: dto.retries,
    })
}
