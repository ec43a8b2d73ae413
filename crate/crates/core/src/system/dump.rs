//! Binary channel dump used for golden-trace tests.
//!
//! Layout: one line of JSON header terminated by `\n`, followed by
//! little-endian `f64` pairs `(re, im)`:
//!
//! 1. `direct[n][k][l]` (unmasked coefficients),
//! 2. `ap_to_ris[n][l][m]` (row-major per AP),
//! 3. `ris_to_user[k][m]`.
//!
//! The header records the dimensions, the seed and the blockage mask.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::channel::{BlockageMask, CMatrix, CVector, ChannelState};
use crate::error::{Error, Result};

pub const DUMP_FORMAT: &str = "ris-channel-dump";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub format: String,
    pub version: u32,
    pub n_aps: usize,
    pub antennas_per_ap: usize,
    pub n_users: usize,
    pub n_ris_elements: usize,
    pub seed: u64,
    pub blockage_mask: Vec<Vec<bool>>,
    pub layout: Vec<String>,
}

pub fn write_dump<W: Write>(state: &ChannelState, mut out: W) -> std::io::Result<()> {
    let header = DumpHeader {
        format: DUMP_FORMAT.into(),
        version: 1,
        n_aps: state.n_aps(),
        antennas_per_ap: state.antennas_per_ap(),
        n_users: state.n_users(),
        n_ris_elements: state.n_elements(),
        seed: state.seed(),
        blockage_mask: state.mask().as_rows(),
        layout: vec![
            "direct[n][k][l]".into(),
            "ap_to_ris[n][l][m]".into(),
            "ris_to_user[k][m]".into(),
        ],
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut put = |c: Complex64| -> std::io::Result<()> {
        out.write_all(&c.re.to_le_bytes())?;
        out.write_all(&c.im.to_le_bytes())
    };
    for n in 0..state.n_aps() {
        for k in 0..state.n_users() {
            for c in state.raw_direct(n, k).iter() {
                put(*c)?;
            }
        }
    }
    for n in 0..state.n_aps() {
        let h = state.ap_to_ris(n);
        for l in 0..h.nrows() {
            for m in 0..h.ncols() {
                put(h[(l, m)])?;
            }
        }
    }
    for k in 0..state.n_users() {
        for c in state.ris_to_user(k).iter() {
            put(*c)?;
        }
    }
    Ok(())
}

pub fn read_dump<R: BufRead>(mut input: R) -> Result<ChannelState> {
    let corrupt = |m: &str| Error::Corrupt {
        path: "<channel dump>".into(),
        message: m.to_string(),
    };
    let mut line = String::new();
    input
        .read_line(&mut line)
        .map_err(|e| Error::io("<channel dump>", e))?;
    let header: DumpHeader = serde_json::from_str(line.trim_end())?;
    if header.format != DUMP_FORMAT || header.version != 1 {
        return Err(corrupt("unknown format or version"));
    }
    let (n_aps, l, n_users, m) = (
        header.n_aps,
        header.antennas_per_ap,
        header.n_users,
        header.n_ris_elements,
    );
    let mut next = || -> Result<Complex64> {
        let mut buf = [0u8; 16];
        input
            .read_exact(&mut buf)
            .map_err(|_| corrupt("truncated payload"))?;
        let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
        Ok(Complex64::new(re, im))
    };
    let mut direct = Vec::with_capacity(n_aps * n_users);
    for _ in 0..n_aps * n_users {
        let mut v = CVector::zeros(l);
        for i in 0..l {
            v[i] = next()?;
        }
        direct.push(v);
    }
    let mut ap_to_ris = Vec::with_capacity(n_aps);
    for _ in 0..n_aps {
        let mut h = CMatrix::zeros(l, m);
        for row in 0..l {
            for col in 0..m {
                h[(row, col)] = next()?;
            }
        }
        ap_to_ris.push(h);
    }
    let mut ris_to_user = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        let mut g = CVector::zeros(m);
        for i in 0..m {
            g[i] = next()?;
        }
        ris_to_user.push(g);
    }
    let state = ChannelState::from_parts(n_aps, l, n_users, m, direct, ap_to_ris, ris_to_user)?
        .with_seed(header.seed);
    let mask = BlockageMask::from_rows(&header.blockage_mask)?;
    if mask.n_aps() == n_aps && mask.n_users() == n_users {
        state.apply_blockage(&mask)
    } else if header.blockage_mask.is_empty() {
        Ok(state)
    } else {
        Err(corrupt("mask dimensions disagree with header"))
    }
}
