//! Checkpoint file format.
//!
//! Layout: the magic bytes `XDRC1`, then `num_users`, `num_target_items`,
//! `num_source_items`, `d`, `vocab_size` and the variant tag as unsigned
//! 64-bit little-endian integers, then every tensor in declared order
//! (user_emb, target_emb, source_emb, word_key, word_value, cf_weight,
//! cf_bias, map_text, map_cf, map_transfer, fuse_weight), row-major, as
//! 32-bit little-endian floats. Save/load round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::params::{Dims, ModelParams, ParamGroup};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"XDRC1";

/// Length of the shared fusion layer for a variant tag: the full model fuses
/// three branches (3d), the single-ablation variants two (2d), the
/// interaction-only variant one (d).
pub fn fusion_width_for_tag(tag: u64, d: usize) -> Result<usize> {
    match tag {
        0 => Ok(3 * d),
        1 | 2 => Ok(2 * d),
        3 => Ok(d),
        _ => Err(Error::Config(format!("unknown variant tag {tag}"))),
    }
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, variant_tag: u64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    for v in [
        params.dims.num_users as u64,
        params.dims.num_target_items as u64,
        params.dims.num_source_items as u64,
        params.dims.d as u64,
        params.dims.vocab_size as u64,
        variant_tag,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for g in ParamGroup::ALL {
        for &x in params.group(g) {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, u64)> {
    let fail = |detail: String| Error::Checkpoint {
        path: path.to_path_buf(),
        detail,
    };
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|e| fail(format!("short header: {e}")))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(fail(format!("bad magic {magic:?}")));
    }

    let read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)
            .map_err(|e| fail(format!("short header: {e}")))?;
        Ok(u64::from_le_bytes(buf))
    };
    let num_users = read_u64(&mut r)? as usize;
    let num_target_items = read_u64(&mut r)? as usize;
    let num_source_items = read_u64(&mut r)? as usize;
    let d = read_u64(&mut r)? as usize;
    let vocab_size = read_u64(&mut r)? as usize;
    let variant_tag = read_u64(&mut r)?;

    let dims = Dims {
        num_users,
        num_target_items,
        num_source_items,
        d,
        vocab_size,
    };
    let fusion_width = fusion_width_for_tag(variant_tag, d)?;
    let mut params = ModelParams::zeros(dims, fusion_width);

    let mut buf = [0u8; 4];
    for g in ParamGroup::ALL {
        let slot = params.group_mut(g);
        for (k, x) in slot.iter_mut().enumerate() {
            r.read_exact(&mut buf).map_err(|e| {
                fail(format!(
                    "truncated tensor {} at entry {k}: {e}",
                    g.name()
                ))
            })?;
            *x = f32::from_le_bytes(buf) as f64;
        }
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(fail("trailing bytes after last tensor".into()));
    }
    Ok((params, variant_tag))
}
