//! Versioned binary checkpoint: network topology, decision state and every
//! parameter tensor, with a bit-exact round-trip guarantee.
//!
//! Layout (all integers and reals little-endian):
//!
//! ```text
//! magic "DMMCKPT" + version byte
//! u32 J, then per attribute: u32 name length, name bytes, u8 group tag
//! u8 grouping flag
//! u32 landmark count
//! backbone: u32 in_channels, u32 block count, u32 per block,
//!           u32 conv kernel, u32 pool size
//! heads: u32 objective hidden, u32 x2 subjective hidden, u32 fld hidden
//! decision state: u64 update count, u64 epoch, J x f64 tau, J x f64 lambda
//! u32 tensor count, then per tensor: u32 ndim, u32 per dim, f64 data
//! ```
//!
//! The decision thresholds live in the checkpoint because label predictions
//! are a function of (network, tau); evaluating a model trained with
//! adaptive thresholds needs both halves.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{
    build_network, AttributeGroup, AttributeSpec, BackboneConfig, DmmNetwork, HeadConfig,
    NetworkConfig,
};
use crate::scheduler::SchedulerState;

const MAGIC: &[u8; 7] = b"DMMCKPT";
const VERSION: u8 = 1;

/// Decision-level state stored alongside the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionState {
    pub tau: Vec<f64>,
    pub lambda: Vec<f64>,
    pub update_count: u64,
    pub epoch: u64,
}

impl DecisionState {
    pub fn from_scheduler(state: &SchedulerState) -> Self {
        DecisionState {
            tau: state.tau().to_vec(),
            lambda: state.lambda().to_vec(),
            update_count: state.update_count(),
            epoch: state.epoch(),
        }
    }

    pub fn initial(attributes: usize) -> Self {
        DecisionState {
            tau: vec![0.0; attributes],
            lambda: vec![1.0; attributes],
            update_count: 0,
            epoch: 1,
        }
    }
}

pub fn save_checkpoint(path: &Path, net: &DmmNetwork, decision: &DecisionState) -> Result<()> {
    let mut buf = Vec::new();
    write_all(&mut buf, net, decision).expect("in-memory write cannot fail");
    fs::write(path, &buf).map_err(|e| Error::io(path, e))
}

fn write_all(w: &mut impl Write, net: &DmmNetwork, decision: &DecisionState) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;

    let spec = net.spec();
    write_u32(w, spec.len() as u32)?;
    for (name, group) in spec.names().iter().zip(spec.groups()) {
        write_u32(w, name.len() as u32)?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[match group {
            AttributeGroup::Objective => 0,
            AttributeGroup::Subjective => 1,
        }])?;
    }

    let config = net.config();
    w.write_all(&[config.grouped as u8])?;
    write_u32(w, net.landmark_count() as u32)?;
    write_u32(w, config.backbone.in_channels as u32)?;
    write_u32(w, config.backbone.block_channels.len() as u32)?;
    for &c in &config.backbone.block_channels {
        write_u32(w, c as u32)?;
    }
    write_u32(w, config.backbone.conv_kernel as u32)?;
    write_u32(w, config.backbone.pool_size as u32)?;
    write_u32(w, config.heads.objective_hidden as u32)?;
    write_u32(w, config.heads.subjective_hidden.0 as u32)?;
    write_u32(w, config.heads.subjective_hidden.1 as u32)?;
    write_u32(w, config.heads.fld_hidden as u32)?;

    w.write_all(&decision.update_count.to_le_bytes())?;
    w.write_all(&decision.epoch.to_le_bytes())?;
    for &v in &decision.tau {
        w.write_all(&v.to_le_bytes())?;
    }
    for &v in &decision.lambda {
        w.write_all(&v.to_le_bytes())?;
    }

    let tensors = net.param_tensors();
    write_u32(w, tensors.len() as u32)?;
    for t in tensors {
        write_u32(w, t.shape().len() as u32)?;
        for &d in t.shape() {
            write_u32(w, d as u32)?;
        }
        for &v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(DmmNetwork, DecisionState)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Cursor { bytes: &bytes, pos: 0 };

    let magic = r.take(7)?;
    if magic != MAGIC {
        return Err(Error::CheckpointFormat("bad magic string".into()));
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(Error::CheckpointFormat(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }

    let j = r.u32()? as usize;
    let mut names = Vec::with_capacity(j);
    let mut groups = Vec::with_capacity(j);
    for _ in 0..j {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::CheckpointFormat("attribute name is not utf-8".into()))?;
        names.push(name);
        groups.push(match r.take(1)?[0] {
            0 => AttributeGroup::Objective,
            1 => AttributeGroup::Subjective,
            g => return Err(Error::CheckpointFormat(format!("unknown group tag {g}"))),
        });
    }
    let spec = AttributeSpec::new(names, groups)?;

    let grouped = r.take(1)?[0] != 0;
    let landmark_count = r.u32()? as usize;
    let in_channels = r.u32()? as usize;
    let n_blocks = r.u32()? as usize;
    let mut block_channels = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        block_channels.push(r.u32()? as usize);
    }
    let conv_kernel = r.u32()? as usize;
    let pool_size = r.u32()? as usize;
    let objective_hidden = r.u32()? as usize;
    let subj0 = r.u32()? as usize;
    let subj1 = r.u32()? as usize;
    let fld_hidden = r.u32()? as usize;

    let config = NetworkConfig {
        backbone: BackboneConfig {
            in_channels,
            block_channels,
            conv_kernel,
            pool_size,
        },
        heads: HeadConfig {
            objective_hidden,
            subjective_hidden: (subj0, subj1),
            fld_hidden,
        },
        grouped,
    };

    let update_count = r.u64()?;
    let epoch = r.u64()?;
    let mut tau = Vec::with_capacity(j);
    for _ in 0..j {
        tau.push(r.f64()?);
    }
    let mut lambda = Vec::with_capacity(j);
    for _ in 0..j {
        lambda.push(r.f64()?);
    }

    // rebuild the topology, then overwrite every parameter tensor
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = build_network(&spec, &config, landmark_count, &mut rng)?;
    let n_tensors = r.u32()? as usize;
    {
        let mut targets = net.param_tensors_mut();
        if n_tensors != targets.len() {
            return Err(Error::CheckpointFormat(format!(
                "checkpoint has {n_tensors} tensors, topology needs {}",
                targets.len()
            )));
        }
        for target in targets.iter_mut() {
            let ndim = r.u32()? as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                dims.push(r.u32()? as usize);
            }
            if dims != target.shape() {
                return Err(Error::CheckpointFormat(format!(
                    "tensor shape {dims:?} does not match topology shape {:?}",
                    target.shape()
                )));
            }
            for v in target.data_mut() {
                *v = r.f64()?;
            }
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::CheckpointFormat(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }

    Ok((
        net,
        DecisionState {
            tau,
            lambda,
            update_count,
            epoch,
        },
    ))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::CheckpointFormat("truncated file".into()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn write_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}
