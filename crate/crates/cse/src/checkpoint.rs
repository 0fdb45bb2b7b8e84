//! Versioned training checkpoints.
//!
//! CKP1 layout: magic `CKP1`, u32 LE version, u32 LE record count, then
//! records of `u16 LE name length, name bytes, u8 rank, rank u32 LE dims,
//! product(dims) f64 LE values` (rank 0 carries a single value). Everything
//! — parameters, optimizer velocities, RNG position, normalization stats,
//! the epoch counter and the whole training config — lives in named records,
//! and records are written in a fixed order so save/load/save is
//! byte-identical.

use std::collections::HashMap;
use std::path::Path;

use cse_core::features::NormStats;
use cse_core::losses::{AcseWeights, CseWeights};
use cse_core::params::Tensors;
use cse_core::train::{AcseEpochs, CseStageEpochs, Regime, RngSnapshot, TrainConfig, Trainer};
use cse_core::Mat;

use crate::error::{Error, Result};

const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub trainer: Trainer,
    pub noisy_stats: NormStats,
    pub clean_stats: NormStats,
}

struct Record {
    name: String,
    dims: Vec<u32>,
    values: Vec<f64>,
}

struct Writer {
    records: Vec<Record>,
}

impl Writer {
    fn scalar(&mut self, name: &str, v: f64) {
        self.records.push(Record { name: name.into(), dims: vec![], values: vec![v] });
    }

    fn vector(&mut self, name: &str, v: &[f64]) {
        self.records.push(Record {
            name: name.into(),
            dims: vec![v.len() as u32],
            values: v.to_vec(),
        });
    }

    fn matrix(&mut self, name: &str, m: &Mat) {
        self.records.push(Record {
            name: name.into(),
            dims: vec![m.rows() as u32, m.cols() as u32],
            values: m.as_slice().to_vec(),
        });
    }

    fn tensors<T: Tensors>(&mut self, prefix: &str, t: &T) {
        for (name, m) in t.tensors() {
            self.matrix(&format!("{prefix}.{name}"), m);
        }
    }

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"CKP1");
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for r in &self.records {
            out.extend_from_slice(&(r.name.len() as u16).to_le_bytes());
            out.extend_from_slice(r.name.as_bytes());
            out.push(r.dims.len() as u8);
            for d in &r.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in &r.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

struct Reader<'p> {
    path: &'p Path,
    records: HashMap<String, Record>,
}

impl<'p> Reader<'p> {
    fn parse(path: &'p Path, bytes: &[u8]) -> Result<Self> {
        let fail = |reason: String| Error::format(path, reason);
        if bytes.len() < 12 || &bytes[0..4] != b"CKP1" {
            return Err(fail("not a CKP1 file".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(fail(format!("unsupported checkpoint version {version}")));
        }
        let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut pos = 12;
        let mut records = HashMap::new();
        for _ in 0..count {
            if pos + 2 > bytes.len() {
                return Err(fail("truncated record header".into()));
            }
            let name_len = u16::from_le_bytes(bytes[pos..pos + 2].try_into().unwrap()) as usize;
            pos += 2;
            if pos + name_len + 1 > bytes.len() {
                return Err(fail("truncated record name".into()));
            }
            let name = String::from_utf8(bytes[pos..pos + name_len].to_vec())
                .map_err(|_| fail("record name is not UTF-8".into()))?;
            pos += name_len;
            let rank = bytes[pos] as usize;
            pos += 1;
            if pos + rank * 4 > bytes.len() {
                return Err(fail("truncated dims".into()));
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()));
                pos += 4;
            }
            let n: usize = if rank == 0 {
                1
            } else {
                dims.iter().map(|&d| d as usize).product()
            };
            if pos + n * 8 > bytes.len() {
                return Err(fail(format!("truncated payload for '{name}'")));
            }
            let values: Vec<f64> = bytes[pos..pos + n * 8]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            pos += n * 8;
            records.insert(name, Record { name: String::new(), dims, values });
        }
        if pos != bytes.len() {
            return Err(fail("trailing bytes after final record".into()));
        }
        Ok(Reader { path, records })
    }

    fn scalar(&self, name: &str) -> Result<f64> {
        let r = self
            .records
            .get(name)
            .ok_or_else(|| Error::format(self.path, format!("missing record '{name}'")))?;
        Ok(r.values[0])
    }

    fn usize_(&self, name: &str) -> Result<usize> {
        Ok(self.scalar(name)? as usize)
    }

    fn vector(&self, name: &str) -> Result<&[f64]> {
        let r = self
            .records
            .get(name)
            .ok_or_else(|| Error::format(self.path, format!("missing record '{name}'")))?;
        Ok(&r.values)
    }

    fn tensors<T: Tensors>(&self, prefix: &str, t: &mut T) -> Result<()> {
        for (name, m) in t.tensors_mut() {
            let full = format!("{prefix}.{name}");
            let r = self
                .records
                .get(&full)
                .ok_or_else(|| Error::format(self.path, format!("missing tensor '{full}'")))?;
            if r.dims.len() != 2
                || r.dims[0] as usize != m.rows()
                || r.dims[1] as usize != m.cols()
            {
                return Err(Error::format(
                    self.path,
                    format!("tensor '{full}' has shape {:?}, expected {}x{}", r.dims, m.rows(), m.cols()),
                ));
            }
            m.as_mut_slice().copy_from_slice(&r.values);
        }
        Ok(())
    }
}

fn split_u64(v: u64) -> (f64, f64) {
    ((v & 0xffff_ffff) as f64, (v >> 32) as f64)
}

fn join_u64(lo: f64, hi: f64) -> u64 {
    (lo as u64) | ((hi as u64) << 32)
}

pub fn save(path: &Path, ckp: &Checkpoint) -> Result<()> {
    let tr = &ckp.trainer;
    let cfg = &tr.cfg;
    let mut w = Writer { records: Vec::new() };

    w.scalar("cfg.regime", regime_code(cfg.regime) as f64);
    w.scalar("cfg.baseline_epochs", cfg.baseline_epochs as f64);
    w.scalar("cfg.cse.pretrain_f", cfg.cse_stages.pretrain_f as f64);
    w.scalar("cfg.cse.pretrain_g", cfg.cse_stages.pretrain_g as f64);
    w.scalar("cfg.cse.forward", cfg.cse_stages.forward as f64);
    w.scalar("cfg.cse.full", cfg.cse_stages.full as f64);
    w.scalar("cfg.acse.init", cfg.acse_epochs.init as f64);
    w.scalar("cfg.acse.joint", cfg.acse_epochs.joint as f64);
    let (lo, hi) = split_u64(cfg.seed);
    w.scalar("cfg.seed_lo", lo);
    w.scalar("cfg.seed_hi", hi);
    w.vector(
        "cfg.cse_weights",
        &[cfg.cse_weights.lambda1, cfg.cse_weights.lambda2, cfg.cse_weights.lambda3],
    );
    w.vector(
        "cfg.acse_weights",
        &[
            cfg.acse_weights.alpha1,
            cfg.acse_weights.alpha2,
            cfg.acse_weights.alpha3,
            cfg.acse_weights.alpha4,
            cfg.acse_weights.alpha5,
        ],
    );
    w.scalar("cfg.learning_rate", cfg.learning_rate);
    w.scalar("cfg.momentum", cfg.momentum);
    w.scalar("cfg.has_clip", cfg.clip.is_some() as u8 as f64);
    w.scalar("cfg.clip", cfg.clip.unwrap_or(0.0));
    w.scalar("cfg.eval_every", cfg.eval_every as f64);
    w.scalar("cfg.record_steps", cfg.record_steps as u8 as f64);
    w.scalar("cfg.delta_window", cfg.delta_window as f64);

    w.scalar("state.epoch", tr.epoch as f64);
    let snap = tr.rng_snapshot();
    w.vector("state.rng_seed", &snap.seed.map(|b| b as f64));
    let wp = snap.word_pos;
    w.vector(
        "state.rng_word_pos",
        &[
            (wp & 0xffff_ffff) as f64,
            ((wp >> 32) & 0xffff_ffff) as f64,
            ((wp >> 64) & 0xffff_ffff) as f64,
            ((wp >> 96) & 0xffff_ffff) as f64,
        ],
    );

    w.vector(
        "spec.f",
        &[
            tr.f.spec.input_dim as f64,
            tr.f.spec.output_dim as f64,
            tr.f.spec.hidden as f64,
            tr.f.spec.proj as f64,
            tr.f.spec.layers as f64,
        ],
    );
    w.tensors("net.f", &tr.f.params);
    w.tensors("opt.f", &tr.opt_f.velocity);

    w.scalar("has.g", tr.g.is_some() as u8 as f64);
    if let Some(g) = &tr.g {
        w.vector(
            "spec.g",
            &[
                g.spec.input_dim as f64,
                g.spec.output_dim as f64,
                g.spec.hidden as f64,
                g.spec.proj as f64,
                g.spec.layers as f64,
            ],
        );
        w.tensors("net.g", &g.params);
        w.tensors("opt.g", &tr.opt_g.as_ref().expect("G optimizer").velocity);
    }
    w.scalar("has.d", tr.d_noisy.is_some() as u8 as f64);
    if let (Some(dn), Some(dc)) = (&tr.d_noisy, &tr.d_clean) {
        w.vector("spec.d_noisy", &[dn.spec.input_dim as f64, dn.spec.hidden as f64]);
        w.vector("spec.d_clean", &[dc.spec.input_dim as f64, dc.spec.hidden as f64]);
        w.tensors("net.d_noisy", &dn.params);
        w.tensors("net.d_clean", &dc.params);
        w.tensors("opt.d_noisy", &tr.opt_d_noisy.as_ref().expect("D_U optimizer").velocity);
        w.tensors("opt.d_clean", &tr.opt_d_clean.as_ref().expect("D_V optimizer").velocity);
    }

    w.vector("stats.noisy.mean", &ckp.noisy_stats.mean);
    w.vector("stats.noisy.std", &ckp.noisy_stats.std);
    w.vector("stats.clean.mean", &ckp.clean_stats.mean);
    w.vector("stats.clean.std", &ckp.clean_stats.std);

    std::fs::write(path, w.encode()).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    use cse_core::disc::DiscSpec;
    use cse_core::lstm::MappingSpec;

    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let r = Reader::parse(path, &bytes)?;

    let cse_w = r.vector("cfg.cse_weights")?;
    let acse_w = r.vector("cfg.acse_weights")?;
    let cfg = TrainConfig {
        regime: regime_from_code(r.usize_("cfg.regime")? as u8)
            .ok_or_else(|| Error::format(path, "bad regime code"))?,
        baseline_epochs: r.usize_("cfg.baseline_epochs")?,
        cse_stages: CseStageEpochs {
            pretrain_f: r.usize_("cfg.cse.pretrain_f")?,
            pretrain_g: r.usize_("cfg.cse.pretrain_g")?,
            forward: r.usize_("cfg.cse.forward")?,
            full: r.usize_("cfg.cse.full")?,
        },
        acse_epochs: AcseEpochs {
            init: r.usize_("cfg.acse.init")?,
            joint: r.usize_("cfg.acse.joint")?,
        },
        seed: join_u64(r.scalar("cfg.seed_lo")?, r.scalar("cfg.seed_hi")?),
        cse_weights: CseWeights {
            lambda1: cse_w[0],
            lambda2: cse_w[1],
            lambda3: cse_w[2],
        },
        acse_weights: AcseWeights {
            alpha1: acse_w[0],
            alpha2: acse_w[1],
            alpha3: acse_w[2],
            alpha4: acse_w[3],
            alpha5: acse_w[4],
        },
        learning_rate: r.scalar("cfg.learning_rate")?,
        momentum: r.scalar("cfg.momentum")?,
        clip: if r.scalar("cfg.has_clip")? != 0.0 {
            Some(r.scalar("cfg.clip")?)
        } else {
            None
        },
        eval_every: r.usize_("cfg.eval_every")?,
        record_steps: r.scalar("cfg.record_steps")? != 0.0,
        delta_window: r.usize_("cfg.delta_window")?,
    };

    let read_map_spec = |name: &str| -> Result<MappingSpec> {
        let v = r.vector(name)?;
        if v.len() != 5 {
            return Err(Error::format(path, format!("bad spec record '{name}'")));
        }
        Ok(MappingSpec {
            input_dim: v[0] as usize,
            output_dim: v[1] as usize,
            hidden: v[2] as usize,
            proj: v[3] as usize,
            layers: v[4] as usize,
        })
    };

    let f_spec = read_map_spec("spec.f")?;
    let mut f = cse_core::lstm::MappingNetwork::zeros(f_spec)?;
    r.tensors("net.f", &mut f.params)?;
    let mut opt_f = cse_core::optim::Sgd::new(cfg.learning_rate, cfg.momentum, &f.params)?;
    r.tensors("opt.f", &mut opt_f.velocity)?;

    let (g, opt_g) = if r.scalar("has.g")? != 0.0 {
        let spec = read_map_spec("spec.g")?;
        let mut g = cse_core::lstm::MappingNetwork::zeros(spec)?;
        r.tensors("net.g", &mut g.params)?;
        let mut opt = cse_core::optim::Sgd::new(cfg.learning_rate, cfg.momentum, &g.params)?;
        r.tensors("opt.g", &mut opt.velocity)?;
        (Some(g), Some(opt))
    } else {
        (None, None)
    };

    let (d_noisy, d_clean, opt_dn, opt_dc) = if r.scalar("has.d")? != 0.0 {
        let read_d = |spec_name: &str, net_name: &str, opt_name: &str| -> Result<_> {
            let v = r.vector(spec_name)?;
            let spec = DiscSpec { input_dim: v[0] as usize, hidden: v[1] as usize };
            let mut d = cse_core::disc::Discriminator::zeros(spec)?;
            r.tensors(net_name, &mut d.params)?;
            let mut opt = cse_core::optim::Sgd::new(cfg.learning_rate, cfg.momentum, &d.params)?;
            r.tensors(opt_name, &mut opt.velocity)?;
            Ok((d, opt))
        };
        let (dn, on) = read_d("spec.d_noisy", "net.d_noisy", "opt.d_noisy")?;
        let (dc, oc) = read_d("spec.d_clean", "net.d_clean", "opt.d_clean")?;
        (Some(dn), Some(dc), Some(on), Some(oc))
    } else {
        (None, None, None, None)
    };

    let rng_seed = r.vector("state.rng_seed")?;
    if rng_seed.len() != 32 {
        return Err(Error::format(path, "bad RNG seed record"));
    }
    let mut seed = [0u8; 32];
    for (b, v) in seed.iter_mut().zip(rng_seed) {
        *b = *v as u8;
    }
    let wp = r.vector("state.rng_word_pos")?;
    if wp.len() != 4 {
        return Err(Error::format(path, "bad RNG position record"));
    }
    let word_pos = (wp[0] as u128)
        | ((wp[1] as u128) << 32)
        | ((wp[2] as u128) << 64)
        | ((wp[3] as u128) << 96);

    let mut trainer = Trainer {
        cfg,
        f,
        g,
        d_noisy,
        d_clean,
        opt_f,
        opt_g,
        opt_d_noisy: opt_dn,
        opt_d_clean: opt_dc,
        rng: rand::SeedableRng::from_seed([0u8; 32]),
        epoch: r.usize_("state.epoch")?,
    };
    trainer.restore_rng(&RngSnapshot { seed, word_pos });

    let stats = |mean_name: &str, std_name: &str| -> Result<NormStats> {
        Ok(NormStats {
            mean: r.vector(mean_name)?.to_vec(),
            std: r.vector(std_name)?.to_vec(),
        })
    };
    Ok(Checkpoint {
        trainer,
        noisy_stats: stats("stats.noisy.mean", "stats.noisy.std")?,
        clean_stats: stats("stats.clean.mean", "stats.clean.std")?,
    })
}

fn regime_code(r: Regime) -> u8 {
    match r {
        Regime::Baseline => 0,
        Regime::CseForward => 1,
        Regime::CseFull => 2,
        Regime::Acse => 3,
    }
}

fn regime_from_code(c: u8) -> Option<Regime> {
    match c {
        0 => Some(Regime::Baseline),
        1 => Some(Regime::CseForward),
        2 => Some(Regime::CseFull),
        3 => Some(Regime::Acse),
        _ => None,
    }
}
