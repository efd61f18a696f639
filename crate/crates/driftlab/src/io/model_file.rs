//! Binary model files.
//!
//! Layout: an 8-byte magic, a little-endian `u32` format version, then the
//! body. Every float is stored as its little-endian IEEE-754 bit pattern so
//! a loaded model predicts bit-identically to the one saved.

use std::path::Path;

use driftlab_core::elm::{Activation, ElmModel, ElmParams, InputScaler, Solver};
use driftlab_core::ensemble::{CertaintyFilter, CombinationRule, DimensionBins, EnsembleModel, Member};
use driftlab_core::linalg::Matrix;
use driftlab_core::scada::Channel;
use driftlab_core::Timestamp;

use super::write_with;
use crate::error::{Error, Result};

pub const ELM_MAGIC: &[u8; 8] = b"DLELMMDL";
pub const ENSEMBLE_MAGIC: &[u8; 8] = b"DLENSMBL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Default)]
struct Encoder(Vec<u8>);

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn f64s(&mut self, vs: &[f64]) {
        self.len(vs.len());
        vs.iter().for_each(|&v| self.f64(v));
    }
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

type Decoded<T> = std::result::Result<T, String>;

impl Decoder<'_> {
    fn take<const N: usize>(&mut self) -> Decoded<[u8; N]> {
        let end = self.pos + N;
        let chunk = self.bytes.get(self.pos..end).ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice of length N"))
    }
    fn u8(&mut self) -> Decoded<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn u32(&mut self) -> Decoded<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Decoded<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn i64(&mut self) -> Decoded<i64> {
        Ok(i64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Decoded<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn len(&mut self) -> Decoded<usize> {
        let n = self.u64()? as usize;
        if n > self.bytes.len() {
            return Err(format!("implausible length {n} at byte {}", self.pos - 8));
        }
        Ok(n)
    }
    fn f64s(&mut self) -> Decoded<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn header(&mut self, magic: &[u8; 8]) -> Decoded<()> {
        if &self.take::<8>()? != magic {
            return Err("not a model file of the expected kind".into());
        }
        match self.u32()? {
            FORMAT_VERSION => Ok(()),
            v => Err(format!("unsupported format version {v}")),
        }
    }
    fn finish(&self) -> Decoded<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(format!("{} trailing bytes", self.bytes.len() - self.pos))
        }
    }
}

fn channel_code(c: Channel) -> u8 {
    match c {
        Channel::AmbientTemp => 0,
        Channel::WindSpeed => 1,
        Channel::Turbulence => 2,
        Channel::Power => 3,
    }
}

fn channel_from(code: u8) -> Decoded<Channel> {
    Ok(match code {
        0 => Channel::AmbientTemp,
        1 => Channel::WindSpeed,
        2 => Channel::Turbulence,
        3 => Channel::Power,
        _ => return Err(format!("unknown channel code {code}")),
    })
}

fn encode_elm(e: &mut Encoder, m: &ElmModel) {
    e.len(m.params.hidden_width);
    e.len(m.params.input_dim);
    e.u8(match m.params.activation {
        Activation::Sigmoid => 0,
        Activation::Tanh => 1,
    });
    e.f64(m.params.ridge_lambda);
    e.u64(m.params.seed);
    e.u8(match m.solver {
        Solver::Cholesky => 0,
        Solver::MinNorm => 1,
    });
    e.f64s(&m.scaler.means);
    e.f64s(&m.scaler.sds);
    e.len(m.input_weights.rows());
    e.len(m.input_weights.cols());
    e.f64s(m.input_weights.as_slice());
    e.f64s(&m.biases);
    e.f64s(&m.output_weights);
}

fn decode_elm(d: &mut Decoder) -> Decoded<ElmModel> {
    let hidden_width = d.len()?;
    let input_dim = d.len()?;
    let activation = match d.u8()? {
        0 => Activation::Sigmoid,
        1 => Activation::Tanh,
        a => return Err(format!("unknown activation code {a}")),
    };
    let ridge_lambda = d.f64()?;
    let seed = d.u64()?;
    let solver = match d.u8()? {
        0 => Solver::Cholesky,
        1 => Solver::MinNorm,
        s => return Err(format!("unknown solver code {s}")),
    };
    let scaler = InputScaler { means: d.f64s()?, sds: d.f64s()? };
    let rows = d.len()?;
    let cols = d.len()?;
    let data = d.f64s()?;
    if data.len() != rows * cols {
        return Err(format!("weight matrix holds {} values, expected {rows}×{cols}", data.len()));
    }
    let model = ElmModel {
        params: ElmParams { hidden_width, activation, ridge_lambda, input_dim, seed },
        scaler,
        input_weights: Matrix::from_row_major(rows, cols, data),
        biases: d.f64s()?,
        output_weights: d.f64s()?,
        solver,
    };
    model.check_dims().map_err(|e| e.to_string())?;
    Ok(model)
}

fn encode_filter(e: &mut Encoder, f: &CertaintyFilter) {
    e.u64(f.min_occupancy);
    e.len(f.dims.len());
    for dim in &f.dims {
        match dim {
            DimensionBins::Binned { edges, counts } => {
                e.u8(0);
                e.f64s(edges);
                e.len(counts.len());
                counts.iter().for_each(|&c| e.u64(c));
            }
            DimensionBins::Constant { value, count } => {
                e.u8(1);
                e.f64(*value);
                e.u64(*count);
            }
        }
    }
}

fn decode_filter(d: &mut Decoder) -> Decoded<CertaintyFilter> {
    let min_occupancy = d.u64()?;
    let n = d.len()?;
    let mut dims = Vec::with_capacity(n);
    for _ in 0..n {
        dims.push(match d.u8()? {
            0 => {
                let edges = d.f64s()?;
                let k = d.len()?;
                let counts = (0..k).map(|_| d.u64()).collect::<Decoded<Vec<_>>>()?;
                if edges.len() != counts.len() + 1 {
                    return Err("bin edges and counts disagree".into());
                }
                DimensionBins::Binned { edges, counts }
            }
            1 => DimensionBins::Constant { value: d.f64()?, count: d.u64()? },
            t => return Err(format!("unknown bin tag {t}")),
        });
    }
    Ok(CertaintyFilter { dims, min_occupancy })
}

pub fn encode_elm_file(model: &ElmModel) -> Vec<u8> {
    let mut e = Encoder::default();
    e.0.extend_from_slice(ELM_MAGIC);
    e.u32(FORMAT_VERSION);
    encode_elm(&mut e, model);
    e.0
}

pub fn decode_elm_file(bytes: &[u8]) -> std::result::Result<ElmModel, String> {
    let mut d = Decoder { bytes, pos: 0 };
    d.header(ELM_MAGIC)?;
    let m = decode_elm(&mut d)?;
    d.finish()?;
    Ok(m)
}

pub fn encode_ensemble(model: &EnsembleModel) -> Vec<u8> {
    let mut e = Encoder::default();
    e.0.extend_from_slice(ENSEMBLE_MAGIC);
    e.u32(FORMAT_VERSION);
    e.len(model.predictors.len());
    model.predictors.iter().for_each(|&c| e.u8(channel_code(c)));
    e.u8(match model.rule {
        CombinationRule::InverseValidationRmse => 0,
    });
    e.len(model.members.len());
    for m in &model.members {
        e.len(m.batch_index);
        e.i64(m.first_timestamp.unix());
        e.i64(m.last_timestamp.unix());
        e.f64(m.validation_rmse);
        e.f64(m.weight);
        encode_filter(&mut e, &m.filter);
        encode_elm(&mut e, &m.model);
    }
    e.0
}

pub fn decode_ensemble(bytes: &[u8]) -> std::result::Result<EnsembleModel, String> {
    let mut d = Decoder { bytes, pos: 0 };
    d.header(ENSEMBLE_MAGIC)?;
    let np = d.len()?;
    let predictors = (0..np).map(|_| d.u8().and_then(channel_from)).collect::<Decoded<Vec<_>>>()?;
    let rule = match d.u8()? {
        0 => CombinationRule::InverseValidationRmse,
        r => return Err(format!("unknown combination rule {r}")),
    };
    let n = d.len()?;
    let mut members = Vec::with_capacity(n);
    for _ in 0..n {
        let batch_index = d.len()?;
        let first_timestamp = Timestamp::from_unix(d.i64()?);
        let last_timestamp = Timestamp::from_unix(d.i64()?);
        let validation_rmse = d.f64()?;
        let weight = d.f64()?;
        let filter = decode_filter(&mut d)?;
        let model = decode_elm(&mut d)?;
        if model.input_dim() != predictors.len() || filter.input_dim() != predictors.len() {
            return Err(format!("member {batch_index} does not match {} predictors", predictors.len()));
        }
        members.push(Member { model, filter, validation_rmse, weight, batch_index, first_timestamp, last_timestamp });
    }
    d.finish()?;
    Ok(EnsembleModel { predictors, members, rule })
}

pub fn save_ensemble(path: &Path, model: &EnsembleModel) -> Result<()> {
    let bytes = encode_ensemble(model);
    write_with(path, |w| std::io::Write::write_all(w, &bytes))
}

pub fn load_ensemble(path: &Path) -> Result<EnsembleModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ensemble(&bytes).map_err(|m| Error::format(path, m))
}

pub fn save_elm(path: &Path, model: &ElmModel) -> Result<()> {
    let bytes = encode_elm_file(model);
    write_with(path, |w| std::io::Write::write_all(w, &bytes))
}

pub fn load_elm(path: &Path) -> Result<ElmModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_elm_file(&bytes).map_err(|m| Error::format(path, m))
}
