//! JSON wire formats: complex scalars as `[re, im]` pairs, matrices as
//! row-major pair lists, data sets and interpolants as flat objects. The
//! formats are language-neutral and diff-friendly; serialization is
//! deterministic (struct field order), so parse -> serialize round-trips are
//! byte-identical.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dims, LiftingDataSet};
use crate::error::{Error, Result};
use crate::numlin::{from_row_major, to_row_major, CMat};
use crate::realization::{Realization, TaylorSeries};
use crate::redheffer::{Interpolant, ParameterDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `[re, im]` entries.
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_mat(m: &CMat) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: to_row_major(m)
                .into_iter()
                .map(|(re, im)| [re, im])
                .collect(),
        }
    }

    pub fn to_mat(&self) -> Result<CMat> {
        let pairs: Vec<(f64, f64)> = self.data.iter().map(|p| (p[0], p[1])).collect();
        from_row_major(self.rows, self.cols, &pairs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimsJson {
    #[serde(rename = "H0")]
    pub h0: usize,
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "Hp")]
    pub hp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSetJson {
    pub dims: DimsJson,
    #[serde(rename = "A")]
    pub a: MatrixJson,
    #[serde(rename = "Tp")]
    pub tp: MatrixJson,
    #[serde(rename = "R")]
    pub r: MatrixJson,
    #[serde(rename = "Q")]
    pub q: MatrixJson,
}

impl DataSetJson {
    pub fn from_ds(ds: &LiftingDataSet) -> Self {
        DataSetJson {
            dims: DimsJson {
                h0: ds.dims.h0,
                h: ds.dims.h,
                hp: ds.dims.hp,
            },
            a: MatrixJson::from_mat(&ds.a),
            tp: MatrixJson::from_mat(&ds.tp),
            r: MatrixJson::from_mat(&ds.r),
            q: MatrixJson::from_mat(&ds.q),
        }
    }

    pub fn to_ds(&self) -> Result<LiftingDataSet> {
        LiftingDataSet::new(
            Dims {
                h0: self.dims.h0,
                h: self.dims.h,
                hp: self.dims.hp,
            },
            self.a.to_mat()?,
            self.tp.to_mat()?,
            self.r.to_mat()?,
            self.q.to_mat()?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub dim_state: usize,
    #[serde(rename = "Z")]
    pub z: MatrixJson,
    #[serde(rename = "B")]
    pub b: MatrixJson,
    #[serde(rename = "C")]
    pub c: MatrixJson,
    #[serde(rename = "D")]
    pub d: MatrixJson,
}

impl RealizationJson {
    pub fn from_realization(r: &Realization) -> Self {
        RealizationJson {
            dim_in: r.dim_in(),
            dim_out: r.dim_out(),
            dim_state: r.dim_state(),
            z: MatrixJson::from_mat(r.z()),
            b: MatrixJson::from_mat(r.b()),
            c: MatrixJson::from_mat(r.c()),
            d: MatrixJson::from_mat(r.d()),
        }
    }

    pub fn to_realization(&self) -> Result<Realization> {
        Realization::new(
            self.z.to_mat()?,
            self.b.to_mat()?,
            self.c.to_mat()?,
            self.d.to_mat()?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolantJson {
    pub dataset_hash: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "A")]
    pub a: MatrixJson,
    pub gamma: Vec<MatrixJson>,
    pub parameter: ParameterDescriptor,
}

impl InterpolantJson {
    pub fn from_interpolant(ip: &Interpolant) -> Self {
        InterpolantJson {
            dataset_hash: dataset_hash(&ip.ds),
            n: ip.truncation,
            a: MatrixJson::from_mat(&ip.a),
            gamma: ip.gamma.coeffs().iter().map(MatrixJson::from_mat).collect(),
            parameter: ip.parameter.clone(),
        }
    }

    /// Rebuilds the interpolant against its data set; the stored hash must
    /// match.
    pub fn to_interpolant(&self, ds: &LiftingDataSet) -> Result<Interpolant> {
        let expected = dataset_hash(ds);
        if self.dataset_hash != expected {
            return Err(Error::shape(format!(
                "interpolant was computed for data set {}, not {expected}",
                self.dataset_hash
            )));
        }
        if self.gamma.is_empty() {
            return Err(Error::shape("interpolant must carry Gamma_0"));
        }
        let coeffs: Vec<CMat> = self
            .gamma
            .iter()
            .map(|m| m.to_mat())
            .collect::<Result<_>>()?;
        let (rows, cols) = (coeffs[0].nrows(), coeffs[0].ncols());
        Ok(Interpolant {
            ds: ds.clone(),
            a: self.a.to_mat()?,
            gamma: TaylorSeries::new(rows, cols, coeffs)?,
            truncation: self.n,
            parameter: self.parameter.clone(),
            param_realization: None,
        })
    }
}

/// FNV-1a over the canonical JSON bytes of the data set.
pub fn dataset_hash(ds: &LiftingDataSet) -> String {
    let json = serde_json::to_string(&DataSetJson::from_ds(ds)).expect("serializable");
    let mut h: u64 = 0xcbf29ce484222325;
    for b in json.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

pub fn dataset_to_string(ds: &LiftingDataSet) -> String {
    let mut s = serde_json::to_string_pretty(&DataSetJson::from_ds(ds)).expect("serializable");
    s.push('\n');
    s
}

pub fn dataset_from_str(s: &str) -> Result<LiftingDataSet> {
    let json: DataSetJson = serde_json::from_str(s)?;
    json.to_ds()
}

pub fn interpolant_to_string(ip: &Interpolant) -> String {
    let mut s =
        serde_json::to_string_pretty(&InterpolantJson::from_interpolant(ip)).expect("serializable");
    s.push('\n');
    s
}

pub fn interpolant_from_str(s: &str, ds: &LiftingDataSet) -> Result<Interpolant> {
    let json: InterpolantJson = serde_json::from_str(s)?;
    json.to_interpolant(ds)
}

pub fn realization_from_str(s: &str) -> Result<Realization> {
    let json: RealizationJson = serde_json::from_str(s)?;
    json.to_realization()
}
