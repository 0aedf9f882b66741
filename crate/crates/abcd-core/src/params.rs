//! Plain-text tensor serialization: one record per line,
//! `name DIMSxDIMSx... v0 v1 ...`, `#` comments allowed. Values print in
//! Rust's shortest round-trip form, so files reload bit-exactly. The demo
//! fixtures for the attention and fusion parameters use this format.

use crate::asff::AsffParams;
use crate::cbam::CbamParams;
use crate::error::{Error, Result};
use crate::tensor::{FeatureMap, Kernel2D, Mlp2};

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl TensorRecord {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
            return Err(Error::Config(format!("bad record name {name:?}")));
        }
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!("record {name} has invalid shape {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "record {name} shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("record {name} has non-finite values")));
        }
        Ok(Self { name, shape, values })
    }

    pub fn scalar(name: impl Into<String>, value: f64) -> Result<Self> {
        Self::new(name, vec![1], vec![value])
    }
}

pub fn format_records(records: &[TensorRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.name);
        out.push(' ');
        let dims: Vec<String> = r.shape.iter().map(|d| d.to_string()).collect();
        out.push_str(&dims.join("x"));
        for v in &r.values {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<TensorRecord>> {
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let name = tokens.next().expect("non-empty line has a first token");
        let shape_tok = tokens.next().ok_or(Error::Parse {
            line: line_no,
            msg: format!("record {name} is missing its shape"),
        })?;
        let shape: Vec<usize> = shape_tok
            .split('x')
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad shape {shape_tok:?}"),
            })?;
        let values: Vec<f64> = tokens
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: line_no,
                msg: "bad value token".into(),
            })?;
        records.push(
            TensorRecord::new(name, shape, values)
                .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?,
        );
    }
    Ok(records)
}

pub fn feature_map_record(name: impl Into<String>, map: &FeatureMap) -> TensorRecord {
    let (c, h, w) = map.shape();
    TensorRecord::new(name, vec![c, h, w], map.data().to_vec())
        .expect("a feature map is always a valid record")
}

pub fn feature_map_from_record(record: &TensorRecord) -> Result<FeatureMap> {
    if record.shape.len() != 3 {
        return Err(Error::Shape(format!(
            "record {} has rank {}, feature maps are rank 3",
            record.name,
            record.shape.len()
        )));
    }
    FeatureMap::new(record.shape[0], record.shape[1], record.shape[2], record.values.clone())
}

fn kernel_records(prefix: &str, kernel: &Kernel2D) -> Vec<TensorRecord> {
    vec![
        TensorRecord::new(
            format!("{prefix}.weight"),
            vec![kernel.out_channels(), kernel.in_channels(), kernel.size(), kernel.size()],
            kernel.weights().to_vec(),
        )
        .expect("valid kernel"),
        TensorRecord::new(format!("{prefix}.bias"), vec![kernel.out_channels()], kernel.bias().to_vec())
            .expect("valid kernel"),
    ]
}

fn find<'a>(records: &'a [TensorRecord], name: &str) -> Result<&'a TensorRecord> {
    records
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::Config(format!("missing record {name}")))
}

fn kernel_from_records(prefix: &str, records: &[TensorRecord]) -> Result<Kernel2D> {
    let weight = find(records, &format!("{prefix}.weight"))?;
    let bias = find(records, &format!("{prefix}.bias"))?;
    if weight.shape.len() != 4 || weight.shape[2] != weight.shape[3] {
        return Err(Error::Shape(format!("record {} is not a square kernel", weight.name)));
    }
    Kernel2D::new(
        weight.shape[0],
        weight.shape[1],
        weight.shape[2],
        weight.values.clone(),
        bias.values.clone(),
    )
}

/// Serialize attention parameters under `prefix`.
pub fn cbam_records(prefix: &str, params: &CbamParams) -> Vec<TensorRecord> {
    let mlp = params.mlp();
    let mut records = vec![
        TensorRecord::new(
            format!("{prefix}.mlp.w0"),
            vec![mlp.hidden(), mlp.in_dim()],
            mlp.w0().to_vec(),
        )
        .expect("valid mlp"),
        TensorRecord::new(format!("{prefix}.mlp.b0"), vec![mlp.hidden()], mlp.b0().to_vec())
            .expect("valid mlp"),
        TensorRecord::new(
            format!("{prefix}.mlp.w1"),
            vec![mlp.in_dim(), mlp.hidden()],
            mlp.w1().to_vec(),
        )
        .expect("valid mlp"),
        TensorRecord::new(format!("{prefix}.mlp.b1"), vec![mlp.in_dim()], mlp.b1().to_vec())
            .expect("valid mlp"),
        TensorRecord::scalar(format!("{prefix}.mlp.reduction"), mlp.reduction() as f64)
            .expect("valid scalar"),
    ];
    records.extend(kernel_records(&format!("{prefix}.spatial"), params.spatial_kernel()));
    records
}

pub fn cbam_from_records(prefix: &str, records: &[TensorRecord]) -> Result<CbamParams> {
    let w0 = find(records, &format!("{prefix}.mlp.w0"))?;
    let b0 = find(records, &format!("{prefix}.mlp.b0"))?;
    let w1 = find(records, &format!("{prefix}.mlp.w1"))?;
    let b1 = find(records, &format!("{prefix}.mlp.b1"))?;
    let reduction = find(records, &format!("{prefix}.mlp.reduction"))?.values[0] as usize;
    if w0.shape.len() != 2 {
        return Err(Error::Shape(format!("record {} must be rank 2", w0.name)));
    }
    let in_dim = w0.shape[1];
    let mlp = Mlp2::new(
        in_dim,
        reduction,
        w0.values.clone(),
        b0.values.clone(),
        w1.values.clone(),
        b1.values.clone(),
    )?;
    let spatial = kernel_from_records(&format!("{prefix}.spatial"), records)?;
    CbamParams::new(mlp, spatial)
}

/// Serialize fusion parameters under `prefix`; generators are named
/// `prefix.lT.genS` for target level T and source level S.
pub fn asff_records(prefix: &str, params: &AsffParams) -> Vec<TensorRecord> {
    use crate::asff::PyramidLevel;
    let mut records = Vec::new();
    for target in PyramidLevel::ALL {
        for source in PyramidLevel::ALL {
            records.extend(kernel_records(
                &format!("{prefix}.l{}.gen{}", target.number(), source.number()),
                params.generator(target, source),
            ));
        }
    }
    records
}

pub fn asff_from_records(prefix: &str, records: &[TensorRecord]) -> Result<AsffParams> {
    let load = |t: usize, s: usize| kernel_from_records(&format!("{prefix}.l{t}.gen{s}"), records);
    AsffParams::new([
        [load(1, 1)?, load(1, 2)?, load(1, 3)?],
        [load(2, 1)?, load(2, 2)?, load(2, 3)?],
        [load(3, 1)?, load(3, 2)?, load(3, 3)?],
    ])
}
