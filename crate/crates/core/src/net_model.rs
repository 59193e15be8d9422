//! Layer and network descriptions, reuse factors and reuse-priority orders.
//!
//! A layer is described by its ifmap volume `H x W x I`, its filter bank
//! `P x Q x I x J` and a stride. Fully-connected layers collapse every
//! spatial dimension to 1. Depthwise layers are `J` independent
//! single-channel convolutions: each filter reads exactly one ifmap channel,
//! so the per-filter input depth is 1 and the ifmap channel count equals `J`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three data types moved between DRAM and the on-chip buffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Ifm,
    Wgh,
    Ofm,
}

impl DataType {
    pub const ALL: [DataType; 3] = [DataType::Ifm, DataType::Wgh, DataType::Ofm];

    pub fn as_str(self) -> &'static str {
        match self {
            DataType::Ifm => "ifm",
            DataType::Wgh => "wgh",
            DataType::Ofm => "ofm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ifm" => Some(DataType::Ifm),
            "wgh" => Some(DataType::Wgh),
            "ofm" => Some(DataType::Ofm),
            _ => None,
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Conv,
    Fc,
    DepthwiseConv,
}

/// Bits per element for each data type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitWidths {
    pub ifm: u32,
    pub wgh: u32,
    pub ofm: u32,
}

impl BitWidths {
    pub const fn uniform(bits: u32) -> Self {
        BitWidths {
            ifm: bits,
            wgh: bits,
            ofm: bits,
        }
    }

    pub fn of(&self, data: DataType) -> u32 {
        match data {
            DataType::Ifm => self.ifm,
            DataType::Wgh => self.wgh,
            DataType::Ofm => self.ofm,
        }
    }
}

impl Default for BitWidths {
    fn default() -> Self {
        BitWidths::uniform(8)
    }
}

/// One CONV / FC / depthwise layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerShape {
    pub name: String,
    pub kind: LayerKind,
    /// ifmap height and width.
    pub h: u32,
    pub w: u32,
    /// ifmap channel count.
    pub i: u32,
    /// filter height and width.
    pub p: u32,
    pub q: u32,
    /// filter count (ofmap channels).
    pub j: u32,
    pub stride: u32,
    pub bits: BitWidths,
}

impl LayerShape {
    /// Checked constructor for convolution layers.
    #[allow(clippy::too_many_arguments)]
    pub fn conv(name: impl Into<String>, h: u32, w: u32, i: u32, p: u32, q: u32, j: u32, stride: u32) -> Result<Self> {
        let layer = LayerShape {
            name: name.into(),
            kind: LayerKind::Conv,
            h,
            w,
            i,
            p,
            q,
            j,
            stride,
            bits: BitWidths::default(),
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn fc(name: impl Into<String>, inputs: u32, outputs: u32) -> Result<Self> {
        let layer = LayerShape {
            name: name.into(),
            kind: LayerKind::Fc,
            h: 1,
            w: 1,
            i: inputs,
            p: 1,
            q: 1,
            j: outputs,
            stride: 1,
            bits: BitWidths::default(),
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn depthwise(name: impl Into<String>, h: u32, w: u32, channels: u32, p: u32, q: u32, stride: u32) -> Result<Self> {
        let layer = LayerShape {
            name: name.into(),
            kind: LayerKind::DepthwiseConv,
            h,
            w,
            i: channels,
            p,
            q,
            j: channels,
            stride,
            bits: BitWidths::default(),
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn with_bits(mut self, bits: BitWidths) -> Self {
        self.bits = bits;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidLayer {
            layer: self.name.clone(),
            reason,
        };
        let dims = [
            ("H", self.h),
            ("W", self.w),
            ("I", self.i),
            ("P", self.p),
            ("Q", self.q),
            ("J", self.j),
            ("str", self.stride),
            ("bit_ifm", self.bits.ifm),
            ("bit_wgh", self.bits.wgh),
            ("bit_ofm", self.bits.ofm),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(bad(format!("{name} must be at least 1")));
        }
        if self.p > self.h {
            return Err(bad(format!("P={} exceeds H={}", self.p, self.h)));
        }
        if self.q > self.w {
            return Err(bad(format!("Q={} exceeds W={}", self.q, self.w)));
        }
        match self.kind {
            LayerKind::Fc => {
                if [self.h, self.w, self.p, self.q, self.stride] != [1; 5] {
                    return Err(bad("fc layers need H=W=P=Q=str=1".into()));
                }
            }
            LayerKind::DepthwiseConv => {
                if self.i != self.j {
                    return Err(bad(format!("depthwise layers need I == J (got I={}, J={})", self.i, self.j)));
                }
            }
            LayerKind::Conv => {}
        }
        Ok(())
    }

    /// Input depth seen by one filter: 1 for depthwise layers, `I` otherwise.
    pub fn filter_depth(&self) -> u32 {
        match self.kind {
            LayerKind::DepthwiseConv => 1,
            _ => self.i,
        }
    }

    pub fn is_depthwise(&self) -> bool {
        self.kind == LayerKind::DepthwiseConv
    }

    /// Total element count of each data type.
    pub fn volume(&self, data: DataType) -> u64 {
        let (m, n) = output_dims(self);
        match data {
            DataType::Ifm => u64::from(self.h) * u64::from(self.w) * u64::from(self.i),
            DataType::Wgh => u64::from(self.p) * u64::from(self.q) * u64::from(self.filter_depth()) * u64::from(self.j),
            DataType::Ofm => u64::from(m) * u64::from(n) * u64::from(self.j),
        }
    }

    /// Multiply-accumulate operations in the layer.
    pub fn macs(&self) -> u64 {
        self.volume(DataType::Ofm) * u64::from(self.p) * u64::from(self.q) * u64::from(self.filter_depth())
    }
}

pub(crate) fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Ofmap height and width. Padding is not modelled.
pub fn output_dims(layer: &LayerShape) -> (u32, u32) {
    if layer.kind == LayerKind::Fc {
        return (1, 1);
    }
    let s = layer.stride;
    ((layer.h - layer.p + 1).div_ceil(s), (layer.w - layer.q + 1).div_ceil(s))
}

/// Number of MACs each element of a data type takes part in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseFactors {
    pub ifm: u64,
    pub wgh: u64,
    pub ofm: u64,
}

impl ReuseFactors {
    pub fn of(&self, data: DataType) -> u64 {
        match data {
            DataType::Ifm => self.ifm,
            DataType::Wgh => self.wgh,
            DataType::Ofm => self.ofm,
        }
    }
}

pub fn reuse_factors(layer: &LayerShape) -> ReuseFactors {
    let s = u64::from(layer.stride);
    let (p, q) = (u64::from(layer.p), u64::from(layer.q));
    let (h, w) = (u64::from(layer.h), u64::from(layer.w));
    ReuseFactors {
        ifm: ceil_div(p, s) * ceil_div(q, s) * u64::from(layer.j),
        wgh: ceil_div(h - p + 1, s) * ceil_div(w - q + 1, s),
        ofm: p * q * u64::from(layer.filter_depth()),
    }
}

/// Data types sorted by descending reuse factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReusePriorityOrder(pub [DataType; 3]);

impl ReusePriorityOrder {
    /// All six orders, numbered as rows 1..=6 of the usual priority table.
    pub const ALL: [ReusePriorityOrder; 6] = [
        ReusePriorityOrder([DataType::Ifm, DataType::Wgh, DataType::Ofm]),
        ReusePriorityOrder([DataType::Ifm, DataType::Ofm, DataType::Wgh]),
        ReusePriorityOrder([DataType::Wgh, DataType::Ifm, DataType::Ofm]),
        ReusePriorityOrder([DataType::Wgh, DataType::Ofm, DataType::Ifm]),
        ReusePriorityOrder([DataType::Ofm, DataType::Ifm, DataType::Wgh]),
        ReusePriorityOrder([DataType::Ofm, DataType::Wgh, DataType::Ifm]),
    ];

    pub fn highest(&self) -> DataType {
        self.0[0]
    }

    /// 1-based row of the priority table.
    pub fn row(&self) -> usize {
        Self::ALL.iter().position(|o| o == self).map(|p| p + 1).unwrap_or(0)
    }
}

impl fmt::Display for ReusePriorityOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}>{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Sorts the reuse factors descending; equal factors keep the order ifm, wgh, ofm.
pub fn reuse_priority_order(layer: &LayerShape) -> ReusePriorityOrder {
    let rf = reuse_factors(layer);
    let mut order = DataType::ALL;
    // stable sort keeps the ifm > wgh > ofm tie-break
    order.sort_by_key(|&d| std::cmp::Reverse(rf.of(d)));
    ReusePriorityOrder(order)
}

/// An ordered list of layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkModel {
    pub name: String,
    pub layers: Vec<LayerShape>,
}

impl NetworkModel {
    pub fn new(name: impl Into<String>, layers: Vec<LayerShape>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("a network needs at least one layer".into()));
        }
        for layer in &layers {
            layer.validate()?;
        }
        Ok(NetworkModel { name: name.into(), layers })
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let file: NetworkFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        file.into_model()
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile::Named {
            name: self.name.clone(),
            layers: self.layers.iter().map(LayerRecord::from).collect(),
        };
        serde_json::to_string_pretty(&file).expect("network serialises")
    }

    /// One of the networks shipped with the crate: `alexnet`, `vgg16`,
    /// `mobilenet` or `mobilenet-amc`.
    pub fn bundled(name: &str) -> Result<Self> {
        let text = match name {
            "alexnet" => include_str!("../data/alexnet.json"),
            "vgg16" => include_str!("../data/vgg16.json"),
            "mobilenet" => include_str!("../data/mobilenet.json"),
            "mobilenet-amc" => include_str!("../data/mobilenet_amc.json"),
            "toy" => include_str!("../data/toy.json"),
            other => return Err(Error::InvalidNetwork(format!("no bundled network named `{other}`"))),
        };
        Self::from_json(text)
    }
}

/// On-disk network description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NetworkFile {
    Named { name: String, layers: Vec<LayerRecord> },
    Bare(Vec<LayerRecord>),
}

impl NetworkFile {
    fn into_model(self) -> Result<NetworkModel> {
        let (name, records) = match self {
            NetworkFile::Named { name, layers } => (name, layers),
            NetworkFile::Bare(layers) => ("network".to_string(), layers),
        };
        let layers = records.into_iter().map(LayerShape::try_from).collect::<Result<Vec<_>>>()?;
        NetworkModel::new(name, layers)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum BitsRecord {
    Uniform(u32),
    PerType(BitWidths),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerRecord {
    name: String,
    kind: LayerKind,
    #[serde(rename = "H", default = "one")]
    h: u32,
    #[serde(rename = "W", default = "one")]
    w: u32,
    #[serde(rename = "I")]
    i: u32,
    #[serde(rename = "P", default = "one")]
    p: u32,
    #[serde(rename = "Q", default = "one")]
    q: u32,
    #[serde(rename = "J")]
    j: u32,
    #[serde(rename = "str", default = "one")]
    stride: u32,
    #[serde(default = "default_bits")]
    bits: BitsRecord,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
}

fn one() -> u32 {
    1
}

fn default_bits() -> BitsRecord {
    BitsRecord::Uniform(8)
}

impl TryFrom<LayerRecord> for LayerShape {
    type Error = Error;

    fn try_from(r: LayerRecord) -> Result<Self> {
        let bits = match r.bits {
            BitsRecord::Uniform(b) => BitWidths::uniform(b),
            BitsRecord::PerType(b) => b,
        };
        let layer = LayerShape {
            name: r.name,
            kind: r.kind,
            h: r.h,
            w: r.w,
            i: r.i,
            p: r.p,
            q: r.q,
            j: r.j,
            stride: r.stride,
            bits,
        };
        layer.validate()?;
        let (m, n) = output_dims(&layer);
        if r.m.is_some_and(|v| v != m) || r.n.is_some_and(|v| v != n) {
            return Err(Error::InvalidLayer {
                layer: layer.name,
                reason: format!("explicit M/N ({:?}, {:?}) disagree with the unpadded output {m}x{n}", r.m, r.n),
            });
        }
        Ok(layer)
    }
}

impl From<&LayerShape> for LayerRecord {
    fn from(l: &LayerShape) -> Self {
        let bits = if l.bits.ifm == l.bits.wgh && l.bits.wgh == l.bits.ofm {
            BitsRecord::Uniform(l.bits.ifm)
        } else {
            BitsRecord::PerType(l.bits)
        };
        LayerRecord {
            name: l.name.clone(),
            kind: l.kind,
            h: l.h,
            w: l.w,
            i: l.i,
            p: l.p,
            q: l.q,
            j: l.j,
            stride: l.stride,
            bits,
            m: None,
            n: None,
        }
    }
}
