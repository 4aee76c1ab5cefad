use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Instance → open-facility probabilities.
    Scp,
    /// Instance and open set → arc probabilities.
    Tsp,
}

/// Slot layout: `f` (n), `c` (n²), `d` ((n+1)², depot first), `a` (n²),
/// transport weight, coverage radius, then for [`ModelKind::Tsp`] the open
/// vector (n).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub kind: ModelKind,
    pub n: usize,
}

impl FeatureLayout {
    pub fn len(&self) -> usize {
        let n = self.n;
        let base = n + 2 * n * n + (n + 1) * (n + 1) + 2;
        match self.kind {
            ModelKind::Scp => base,
            ModelKind::Tsp => base + n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn fixed(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn assign(&self) -> std::ops::Range<usize> {
        let s = self.n;
        s..s + self.n * self.n
    }

    pub fn dist(&self) -> std::ops::Range<usize> {
        let s = self.assign().end;
        s..s + (self.n + 1) * (self.n + 1)
    }

    pub fn coverage(&self) -> std::ops::Range<usize> {
        let s = self.dist().end;
        s..s + self.n * self.n
    }

    pub fn transport_slot(&self) -> usize {
        self.coverage().end
    }

    pub fn radius_slot(&self) -> usize {
        self.coverage().end + 1
    }

    pub fn open(&self) -> Option<std::ops::Range<usize>> {
        let s = self.radius_slot() + 1;
        (self.kind == ModelKind::Tsp).then(|| s..s + self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

fn scaled(values: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let m = max_of(values);
    values.iter().map(move |&v| if m > 0.0 { v / m } else { 0.0 })
}

/// Per-instance max-scaled encoding. Multiplying every cost by a constant
/// leaves the features unchanged.
pub fn encode_scp(inst: &Instance) -> FeatureVector {
    let layout = FeatureLayout {
        kind: ModelKind::Scp,
        n: inst.n(),
    };
    let mut values = Vec::with_capacity(layout.len());
    values.extend(scaled(inst.fixed_costs()));
    values.extend(scaled(inst.assign_costs()));
    values.extend(scaled(inst.distances()));
    values.extend(inst.coverage().iter().map(|&b| f64::from(u8::from(b))));

    let max_d = max_of(inst.distances());
    let route_scale = inst.per_km() * max_d;
    let denom = route_scale + max_of(inst.fixed_costs());
    values.push(if denom > 0.0 { route_scale / denom } else { 0.0 });
    values.push(if max_d > 0.0 {
        (inst.coverage_km() / max_d).min(1.0)
    } else {
        1.0
    });
    FeatureVector { values, layout }
}

pub fn encode_tsp(inst: &Instance, open: &[bool]) -> Result<FeatureVector> {
    if open.len() != inst.n() {
        return Err(Error::dim("open vector", inst.n(), open.len()));
    }
    let mut fv = encode_scp(inst);
    fv.layout.kind = ModelKind::Tsp;
    fv.values.extend(open.iter().map(|&o| f64::from(u8::from(o))));
    Ok(fv)
}

/// Encodes a batch that must share one location count.
pub fn encode_scp_batch(insts: &[Instance]) -> Result<Vec<FeatureVector>> {
    if let Some(first) = insts.first() {
        if let Some(bad) = insts.iter().find(|i| i.n() != first.n()) {
            return Err(Error::dim("batch location count", first.n(), bad.n()));
        }
    }
    Ok(insts.iter().map(encode_scp).collect())
}
