//! Box partitions of the `(y0, t0)` training domain and the per-sub-domain
//! model collection used at run time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::odecore::{TrainingDomain, XiSign};
use crate::psirep::PsiModel;

/// One cell of a [`Partition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subdomain {
    pub id: usize,
    /// `y0` axes followed by the `t0` axis when present.
    pub cell: Vec<(f64, f64)>,
    pub n_state: usize,
    pub h_max_local: f64,
    /// `None` defers to the network configuration.
    pub delta_m_local: Option<f64>,
    /// Enlargement ratio per axis of `cell`.
    pub enlargement: Vec<f64>,
    pub xi_sign: XiSign,
}

impl Subdomain {
    pub fn has_t0(&self) -> bool {
        self.cell.len() > self.n_state
    }

    /// True when `(y, t)` lies in the closed cell.
    pub fn contains(&self, y: &[f64], t: f64) -> bool {
        y.len() == self.n_state
            && y.iter().chain(self.has_t0().then_some(&t)).zip(&self.cell).all(|(&v, &(a, b))| a <= v && v <= b)
    }
}

/// Per-axis boundary lists over the `y0` axes and, for non-autonomous
/// domains, the `t0` axis. Cells get lexicographic ids with axis 0 most
/// significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    domain: TrainingDomain,
    boundaries: Vec<Vec<f64>>,
    subdomains: Vec<Subdomain>,
}

fn domain_axes(domain: &TrainingDomain) -> Vec<(f64, f64)> {
    let mut axes = domain.y0_box().to_vec();
    axes.extend(domain.t0_interval());
    axes
}

/// Builds the partition. `boundaries[k]` lists the cut points of axis `k`
/// including both endpoints; the list must match the domain box. Every
/// cell starts with the domain `h_max` and no enlargement.
pub fn build_partition(domain: &TrainingDomain, boundaries: Vec<Vec<f64>>) -> Result<Partition> {
    let axes = domain_axes(domain);
    if boundaries.len() != axes.len() {
        return Err(Error::invalid(format!(
            "partition needs boundaries for {} axes, got {}",
            axes.len(),
            boundaries.len()
        )));
    }
    for (k, (b, &(lo, hi))) in boundaries.iter().zip(&axes).enumerate() {
        if b.len() < 2 || b.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(format!("axis {k}: boundaries must be strictly increasing, got {b:?}")));
        }
        if b[0] != lo || b[b.len() - 1] != hi {
            return Err(Error::invalid(format!("axis {k}: boundaries {b:?} do not span [{lo}, {hi}]")));
        }
    }
    let counts: Vec<usize> = boundaries.iter().map(|b| b.len() - 1).collect();
    let total: usize = counts.iter().product();
    let mut subdomains = Vec::with_capacity(total);
    for id in 0..total {
        let bands = unravel(id, &counts);
        let cell = bands.iter().zip(&boundaries).map(|(&i, b)| (b[i], b[i + 1])).collect::<Vec<_>>();
        subdomains.push(Subdomain {
            id,
            enlargement: vec![0.0; cell.len()],
            cell,
            n_state: domain.dim(),
            h_max_local: domain.h_max(),
            delta_m_local: None,
            xi_sign: domain.xi_sign(),
        });
    }
    Ok(Partition { domain: domain.clone(), boundaries, subdomains })
}

fn unravel(mut id: usize, counts: &[usize]) -> Vec<usize> {
    let mut bands = vec![0; counts.len()];
    for k in (0..counts.len()).rev() {
        bands[k] = id % counts[k];
        id /= counts[k];
    }
    bands
}

impl Partition {
    /// One cell covering the whole domain.
    pub fn single(domain: &TrainingDomain) -> Self {
        let b = domain_axes(domain).into_iter().map(|(a, b)| vec![a, b]).collect();
        build_partition(domain, b).expect("endpoints always form a valid partition")
    }

    /// `cuts[k]` equal-width bands along axis `k`.
    pub fn uniform(domain: &TrainingDomain, cuts: &[usize]) -> Result<Self> {
        let axes = domain_axes(domain);
        if cuts.len() != axes.len() || cuts.contains(&0) {
            return Err(Error::invalid(format!("need a positive band count for each of {} axes", axes.len())));
        }
        let b = axes
            .iter()
            .zip(cuts)
            .map(|(&(lo, hi), &c)| {
                (0..=c).map(|i| (lo * (c - i) as f64 + hi * i as f64) / c as f64).collect()
            })
            .collect();
        build_partition(domain, b)
    }

    pub fn domain(&self) -> &TrainingDomain {
        &self.domain
    }

    pub fn boundaries(&self) -> &[Vec<f64>] {
        &self.boundaries
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    /// Axes with interior boundaries.
    pub fn decomposed_axes(&self) -> Vec<usize> {
        (0..self.boundaries.len()).filter(|&k| self.boundaries[k].len() > 2).collect()
    }

    /// Sets enlargement ratio `r` on every decomposed axis.
    pub fn with_enlargement(mut self, r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!("enlargement ratio must be non-negative, got {r}")));
        }
        let axes = self.decomposed_axes();
        for s in &mut self.subdomains {
            for &k in &axes {
                s.enlargement[k] = r;
            }
        }
        Ok(self)
    }

    /// Sets enlargement ratio `r` on one axis.
    pub fn with_axis_enlargement(mut self, axis: usize, r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() || axis >= self.boundaries.len() {
            return Err(Error::invalid(format!("bad enlargement {r} for axis {axis}")));
        }
        for s in &mut self.subdomains {
            s.enlargement[axis] = r;
        }
        Ok(self)
    }

    pub fn with_delta_m(mut self, delta_m: f64) -> Result<Self> {
        if !(delta_m > 0.0) || !delta_m.is_finite() {
            return Err(Error::invalid(format!("δm must be positive, got {delta_m}")));
        }
        for s in &mut self.subdomains {
            s.delta_m_local = Some(delta_m);
        }
        Ok(self)
    }

    /// Per-band `h_max` along `axis`: cells in band `i` get `h_max[i]`.
    pub fn with_band_h_max(mut self, axis: usize, h_max: &[f64]) -> Result<Self> {
        let bands = self.boundaries.get(axis).map(|b| b.len() - 1);
        if bands != Some(h_max.len()) || h_max.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::invalid(format!("need {bands:?} positive h_max values for axis {axis}, got {h_max:?}")));
        }
        let counts: Vec<usize> = self.boundaries.iter().map(|b| b.len() - 1).collect();
        for s in &mut self.subdomains {
            s.h_max_local = h_max[unravel(s.id, &counts)[axis]];
        }
        Ok(self)
    }

    /// Per-cell `h_max` indexed by id.
    pub fn with_cell_h_max(mut self, h_max: &[f64]) -> Result<Self> {
        if h_max.len() != self.len() || h_max.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::invalid(format!("need {} positive h_max values, got {h_max:?}", self.len())));
        }
        for (s, &h) in self.subdomains.iter_mut().zip(h_max) {
            s.h_max_local = h;
        }
        Ok(self)
    }

    /// Id of the cell containing `(y, t)`; shared boundaries go to the lowest
    /// id. `t` is ignored for autonomous domains.
    pub fn locate(&self, y: &[f64], t: f64) -> Result<usize> {
        let n = self.domain.dim();
        if y.len() != n {
            return Err(Error::invalid(format!("state has length {}, partition expects {n}", y.len())));
        }
        let mut id = 0;
        for (k, b) in self.boundaries.iter().enumerate() {
            let v = if k < n { y[k] } else { t };
            let last = b.len() - 1;
            if !(b[0] <= v && v <= b[last]) {
                return Err(Error::OutOfDomain { point: y.to_vec(), t });
            }
            // lowest band whose upper edge is ≥ v
            let band = b[1..last].partition_point(|&c| c < v);
            id = id * last + band;
        }
        Ok(id)
    }
}

/// Training domain of `sub`: each axis `[a, b]` widened to
/// `[a − (b−a)r/2, b + (b−a)r/2]` with that axis's ratio, and the local `h_max`.
pub fn enlarge(sub: &Subdomain) -> Result<TrainingDomain> {
    let cell: Vec<(f64, f64)> = sub
        .cell
        .iter()
        .zip(&sub.enlargement)
        .map(|(&(a, b), &r)| {
            let d = (b - a) * r / 2.0;
            (a - d, b + d)
        })
        .collect();
    let (y, t) = cell.split_at(sub.n_state);
    TrainingDomain::with_sign(y.to_vec(), t.first().copied(), sub.h_max_local, sub.xi_sign)
}

/// One trained local model per sub-domain, dispatched on the disjoint cells.
#[derive(Debug, Clone)]
pub struct DecomposedModel {
    partition: Partition,
    models: Vec<PsiModel>,
}

impl DecomposedModel {
    pub fn new(partition: Partition, models: Vec<PsiModel>) -> Result<Self> {
        if models.len() != partition.len() {
            return Err(Error::invalid(format!("{} models for {} sub-domains", models.len(), partition.len())));
        }
        let n = partition.domain().dim();
        let autonomous = partition.domain().is_autonomous();
        if models.iter().any(|m| m.dim() != n || m.is_autonomous() != autonomous) {
            return Err(Error::invalid("local models do not match the partition's dimension or autonomy"));
        }
        Ok(DecomposedModel { partition, models })
    }

    /// Wraps a single model with a one-cell partition over its domain.
    pub fn single(model: PsiModel) -> Self {
        let mut partition = Partition::single(model.domain());
        partition.subdomains[0].delta_m_local = Some(model.normalizer().delta_m());
        DecomposedModel { partition, models: vec![model] }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn models(&self) -> &[PsiModel] {
        &self.models
    }

    pub fn dim(&self) -> usize {
        self.partition.domain().dim()
    }

    pub fn is_autonomous(&self) -> bool {
        self.partition.domain().is_autonomous()
    }

    pub fn locate(&self, y: &[f64], t: f64) -> Result<usize> {
        self.partition.locate(y, t)
    }

    pub fn model(&self, id: usize) -> &PsiModel {
        &self.models[id]
    }

    /// `h_max` of cell `id`.
    pub fn h_max(&self, id: usize) -> f64 {
        self.partition.subdomains[id].h_max_local
    }

    /// Smallest `h_max` over all cells.
    pub fn min_h_max(&self) -> f64 {
        self.partition.subdomains.iter().map(|s| s.h_max_local).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> TrainingDomain {
        TrainingDomain::new(vec![(-2.0, 2.0), (-4.0, 4.0)], Some((0.0, 2.0)), 0.1).unwrap()
    }

    #[test]
    fn ids_are_lexicographic() {
        let p = Partition::uniform(&dom(), &[2, 3, 1]).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.subdomains()[1].cell[1], (-4.0 / 3.0, 4.0 / 3.0));
        assert_eq!(p.subdomains()[3].cell[0], (0.0, 2.0));
        assert_eq!(p.subdomains()[3].cell[1].0, -4.0);
    }

    #[test]
    fn rejects_malformed_boundaries() {
        assert!(build_partition(&dom(), vec![vec![-2.0, 2.0], vec![-4.0, 4.0]]).is_err());
        assert!(build_partition(&dom(), vec![vec![-2.0, 0.0, 0.0, 2.0], vec![-4.0, 4.0], vec![0.0, 2.0]]).is_err());
        assert!(build_partition(&dom(), vec![vec![-1.0, 2.0], vec![-4.0, 4.0], vec![0.0, 2.0]]).is_err());
    }

    #[test]
    fn band_h_max() {
        let p = Partition::uniform(&dom(), &[1, 3, 1]).unwrap().with_band_h_max(1, &[0.1, 0.2, 0.3]).unwrap();
        let h: Vec<f64> = p.subdomains().iter().map(|s| s.h_max_local).collect();
        assert_eq!(h, vec![0.1, 0.2, 0.3]);
        assert!(p.clone().with_band_h_max(1, &[0.1]).is_err());
    }

    #[test]
    fn enlargement_only_touches_decomposed_axes() {
        let p = Partition::uniform(&dom(), &[1, 2, 1]).unwrap().with_enlargement(0.1).unwrap();
        let d = enlarge(&p.subdomains()[0]).unwrap();
        assert_eq!(d.y0_box()[0], (-2.0, 2.0));
        assert_eq!(d.y0_box()[1], (-4.0 - 0.2, 0.0 + 0.2));
        assert_eq!(d.t0_interval(), Some((0.0, 2.0)));
    }
}
