//! Collocation sampling and least-squares training of ψ-models.

mod lm;

pub use lm::{gauss_newton, nllsq_perturb, PerturbConfig, Termination, TrainConfig, TrainReport};

use rayon::prelude::*;

use crate::decomp::{enlarge, DecomposedModel, Partition};
use crate::error::{Error, Result};
use crate::odecore::IvpSystem;
use crate::psirep::{Assembler, CollocationSet, NetConfig, PsiKind, PsiModel};
use crate::randnet::rng::{derive_seed, SeededRng, Stream};

/// `q` uniform points in `sampling_box` (axes `y0`, optional `t0`, `ξ`).
pub fn sample_collocation(sampling_box: &[(f64, f64)], q: usize, seed: u64, has_t0: bool) -> Result<CollocationSet> {
    if q == 0 {
        return Err(Error::invalid("need at least one collocation point"));
    }
    if sampling_box.len() < 2 {
        return Err(Error::invalid("sampling box needs a state axis and a ξ axis"));
    }
    if let Some((k, _)) = sampling_box.iter().enumerate().find(|(_, &(a, b))| !(a < b) || !(b - a).is_finite()) {
        return Err(Error::invalid(format!("sampling box axis {k} is degenerate: {:?}", sampling_box[k])));
    }
    let mut rng = SeededRng::new(seed, Stream::Collocation);
    let points: Vec<Vec<f64>> =
        (0..q).map(|_| sampling_box.iter().map(|&(a, b)| rng.uniform(a, b)).collect()).collect();
    CollocationSet::from_points(&points, has_t0, seed)
}

/// Fits `β` of `model` on `cfg.q` collocation points drawn from its domain.
pub fn train_model(mut model: PsiModel, cfg: &TrainConfig) -> Result<(PsiModel, TrainReport)> {
    let points = sample_collocation(&model.domain().sampling_box(), cfg.q, cfg.seed, !model.is_autonomous())?;
    let mut cfg = cfg.clone();
    cfg.perturb.magnitude.get_or_insert(0.5 * model.subnet().rm());
    let (beta, report) = {
        let asm = Assembler::new(&model, &points)?;
        nllsq_perturb(|b| asm.residual(b), |b| asm.jacobian(b), model.beta(), &cfg)?
    };
    model.set_beta(&beta)?;
    model.set_trained(true);
    log::info!(
        "trained {} ({}): |r|_inf = {:.3e} after {} iterations, {} restarts, {:.2}s",
        model.system().name(),
        model.kind().label(),
        report.residual_max,
        report.iterations,
        report.restarts,
        report.wall_time_seconds
    );
    Ok((model, report))
}

/// Trains one local model per sub-domain of `partition` on its enlarged box.
/// Seeds are derived from the base seeds and the sub-domain id, so the result
/// does not depend on `jobs`.
pub fn train_decomposed(
    system: &IvpSystem,
    partition: &Partition,
    kind: PsiKind,
    net: &NetConfig,
    cfg: &TrainConfig,
    jobs: usize,
) -> Result<(DecomposedModel, Vec<TrainReport>)> {
    let train_one = |id: usize| -> Result<(PsiModel, TrainReport)> {
        let sub = &partition.subdomains()[id];
        let domain = enlarge(sub)?;
        let mut local_net = net.clone();
        local_net.seed = derive_seed(net.seed, id);
        if let Some(dm) = sub.delta_m_local {
            local_net.delta_m = dm;
        }
        let local_cfg = cfg.clone().with_seed(derive_seed(cfg.seed, id));
        let model = PsiModel::new(system.clone(), domain, kind, &local_net)?;
        train_model(model, &local_cfg)
    };
    let ids: Vec<usize> = (0..partition.len()).collect();
    let results: Vec<Result<(PsiModel, TrainReport)>> = if jobs <= 1 {
        ids.iter().map(|&id| train_one(id)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| ids.par_iter().map(|&id| train_one(id)).collect())
    };
    let mut models = Vec::with_capacity(results.len());
    let mut reports = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    let mut errors = Vec::new();
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok((m, rep)) => {
                models.push(m);
                reports.push(rep);
            }
            Err(e) => {
                failed.push(id);
                errors.push(e);
            }
        }
    }
    if !failed.is_empty() {
        return Err(Error::SubdomainFailures { ids: failed, errors });
    }
    Ok((DecomposedModel::new(partition.clone(), models)?, reports))
}
