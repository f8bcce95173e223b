//! Parameter sweeps over an `(a, b)` grid.

use crate::config::{ConfigError, ExperimentConfig};
use crate::experiments::{self, Experiment, Outcome};

/// Orbit length for the per-grid-point center exponent.
const LAMBDA_C_STEPS: usize = 100_000;

/// One outcome per grid point, `a` outer and `b` inner. Failures inside a grid
/// point are recorded in its checks; only configuration problems abort.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<Outcome>, ConfigError> {
    cfg.validate()?;
    let kind: Experiment = cfg.sweep.experiment.parse()?;
    let mut out = Vec::with_capacity(cfg.sweep.a.len() * cfg.sweep.b.len());
    for &a in &cfg.sweep.a {
        for &b in &cfg.sweep.b {
            let sub = cfg.at(a, b);
            let mut o = experiments::run(kind, &sub)?;
            o.record.scalars.insert("a".into(), a);
            o.record.scalars.insert("b".into(), b);
            if kind == Experiment::Disintegrate {
                let map = sub.map_family()?;
                let p = phlab::rng::random_points(sub.seed, &format!("{}/lambda-c", sub.id), 1)[0];
                let lc =
                    phlab::batch::with_threads(cfg.threads, || phlab::tangent::center_exponent(&map, &p, LAMBDA_C_STEPS, sub.knobs.depth));
                o.record.scalars.insert("lambda_c".into(), lc.unwrap_or(f64::NAN));
            }
            log::info!("{}", o.record.summary_line());
            out.push(o);
        }
    }
    Ok(out)
}
