use rayon::prelude::*;

use crate::circuit::qmg1_run;
use crate::des::{run_des, DesConfig};
use crate::error::{Error, Result};
use crate::metrics::{fidelity, fidelity_residual, jsd, log10_offset};
use crate::seed;

use super::config::SensitivityConfig;
use super::output::Csv;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRow {
    pub lambda: f64,
    pub trial: usize,
    pub fidelity: f64,
    pub jsd: f64,
    pub seed: u64,
}

pub const SENSITIVITY_HEADER: [&str; 8] = ["lambda", "trial", "F", "F_R", "log10_F_R", "JSD", "log10_JSD", "seed"];

impl SensitivityRow {
    pub fn f_r(&self) -> f64 {
        fidelity_residual(self.fidelity)
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.lambda.to_string(),
            self.trial.to_string(),
            self.fidelity.to_string(),
            self.f_r().to_string(),
            log10_offset(self.f_r()).to_string(),
            self.jsd.to_string(),
            log10_offset(self.jsd).to_string(),
            self.seed.to_string(),
        ]
    }
}

pub fn sensitivity_row(cfg: &SensitivityConfig, lambda: f64, trial: usize, seed: u64) -> Result<SensitivityRow> {
    let service = cfg.dist.resolve(lambda)?;
    let q = qmg1_run(&cfg.settings.params(lambda, service.clone(), cfg.k, seed))?;
    let d = run_des(&DesConfig::new(lambda, service, cfg.k, seed).with_events(cfg.des_events))?;
    Ok(SensitivityRow { lambda, trial, fidelity: fidelity(&q.p_q, &d.p_c)?, jsd: jsd(&q.p_q, &d.p_c)?, seed })
}

pub fn sensitivity_csv(cfg: &SensitivityConfig) -> Result<String> {
    let base = cfg.seed.ok_or_else(|| Error::Config("sensitivity runs need a seed".into()))?;
    cfg.settings.validate()?;
    let jobs: Vec<(usize, f64, usize)> = cfg
        .lambda_list
        .iter()
        .enumerate()
        .flat_map(|(i, &l)| (0..cfg.trials).map(move |t| (i, l, t)))
        .collect();
    let rows: Vec<SensitivityRow> = jobs
        .par_iter()
        .map(|&(i, l, t)| sensitivity_row(cfg, l, t, seed::derive(base, &[i as u64, t as u64])))
        .collect::<Result<_>>()?;
    let mut csv = Csv::new(&SENSITIVITY_HEADER);
    for r in &rows {
        csv.row(r.fields());
    }
    Ok(csv.finish())
}
