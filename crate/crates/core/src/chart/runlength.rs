//! Monte Carlo estimation of the run-length distribution of the chart.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ChartParams, ChartState};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};

/// Supplies spectra for Phase I (in control) and Phase II (possibly defective).
pub trait SpectrumSource: Sync {
    fn in_control(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
    fn out_of_control(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
}

/// Generates a fresh part for every draw; `f(rng, defective)`.
pub struct FnSource<F>(pub F);

impl<F> SpectrumSource for FnSource<F>
where
    F: Fn(&mut ChaCha8Rng, bool) -> Result<Vec<f64>> + Sync,
{
    fn in_control(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        (self.0)(rng, false)
    }

    fn out_of_control(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        (self.0)(rng, true)
    }
}

/// Resamples, with replacement, from spectra generated in advance. Each replication then costs
/// chart work only, while draws remain i.i.d. from the pooled empirical distribution.
#[derive(Debug, Clone)]
pub struct PooledSource {
    pub in_control: Vec<Vec<f64>>,
    pub out_of_control: Vec<Vec<f64>>,
}

impl PooledSource {
    pub fn new(in_control: Vec<Vec<f64>>, out_of_control: Vec<Vec<f64>>) -> Result<Self> {
        if in_control.is_empty() || out_of_control.is_empty() {
            return Err(Error::InvalidArgument("spectrum pools must be nonempty".into()));
        }
        Ok(Self {
            in_control,
            out_of_control,
        })
    }
}

impl SpectrumSource for PooledSource {
    fn in_control(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(self.in_control[rng.random_range(0..self.in_control.len())].clone())
    }

    fn out_of_control(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(self.out_of_control[rng.random_range(0..self.out_of_control.len())].clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLengthConfig {
    pub reps: usize,
    pub seed: u64,
    /// Phase-II parts after which a replication is stopped and counted as censored.
    pub cap: usize,
    /// Worker threads; `None` reads `LBSPEC_THREADS`, falling back to rayon's default.
    pub threads: Option<usize>,
}

impl Default for RunLengthConfig {
    fn default() -> Self {
        Self {
            reps: 500,
            seed: 0,
            cap: 10_000,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLengthReport {
    pub arl: f64,
    pub sdrl: f64,
    pub reps: usize,
    /// Replications that reached the cap without a signal (counted at the cap).
    pub censored: usize,
    pub run_lengths: Vec<usize>,
}

impl RunLengthReport {
    pub fn from_run_lengths(run_lengths: Vec<usize>, censored: usize) -> Self {
        let n = run_lengths.len();
        let mean = run_lengths.iter().sum::<usize>() as f64 / n.max(1) as f64;
        let sdrl = if n > 1 {
            (run_lengths
                .iter()
                .map(|&r| (r as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        Self {
            arl: mean,
            sdrl,
            reps: n,
            censored,
            run_lengths,
        }
    }

    /// One `scenario,ARL,SDRL,reps,censored` row.
    pub fn write_csv_row<W: Write>(&self, scenario: &str, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{scenario},{:.4},{:.4},{},{}",
            self.arl, self.sdrl, self.reps, self.censored
        )?;
        Ok(())
    }
}

pub const REPORT_HEADER: &str = "scenario,ARL,SDRL,reps,censored";

/// One replication: Phase I from the in-control source, then Phase II until the first signal.
fn replicate(
    source: &dyn SpectrumSource,
    params: &ChartParams,
    cfg: &RunLengthConfig,
    rep: usize,
) -> Result<(usize, bool)> {
    let mut rng = substream(cfg.seed, rep as u64);
    let baseline = (0..params.m0)
        .map(|_| source.in_control(&mut rng))
        .collect::<Result<Vec<_>>>()?;
    let chart_params = ChartParams {
        seed: derive_seed(params.seed ^ cfg.seed, &[rep as u64]),
        ..params.clone()
    };
    let mut state = ChartState::new(chart_params, baseline)?;
    for n in 1..=cfg.cap {
        let s = source.out_of_control(&mut rng)?;
        if state.step(s)?.signal {
            return Ok((n, false));
        }
    }
    Ok((cfg.cap, true))
}

/// Runs `cfg.reps` independent replications and summarises their run lengths.
pub fn run_length_simulation(
    source: &dyn SpectrumSource,
    params: &ChartParams,
    cfg: &RunLengthConfig,
) -> Result<RunLengthReport> {
    params.validate()?;
    if cfg.reps == 0 || cfg.cap == 0 {
        return Err(Error::InvalidArgument(
            "reps and cap must be at least 1".into(),
        ));
    }
    let threads = cfg.threads.or_else(|| {
        std::env::var("LBSPEC_THREADS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
    });
    let work = || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|r| replicate(source, params, cfg, r))
            .collect::<Result<Vec<_>>>()
    };
    let results = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let censored = results.iter().filter(|r| r.1).count();
    if censored > 0 {
        log::warn!(
            "{censored} of {} replications reached the cap of {} parts without a signal",
            cfg.reps,
            cfg.cap
        );
    }
    Ok(RunLengthReport::from_run_lengths(
        results.into_iter().map(|r| r.0).collect(),
        censored,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_source(shift: f64) -> impl SpectrumSource {
        FnSource(move |rng: &mut ChaCha8Rng, defective: bool| {
            let d = if defective { shift } else { 0.0 };
            Ok((0..3)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z + d
                })
                .collect())
        })
    }

    fn small_params(alpha: f64) -> ChartParams {
        ChartParams {
            m0: 30,
            p: 3,
            alpha,
            permutations: 300,
            ..ChartParams::default()
        }
    }

    #[test]
    fn large_shift_is_caught_at_the_second_part() {
        let src = normal_source(50.0);
        let cfg = RunLengthConfig {
            reps: 20,
            seed: 1,
            ..Default::default()
        };
        let rep = run_length_simulation(&src, &small_params(0.005), &cfg).unwrap();
        assert_eq!(rep.run_lengths, vec![2; 20]);
        assert_eq!(rep.sdrl, 0.0);
        assert_eq!(rep.censored, 0);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let src = normal_source(0.5);
        let params = small_params(0.05);
        let mut cfg = RunLengthConfig {
            reps: 12,
            seed: 7,
            threads: Some(1),
            ..Default::default()
        };
        let a = run_length_simulation(&src, &params, &cfg).unwrap();
        cfg.threads = Some(3);
        let b = run_length_simulation(&src, &params, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn censoring_is_reported() {
        let src = normal_source(0.0);
        let cfg = RunLengthConfig {
            reps: 3,
            seed: 2,
            cap: 1,
            threads: Some(1),
        };
        // at n = 1 the smallest attainable p-value is 2/31 > α
        let rep = run_length_simulation(&src, &small_params(0.01), &cfg).unwrap();
        assert_eq!(rep.censored, 3);
        assert_eq!(rep.arl, 1.0);
    }

    #[test]
    fn pooled_source_draws_from_pools() {
        let src = PooledSource::new(vec![vec![1.0]], vec![vec![2.0]]).unwrap();
        let mut rng = substream(0, 0);
        assert_eq!(src.in_control(&mut rng).unwrap(), vec![1.0]);
        assert_eq!(src.out_of_control(&mut rng).unwrap(), vec![2.0]);
        assert!(PooledSource::new(vec![], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn report_row_format() {
        let r = RunLengthReport::from_run_lengths(vec![2, 2, 4], 0);
        let mut buf = Vec::new();
        r.write_csv_row("demo", &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "demo,2.6667,1.1547,3,0\n");
    }

    #[test]
    fn conditioning_calibrates_in_control_run_length() {
        let src = normal_source(0.0);
        let mut params = ChartParams {
            permutations: 400,
            ..small_params(0.1)
        };
        let cfg = RunLengthConfig {
            reps: 400,
            seed: 5,
            ..Default::default()
        };
        let cond = run_length_simulation(&src, &params, &cfg).unwrap();
        // geometric with mean 1/α = 10; the standard error at 400 reps is about 0.5
        assert!((8.5..=11.5).contains(&cond.arl), "{}", cond.arl);
        params.history = 0;
        let uncond = run_length_simulation(&src, &params, &cfg).unwrap();
        assert!(uncond.arl > cond.arl + 3.0, "{} vs {}", uncond.arl, cond.arl);
    }
}
