//! Repeated protocol runs and their aggregate report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use q2mpc_core::engine::{
    check_setup, evaluate_plain, run_mpc, Circuit, EngineError, Inputs, RunOptions, RunOutcome,
};
use q2mpc_core::simnet::AdversaryScript;
use q2mpc_core::structures::AdversaryStructure;
use q2mpc_core::wss::Params;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub circuit: Circuit,
    pub params: Params,
    pub structure: Option<AdversaryStructure>,
    pub adversary: AdversaryScript,
    pub seed: u64,
    pub trials: usize,
    /// Fixed inputs; drawn per trial from the trial seed when absent.
    pub inputs: Option<Inputs>,
}

impl RunConfig {
    fn options(&self) -> RunOptions {
        RunOptions {
            structure: self.structure.clone(),
            overpowered: false,
        }
    }

    pub fn trial_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    pub fn trial_inputs(&self, index: usize) -> Inputs {
        if let Some(inputs) = &self.inputs {
            return inputs.clone();
        }
        let kf = self.circuit.field();
        let mut rng = ChaCha8Rng::seed_from_u64(self.trial_seed(index));
        self.circuit
            .inputs()
            .map(|(w, _)| (w.clone(), kf.elem(rng.gen_range(0..kf.modulus()))))
            .collect()
    }
}

#[derive(Debug, PartialEq, Eq)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub inputs: Inputs,
    pub outcome: Result<RunOutcome, EngineError>,
    /// Plain evaluation on the inputs the run actually used.
    pub expected: Option<BTreeMap<String, q2mpc_core::field::FieldElement>>,
}

impl Trial {
    /// The run finished but its outputs differ from the plain evaluation.
    pub fn undetected_cheat(&self) -> bool {
        match (&self.outcome, &self.expected) {
            (Ok(out), Some(want)) => out.outputs != *want,
            _ => false,
        }
    }
}

pub fn run_trial(config: &RunConfig, index: usize) -> Trial {
    let seed = config.trial_seed(index);
    let inputs = config.trial_inputs(index);
    let outcome = run_mpc(
        &config.circuit,
        &inputs,
        &config.params,
        &config.adversary,
        seed,
        &config.options(),
    );
    let expected = outcome.as_ref().ok().and_then(|out| {
        let mut effective = inputs.clone();
        effective.extend(out.public_inputs.clone());
        evaluate_plain(&config.circuit, &effective).ok()
    });
    Trial {
        index,
        seed,
        inputs,
        outcome,
        expected,
    }
}

/// Runs every trial on `workers` threads; results come back in trial order.
pub fn run_trials(config: &RunConfig, workers: usize) -> Result<Report, EngineError> {
    check_setup(
        &config.circuit,
        &config.params,
        &config.adversary,
        &config.options(),
    )?;
    let trials = if workers <= 1 {
        (0..config.trials).map(|i| run_trial(config, i)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|i| run_trial(config, i))
                .collect()
        })
    };
    Ok(Report {
        k: config.params.k(),
        adversary: config.adversary.clone(),
        trials,
    })
}

#[derive(Debug)]
pub struct Report {
    pub k: usize,
    pub adversary: AdversaryScript,
    pub trials: Vec<Trial>,
}

fn render_values<V: std::fmt::Display>(m: &BTreeMap<String, V>) -> String {
    let parts: Vec<String> = m.iter().map(|(w, v)| format!("{w}={v}")).collect();
    parts.join(" ")
}

/// Largest count consistent with a binomial at rate `p`: mean plus three
/// standard deviations.
pub fn three_sigma_bound(trials: usize, p: f64) -> f64 {
    let mean = trials as f64 * p;
    mean + 3.0 * (mean * (1.0 - p)).sqrt()
}

impl Report {
    pub fn errors(&self) -> usize {
        self.trials.iter().filter(|t| t.outcome.is_err()).count()
    }

    pub fn undetected_cheats(&self) -> usize {
        self.trials.iter().filter(|t| t.undetected_cheat()).count()
    }

    pub fn failure_threshold(&self) -> (f64, f64) {
        let p = 0.5f64.powi(self.k as i32);
        (
            self.trials.len() as f64 * p,
            three_sigma_bound(self.trials.len(), p),
        )
    }

    /// Errors, or more undetected cheats than the 3σ band allows.
    pub fn protocol_failed(&self) -> bool {
        self.errors() > 0 || self.undetected_cheats() as f64 > self.failure_threshold().1
    }

    pub fn render(&self, per_trial: bool) -> String {
        let mut s = String::new();
        let corrupt = self.adversary.corrupt;
        let params: Vec<String> = self
            .adversary
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        writeln!(
            s,
            "adversary: {}{} corrupt {corrupt}",
            self.adversary.strategy,
            if params.is_empty() {
                String::new()
            } else {
                format!(":{}", params.join(","))
            }
        )
        .unwrap();
        writeln!(s, "k: {}", self.k).unwrap();
        if per_trial {
            for t in &self.trials {
                write!(
                    s,
                    "trial {} seed {}: in {} | ",
                    t.index,
                    t.seed,
                    render_values(&t.inputs)
                )
                .unwrap();
                match &t.outcome {
                    Ok(out) => writeln!(
                        s,
                        "out {} | restarts {} | disqualified {} | rounds {} | messages {} | digest {:016x}{}",
                        render_values(&out.outputs),
                        out.restarts,
                        out.disqualified,
                        out.stats.rounds,
                        out.stats.messages(),
                        out.digest,
                        if t.undetected_cheat() { " | WRONG" } else { "" }
                    )
                    .unwrap(),
                    Err(e) => writeln!(s, "error: {e}").unwrap(),
                }
            }
        }

        let done: Vec<&RunOutcome> = self
            .trials
            .iter()
            .filter_map(|t| t.outcome.as_ref().ok())
            .collect();
        writeln!(s, "trials: {}", self.trials.len()).unwrap();
        writeln!(s, "errors: {}", self.errors()).unwrap();
        let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
        let mut disqualified: BTreeMap<usize, usize> = BTreeMap::new();
        let mut restarts: BTreeMap<usize, usize> = BTreeMap::new();
        for out in &done {
            *histogram.entry(render_values(&out.outputs)).or_default() += 1;
            for p in out.disqualified.iter() {
                *disqualified.entry(p).or_default() += 1;
            }
            *restarts.entry(out.restarts).or_default() += 1;
        }
        writeln!(s, "output histogram:").unwrap();
        for (o, c) in &histogram {
            writeln!(s, "  {o}: {c}").unwrap();
        }
        let dq: Vec<String> = disqualified
            .iter()
            .map(|(p, c)| format!("P{p}: {c}"))
            .collect();
        writeln!(
            s,
            "disqualified: {}",
            if dq.is_empty() {
                "none".into()
            } else {
                dq.join(", ")
            }
        )
        .unwrap();
        let rs: Vec<String> = restarts.iter().map(|(r, c)| format!("{r}: {c}")).collect();
        writeln!(s, "restarts: {}", rs.join(", ")).unwrap();
        let mean = |f: &dyn Fn(&RunOutcome) -> u64| {
            if done.is_empty() {
                0.0
            } else {
                done.iter().map(|o| f(o) as f64).sum::<f64>() / done.len() as f64
            }
        };
        writeln!(s, "mean rounds: {:.1}", mean(&|o| o.stats.rounds)).unwrap();
        writeln!(s, "mean messages: {:.1}", mean(&|o| o.stats.messages())).unwrap();
        writeln!(
            s,
            "mean bounded events: {:.1}",
            mean(&|o| o.stats.bounded_events)
        )
        .unwrap();
        writeln!(s, "undetected cheats: {}", self.undetected_cheats()).unwrap();
        let (expected, band) = self.failure_threshold();
        write!(
            s,
            "threshold: 2^-{}*trials = {expected:.1} (3 sigma band <= {band:.1})",
            self.k
        )
        .unwrap();
        s
    }
}
