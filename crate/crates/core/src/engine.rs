//! Circuit evaluation on verifiably shared values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::{debug, info};
use rand::Rng;
use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};
use crate::mult::{mult, MultError};
use crate::simnet::{AdversaryScript, Event, Network, PartyId, Recording, Stats};
use crate::structures::{AdversaryStructure, PlayerSet, StructureError};
use crate::vss::{vss_deal, vss_linear, vss_open_batch, VssCommitment, VssError};
use crate::wss::Params;

pub type Wire = String;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("gate {gate}: wire '{wire}' is used before it is assigned")]
    Undefined { gate: usize, wire: Wire },
    #[error("gate {gate}: wire '{wire}' is assigned twice")]
    Reassigned { gate: usize, wire: Wire },
    #[error("circuit has no output")]
    NoOutput,
    #[error("gate {gate}: constant {value} is not in GF({modulus})")]
    ConstantOutOfField {
        gate: usize,
        value: u64,
        modulus: u64,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("input wire '{0}' has no value")]
    UnassignedInput(Wire),
    #[error("input wire '{wire}' belongs to P{owner}, but there are only {n} players")]
    UnknownOwner {
        wire: Wire,
        owner: PartyId,
        n: usize,
    },
    #[error("corrupt set {0} is not in the adversary structure")]
    StructureViolation(PlayerSet),
    #[error("adversary structure is not Q2")]
    NotQ2,
    #[error("span program accepts a set of the adversary structure")]
    NotRejected,
    #[error("circuit is over GF({circuit}), span program over GF({msp})")]
    FieldMismatch { circuit: u64, msp: u64 },
    #[error("circuit multiplies but the span program has no multiplication")]
    NoMultiplication,
    #[error("more than {0} restarts")]
    TooManyRestarts(usize),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Protocol(#[from] VssError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Input {
        wire: Wire,
        owner: PartyId,
    },
    ConstAdd {
        out: Wire,
        lambda: FieldElement,
        input: Wire,
    },
    ScalarMul {
        out: Wire,
        lambda: FieldElement,
        input: Wire,
    },
    Add {
        out: Wire,
        a: Wire,
        b: Wire,
    },
    Mul {
        out: Wire,
        a: Wire,
        b: Wire,
    },
    Output {
        wire: Wire,
    },
}

impl Gate {
    fn assigns(&self) -> Option<&Wire> {
        match self {
            Gate::Input { wire, .. } => Some(wire),
            Gate::ConstAdd { out, .. }
            | Gate::ScalarMul { out, .. }
            | Gate::Add { out, .. }
            | Gate::Mul { out, .. } => Some(out),
            Gate::Output { .. } => None,
        }
    }

    fn reads(&self) -> Vec<&Wire> {
        match self {
            Gate::Input { .. } => vec![],
            Gate::ConstAdd { input, .. } | Gate::ScalarMul { input, .. } => vec![input],
            Gate::Add { a, b, .. } | Gate::Mul { a, b, .. } => vec![a, b],
            Gate::Output { wire } => vec![wire],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Input { wire, owner } => write!(f, "in {wire} P{owner}"),
            Gate::ConstAdd { out, lambda, input } => write!(f, "cadd {out} {lambda} {input}"),
            Gate::ScalarMul { out, lambda, input } => write!(f, "smul {out} {lambda} {input}"),
            Gate::Add { out, a, b } => write!(f, "add {out} {a} {b}"),
            Gate::Mul { out, a, b } => write!(f, "mul {out} {a} {b}"),
            Gate::Output { wire } => write!(f, "out {wire}"),
        }
    }
}

/// An arithmetic circuit over `K`, as a topologically ordered gate list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    field: FieldSpec,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(field: FieldSpec, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let mut assigned = BTreeSet::new();
        for (i, g) in gates.iter().enumerate() {
            for w in g.reads() {
                if !assigned.contains(w) {
                    return Err(CircuitError::Undefined {
                        gate: i,
                        wire: w.clone(),
                    });
                }
            }
            if let Gate::ConstAdd { lambda, .. } | Gate::ScalarMul { lambda, .. } = g {
                if !field.contains(lambda) {
                    return Err(CircuitError::ConstantOutOfField {
                        gate: i,
                        value: lambda.value(),
                        modulus: field.modulus(),
                    });
                }
            }
            if let Some(w) = g.assigns() {
                if !assigned.insert(w.clone()) {
                    return Err(CircuitError::Reassigned {
                        gate: i,
                        wire: w.clone(),
                    });
                }
            }
        }
        if !gates.iter().any(|g| matches!(g, Gate::Output { .. })) {
            return Err(CircuitError::NoOutput);
        }
        Ok(Circuit { field, gates })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn inputs(&self) -> impl Iterator<Item = (&Wire, PartyId)> {
        self.gates.iter().filter_map(|g| match g {
            Gate::Input { wire, owner } => Some((wire, *owner)),
            _ => None,
        })
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Wire> {
        self.gates.iter().filter_map(|g| match g {
            Gate::Output { wire } => Some(wire),
            _ => None,
        })
    }

    pub fn mul_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Mul { .. }))
            .count()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "field {}", self.field.modulus())?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

pub type Inputs = BTreeMap<Wire, FieldElement>;

/// Evaluates in the clear; returns the output wires.
pub fn evaluate_plain(
    circuit: &Circuit,
    inputs: &Inputs,
) -> Result<BTreeMap<Wire, FieldElement>, EngineError> {
    let mut values: BTreeMap<&Wire, FieldElement> = BTreeMap::new();
    let mut outputs = BTreeMap::new();
    for g in &circuit.gates {
        let v = |w: &Wire| values[w];
        let x = match g {
            Gate::Input { wire, .. } => *inputs
                .get(wire)
                .ok_or_else(|| EngineError::UnassignedInput(wire.clone()))?,
            Gate::ConstAdd { lambda, input, .. } => v(input) + *lambda,
            Gate::ScalarMul { lambda, input, .. } => v(input) * *lambda,
            Gate::Add { a, b, .. } => v(a) + v(b),
            Gate::Mul { a, b, .. } => v(a) * v(b),
            Gate::Output { wire } => {
                outputs.insert(wire.clone(), v(wire));
                continue;
            }
        };
        values.insert(g.assigns().expect("assigning gate"), x);
    }
    Ok(outputs)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Structure the corrupt set is checked against; the one the span program
    /// induces when absent.
    pub structure: Option<AdversaryStructure>,
    /// Run even when the corrupt set is outside the structure.
    pub overpowered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub outputs: BTreeMap<Wire, FieldElement>,
    pub disqualified: PlayerSet,
    pub restarts: usize,
    /// Inputs that were opened or defaulted, as used in the final attempt.
    pub public_inputs: Inputs,
    pub stats: Stats,
    pub digest: u64,
}

/// Checks the preconditions of a run.
pub fn check_setup(
    circuit: &Circuit,
    params: &Params,
    adversary: &AdversaryScript,
    options: &RunOptions,
) -> Result<(), EngineError> {
    let msp = &params.msp;
    let n = msp.player_count();
    if circuit.field.modulus() != msp.field().modulus() {
        return Err(EngineError::FieldMismatch {
            circuit: circuit.field.modulus(),
            msp: msp.field().modulus(),
        });
    }
    if let Some((wire, owner)) = circuit.inputs().find(|(_, o)| *o >= n) {
        return Err(EngineError::UnknownOwner {
            wire: wire.clone(),
            owner,
            n,
        });
    }
    if circuit.mul_count() > 0 && !msp.has_multiplication() {
        return Err(EngineError::NoMultiplication);
    }
    let structure = match &options.structure {
        Some(s) => {
            if !s.rejected_by(msp)? {
                return Err(EngineError::NotRejected);
            }
            s.clone()
        }
        None => AdversaryStructure::induced_by(msp),
    };
    if !options.overpowered {
        if !structure.is_qk(2) {
            return Err(EngineError::NotQ2);
        }
        if !structure.contains(adversary.corrupt)? {
            return Err(EngineError::StructureViolation(adversary.corrupt));
        }
    }
    Ok(())
}

/// Runs the whole protocol on a fresh network.
pub fn run_mpc(
    circuit: &Circuit,
    inputs: &Inputs,
    params: &Params,
    adversary: &AdversaryScript,
    seed: u64,
    options: &RunOptions,
) -> Result<RunOutcome, EngineError> {
    check_setup(circuit, params, adversary, options)?;
    let mut net = Network::new(params.n(), seed, adversary.clone());
    net.set_recording(Recording::Digest);
    run_on(&mut net, circuit, inputs, params)
}

/// Runs the protocol on `net` without checking preconditions.
///
/// Inputs are shared, the gates evaluated and the outputs opened. When a
/// multiplication asks for a restart, the cheaters' inputs are opened and
/// fixed as public constants, the cheaters are silenced and the evaluation
/// starts again from the inputs.
pub fn run_on(
    net: &mut Network,
    circuit: &Circuit,
    inputs: &Inputs,
    params: &Params,
) -> Result<RunOutcome, EngineError> {
    let n = params.n();
    let kf = *params.computation_field();
    for (wire, owner) in circuit.inputs() {
        let x = *inputs
            .get(wire)
            .ok_or_else(|| EngineError::UnassignedInput(wire.clone()))?;
        net.record_input(owner, x);
    }
    let mut public_inputs = Inputs::new();
    let mut disqualified = net.silenced();
    let mut restarts = 0;

    'attempt: loop {
        let mut wires: BTreeMap<&Wire, VssCommitment> = BTreeMap::new();
        for (wire, owner) in circuit.inputs() {
            let c = match public_inputs.get(wire) {
                Some(v) => VssCommitment::public(params, *v),
                None => match vss_deal(net, params, owner, inputs[wire]) {
                    Ok(c) => c,
                    Err(e) => {
                        info!("input {wire} of P{owner} rejected ({e}); using 0");
                        disqualified.insert(owner);
                        public_inputs.insert(wire.clone(), kf.zero());
                        VssCommitment::public(params, kf.zero())
                    }
                },
            };
            wires.insert(wire, c);
        }

        for g in &circuit.gates {
            let c = match g {
                Gate::Input { .. } | Gate::Output { .. } => continue,
                Gate::ConstAdd { lambda, input, .. } => wires[input].const_add(params, *lambda),
                Gate::ScalarMul { lambda, input, .. } => {
                    vss_linear(net, params, &[(*lambda, &wires[input])])?
                }
                Gate::Add { a, b, .. } => {
                    let one = kf.one();
                    vss_linear(net, params, &[(one, &wires[a]), (one, &wires[b])])?
                }
                Gate::Mul { a, b, .. } => match mult(net, params, &wires[a], &wires[b]) {
                    Ok(c) => c,
                    Err(MultError::RestartRequired(cheaters)) => {
                        restarts += 1;
                        if restarts > n || cheaters.is_subset(&net.silenced()) {
                            return Err(EngineError::TooManyRestarts(n));
                        }
                        debug!("restart {restarts}: cheaters {cheaters}");
                        net.note(Event::Restart { cheaters });
                        let theirs: Vec<(&Wire, &VssCommitment)> = circuit
                            .inputs()
                            .filter(|(w, o)| {
                                cheaters.contains(*o) && !public_inputs.contains_key(*w)
                            })
                            .map(|(w, _)| (w, &wires[w]))
                            .collect();
                        let commits: Vec<&VssCommitment> = theirs.iter().map(|(_, c)| *c).collect();
                        let opened = vss_open_batch(net, params, &commits);
                        for ((w, _), v) in theirs.iter().zip(opened) {
                            public_inputs.insert((*w).clone(), v?);
                        }
                        net.silence(cheaters);
                        disqualified = disqualified.union(&cheaters);
                        continue 'attempt;
                    }
                    Err(MultError::Vss(e)) => return Err(e.into()),
                    Err(MultError::NoMultiplication) => return Err(EngineError::NoMultiplication),
                },
            };
            wires.insert(g.assigns().expect("assigning gate"), c);
        }

        let outs: Vec<&Wire> = circuit.outputs().collect();
        let commits: Vec<&VssCommitment> = outs.iter().map(|w| &wires[*w]).collect();
        let mut outputs = BTreeMap::new();
        for (w, v) in outs.into_iter().zip(vss_open_batch(net, params, &commits)) {
            outputs.insert(w.clone(), v?);
        }
        return Ok(RunOutcome {
            outputs,
            disqualified,
            restarts,
            public_inputs,
            stats: net.stats().clone(),
            digest: net.digest(),
        });
    }
}

/// A random circuit: one input per player, then up to `gates` gates of
/// which at most `max_mul` multiply, then one or two outputs.
pub fn random_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    field: FieldSpec,
    players: usize,
    gates: usize,
    max_mul: usize,
) -> Circuit {
    let mut out = Vec::new();
    let mut wires: Vec<Wire> = Vec::new();
    let inputs = rng.gen_range(1..=players.min(gates.saturating_sub(1)).max(1));
    for i in 0..inputs {
        let w = format!("x{i}");
        out.push(Gate::Input {
            wire: w.clone(),
            owner: rng.gen_range(0..players),
        });
        wires.push(w);
    }
    let outputs = if gates >= inputs + 2 {
        rng.gen_range(1..=2)
    } else {
        1
    };
    let mut muls = 0;
    for i in 0..gates.saturating_sub(inputs + outputs) {
        let o = format!("w{i}");
        let pick = |rng: &mut R| wires[rng.gen_range(0..wires.len())].clone();
        let lambda = field.elem(rng.gen_range(0..field.modulus()));
        let gate = match rng.gen_range(0..4) {
            0 => Gate::ConstAdd {
                out: o.clone(),
                lambda,
                input: pick(rng),
            },
            1 => Gate::ScalarMul {
                out: o.clone(),
                lambda,
                input: pick(rng),
            },
            2 if muls < max_mul => {
                muls += 1;
                Gate::Mul {
                    out: o.clone(),
                    a: pick(rng),
                    b: pick(rng),
                }
            }
            _ => Gate::Add {
                out: o.clone(),
                a: pick(rng),
                b: pick(rng),
            },
        };
        out.push(gate);
        wires.push(o);
    }
    let mut chosen = BTreeSet::new();
    for _ in 0..outputs {
        chosen.insert(wires[rng.gen_range(wires.len().saturating_sub(3)..wires.len())].clone());
    }
    out.extend(chosen.into_iter().map(|wire| Gate::Output { wire }));
    Circuit::new(field, out).expect("generated circuits are well formed")
}
