use super::pulse::{apply_beamsplitter, apply_gravity_phase};
use crate::error::{invalid, Error, Result};
use crate::gpe::{Propagator, StepPolicy};
use crate::grid::Workspace;
use crate::state::FieldState2;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// BS1 at release, MZ of interrogation time T + T_oat.
    PlainMz,
    /// Free expansion for 2 T_oat, then MZ of interrogation time T.
    ExpandThenMz,
    /// BS1, T_oat, M1, T_oat, BS2, T, M2, T, BS3.
    QuantumEnhanced,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::PlainMz, Protocol::ExpandThenMz, Protocol::QuantumEnhanced];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::PlainMz => "plain_mz",
            Protocol::ExpandThenMz => "expand_then_mz",
            Protocol::QuantumEnhanced => "quantum_enhanced",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid("protocol", "expected plain_mz, expand_then_mz or quantum_enhanced"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseLabel {
    Bs1,
    M1,
    Bs2,
    M2,
    Bs3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Pulse { label: PulseLabel, theta: f64, phi: f64 },
    FreeEvolve { duration: f64 },
    /// Relative phase k0 g tau^2 accumulated over an arm of length tau.
    GravityPhase { tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
}

/// Pulse parameters for BS2 and the compensating phases of the quantum-enhanced sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bs2Setting {
    pub theta: f64,
    /// phi' in phi = -k0 g0 T_oat^2 + phi'.
    pub phi: f64,
}

impl PulseSequence {
    pub fn quantum_enhanced(t_oat: f64, t: f64, bs2: Bs2Setting, k0: f64, g0: f64) -> Self {
        let (phi, phi_bs3) = crate::oat::compensation_phases(k0, g0, t, t_oat, bs2.phi);
        use Segment::*;
        PulseSequence {
            segments: vec![
                Pulse { label: PulseLabel::Bs1, theta: FRAC_PI_2, phi: -FRAC_PI_2 },
                FreeEvolve { duration: t_oat },
                Pulse { label: PulseLabel::M1, theta: PI, phi: 0.0 },
                FreeEvolve { duration: t_oat },
                GravityPhase { tau: t_oat },
                Pulse { label: PulseLabel::Bs2, theta: bs2.theta, phi },
                FreeEvolve { duration: t },
                Pulse { label: PulseLabel::M2, theta: PI, phi: 0.0 },
                FreeEvolve { duration: t },
                GravityPhase { tau: t },
                Pulse { label: PulseLabel::Bs3, theta: -FRAC_PI_2, phi: phi_bs3 },
            ],
        }
    }

    /// pi/2 - tau - pi - tau - pi/2 after an optional wait, BS3 phase at mid-fringe for g0.
    pub fn mach_zehnder(wait: f64, tau: f64, k0: f64, g0: f64) -> Self {
        use Segment::*;
        let mut segments = Vec::new();
        if wait > 0.0 {
            segments.push(FreeEvolve { duration: wait });
        }
        segments.extend([
            Pulse { label: PulseLabel::Bs1, theta: FRAC_PI_2, phi: -FRAC_PI_2 },
            FreeEvolve { duration: tau },
            Pulse { label: PulseLabel::M1, theta: PI, phi: 0.0 },
            FreeEvolve { duration: tau },
            GravityPhase { tau },
            Pulse { label: PulseLabel::Bs3, theta: -FRAC_PI_2, phi: -k0 * g0 * tau * tau },
        ]);
        PulseSequence { segments }
    }

    pub fn for_protocol(p: Protocol, t_oat: f64, t: f64, bs2: Bs2Setting, k0: f64, g0: f64) -> Self {
        match p {
            Protocol::PlainMz => Self::mach_zehnder(0.0, t + t_oat, k0, g0),
            Protocol::ExpandThenMz => Self::mach_zehnder(2.0 * t_oat, t, k0, g0),
            Protocol::QuantumEnhanced => Self::quantum_enhanced(t_oat, t, bs2, k0, g0),
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| if let Segment::FreeEvolve { duration } = s { *duration } else { 0.0 })
            .sum()
    }

    /// Longest time any wavepacket spends in component 2 (co-moving drift at the recoil
    /// velocity), following packets through splits and swaps.
    pub fn max_drift_time(&self) -> f64 {
        let mut packets: Vec<(bool, f64)> = vec![(false, 0.0)];
        let mut best: f64 = 0.0;
        for s in &self.segments {
            match *s {
                Segment::Pulse { theta, .. } => {
                    let (sn, cs) = (0.5 * theta).sin_cos();
                    let mut next = Vec::new();
                    for &(two, t) in &packets {
                        if cs.abs() > 1e-6 {
                            next.push((two, t));
                        }
                        if sn.abs() > 1e-6 {
                            next.push((!two, t));
                        }
                    }
                    next.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    next.dedup_by(|a, b| a.0 == b.0 && (a.1 - b.1).abs() < 1e-12);
                    packets = next;
                }
                Segment::FreeEvolve { duration } => {
                    for p in &mut packets {
                        if p.0 {
                            p.1 += duration;
                            best = best.max(p.1);
                        }
                    }
                }
                Segment::GravityPhase { .. } => {}
            }
        }
        best
    }

    pub fn validate(&self) -> Result<()> {
        let mut labels = Vec::new();
        for s in &self.segments {
            match s {
                Segment::FreeEvolve { duration } if !(*duration >= 0.0 && duration.is_finite()) => {
                    return Err(Error::MalformedSequence("negative or non-finite duration".into()));
                }
                Segment::GravityPhase { tau } if !(*tau >= 0.0 && tau.is_finite()) => {
                    return Err(Error::MalformedSequence("negative gravity arm".into()));
                }
                Segment::Pulse { label, theta, phi } => {
                    if !(theta.is_finite() && phi.is_finite()) {
                        return Err(Error::MalformedSequence(format!("{label:?} has a non-finite angle")));
                    }
                    if labels.contains(label) {
                        return Err(Error::MalformedSequence(format!("{label:?} appears twice")));
                    }
                    labels.push(*label);
                }
                _ => {}
            }
        }
        let order = [PulseLabel::Bs1, PulseLabel::M1, PulseLabel::Bs2, PulseLabel::M2, PulseLabel::Bs3];
        let pos: Vec<usize> = labels.iter().map(|l| order.iter().position(|o| o == l).unwrap()).collect();
        if pos.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::MalformedSequence("pulses out of order".into()));
        }
        if labels.first() != Some(&PulseLabel::Bs1) || labels.last() != Some(&PulseLabel::Bs3) {
            return Err(Error::MalformedSequence("sequence must open with BS1 and close with BS3".into()));
        }
        Ok(())
    }
}

/// Per-shot deviations applied while running a sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShotDeviation {
    /// Pulse-area offset: every pulse theta becomes theta + sign(theta) * d_theta.
    pub d_theta: f64,
}

/// Runs one field through `seq`. At the first gravity imprint the field is copied once per
/// entry of `g_values`; the copies then run on identical step schedules.
pub fn run_branches(
    seq: &PulseSequence,
    start: &FieldState2,
    prop: &Propagator,
    policy: &StepPolicy,
    k0: f64,
    g_values: &[f64],
    dev: ShotDeviation,
    ws: &mut Workspace,
) -> Result<Vec<FieldState2>> {
    if g_values.is_empty() {
        return Err(invalid("g_values", "need at least one"));
    }
    let mut states = vec![start.clone()];
    let mut branched = false;
    for seg in &seq.segments {
        match *seg {
            Segment::Pulse { theta, phi, .. } => {
                let th = theta + theta.signum() * dev.d_theta;
                for s in &mut states {
                    apply_beamsplitter(s, th, phi)?;
                }
            }
            Segment::FreeEvolve { duration } => {
                let steps = policy.schedule(states[0].time, duration, &prop.interaction)?;
                for s in &mut states {
                    prop.run_steps(s, &steps, ws)?;
                }
            }
            Segment::GravityPhase { tau } => {
                if !branched {
                    let base = states.pop().unwrap();
                    states = g_values.iter().map(|_| base.clone()).collect();
                    branched = true;
                }
                for (s, g) in states.iter_mut().zip(g_values) {
                    apply_gravity_phase(s, k0 * g * tau * tau);
                }
            }
        }
    }
    if !branched {
        let base = states.pop().unwrap();
        states = g_values.iter().map(|_| base.clone()).collect();
    }
    Ok(states)
}
