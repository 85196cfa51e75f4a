//! Two-round-per-bit rendezvous of adjacent robots.
//!
//! Each robot walks its code from the last bit to the first. A 1 means
//! leave through the target port and come straight back, a 0 means stay
//! for both rounds. Codes have equal weight, so two different codes have a
//! position where one robot moves while the other waits.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::{width, Action, Decision, Dims, EventKind, Fault, Memory, Policy, Snapshot};
use crate::graph::{Color, Port, RobotId, RobotSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeetError {
    #[error("id {id} outside 1..={max}")]
    IdOutOfRange { id: RobotId, max: RobotId },
}

/// Bits per half of the code for ids up to `max`.
pub fn code_half(max: RobotId) -> u32 {
    width(max as u64) as u32
}

/// Complement of the padded id followed by the padded id, first bit first.
/// The padding keeps the low `code_half(max)` bits, so `id == max` on a
/// power of two becomes all zeros, a value no other id uses.
pub fn meeting_code(id: RobotId, max: RobotId) -> Result<String, MeetError> {
    if id == 0 || id > max {
        return Err(MeetError::IdOutOfRange { id, max });
    }
    let w = code_half(max);
    let bits: String = (0..w).rev().map(|i| if (id >> i) & 1 == 1 { '1' } else { '0' }).collect();
    let comp: String = bits.chars().map(|c| if c == '1' { '0' } else { '1' }).collect();
    Ok(comp + &bits)
}

/// Length of the protocol in rounds.
pub fn meeting_rounds(max: RobotId) -> u64 {
    4 * code_half(max) as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeetMem {
    pub id: RobotId,
    pub color: Color,
    /// Rounds already executed.
    pub step: u64,
    /// Highest id in this robot's group; the robot copies its moves.
    pub leader: RobotId,
    pub code: Vec<bool>,
    pub total: u64,
}

impl MeetMem {
    pub fn new(spec: &RobotSpec, max: RobotId) -> Result<Self, MeetError> {
        let code = meeting_code(spec.id, max)?.chars().map(|c| c == '1').collect();
        Ok(MeetMem { id: spec.id, color: spec.color, step: 0, leader: spec.id, code, total: meeting_rounds(max) })
    }

    pub fn done(&self) -> bool {
        self.step >= self.total
    }

    /// Bit driving round `step + 1`, read from the end of the code.
    fn bit(&self) -> bool {
        let i = (self.step / 2) as usize;
        self.code[self.code.len() - 1 - i]
    }
}

impl Memory for MeetMem {
    fn bits(&self, d: &Dims) -> u64 {
        2 * d.id_bits() + d.color_bits() + width(self.total + 1) + self.code.len() as u64
    }

    fn tag(&self) -> &'static str {
        if self.done() {
            "met"
        } else if self.leader == self.id {
            "meet"
        } else {
            "follow"
        }
    }

    fn is_final(&self) -> bool {
        self.done()
    }

    fn phase(&self) -> &'static str {
        "meeting"
    }
}

/// Action of a group led by `lead`, which entered through `entry`.
pub(crate) fn lead_action(lead: &MeetMem, entry: Option<Port>, port: Port) -> Result<Action, Fault> {
    if !lead.bit() {
        return Ok(Action::Stay);
    }
    if lead.step.is_multiple_of(2) {
        return Ok(Action::Exit(port));
    }
    entry
        .map(Action::Exit)
        .ok_or_else(|| Fault::new("DesyncDetected", format!("robot {} must return but did not move", lead.id)))
}

/// A robot's move for the round and the events it logs.
pub(crate) type Step = (Action, Vec<(EventKind, String)>);

/// One round for all robots at a node; collocated groups merge first.
pub(crate) fn meet_node(
    ms: &mut [MeetMem],
    entries: &[Option<Port>],
    port_of: impl Fn(RobotId) -> Port,
) -> Result<Vec<Step>, Fault> {
    let lead = ms.iter().map(|m| m.leader).max().expect("node has robots");
    let li = ms
        .iter()
        .position(|m| m.id == lead)
        .ok_or_else(|| Fault::new("DesyncDetected", format!("leader {lead} is not with its group")))?;
    let action = lead_action(&ms[li], entries[li], port_of(lead))?;
    let mut out = Vec::with_capacity(ms.len());
    for m in ms.iter_mut() {
        let mut ev = Vec::new();
        if m.leader != lead {
            ev.push((EventKind::Merged, format!("leader={lead}")));
            m.leader = lead;
        }
        m.step += 1;
        out.push((action, ev));
    }
    Ok(out)
}

/// Standalone meeting protocol; every robot targets port 0 unless listed.
#[derive(Debug, Clone)]
pub struct MeetPolicy {
    pub max_id: RobotId,
    pub ports: BTreeMap<RobotId, Port>,
}

impl MeetPolicy {
    pub fn new(max_id: RobotId) -> Self {
        MeetPolicy { max_id, ports: BTreeMap::new() }
    }
}

impl Policy for MeetPolicy {
    type Mem = MeetMem;

    fn name(&self) -> &'static str {
        "meet_adjacent"
    }

    /// Ids beyond the range get an empty code; `compute` refuses them.
    fn init(&self, spec: &RobotSpec) -> MeetMem {
        MeetMem::new(spec, self.max_id).unwrap_or(MeetMem {
            id: spec.id,
            color: spec.color,
            step: 0,
            leader: spec.id,
            code: Vec::new(),
            total: meeting_rounds(self.max_id),
        })
    }

    fn compute(&self, snap: &Snapshot<'_, MeetMem>) -> Result<Vec<Decision<MeetMem>>, Fault> {
        let mut ms: Vec<MeetMem> = snap.residents().iter().map(|r| r.mem.clone()).collect();
        if let Some(m) = ms.iter().find(|m| m.code.is_empty() && m.total > 0) {
            return Err(Fault::new("IdOutOfRange", format!("id {} exceeds {}", m.id, self.max_id)));
        }
        let entries: Vec<Option<Port>> = snap.residents().iter().map(|r| r.entry).collect();
        let outs = meet_node(&mut ms, &entries, |id| self.ports.get(&id).copied().unwrap_or(0))?;
        Ok(ms.into_iter().zip(outs).map(|(mem, (action, events))| Decision { mem, action, events }).collect())
    }
}
