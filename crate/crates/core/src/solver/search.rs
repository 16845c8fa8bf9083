//! Depth-first search with propagation at every node. Variables are branched
//! in declaration order, value 0 before value 1, so solutions arrive in a
//! fixed order that resumable cursors reproduce exactly.

use super::engine::{Engine, RawConflict, Reason};
use super::{Conflict, SolverError};
use crate::compiler::ConstraintSystem;
use crate::model::{Configuration, PartialConfiguration};

#[derive(Clone, Copy, Debug)]
struct Frame {
    var: usize,
    trail_len: usize,
    flipped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Fresh,
    Searching,
    Exhausted,
}

/// Pruning data for branch-and-bound: integer-scaled objective coefficients
/// and the best value found so far.
#[derive(Clone, Debug)]
pub(crate) struct Bound {
    pub(crate) coeffs: Vec<i128>,
    pub(crate) minimize: bool,
    pub(crate) incumbent: Option<i128>,
}

impl Bound {
    /// Best objective value reachable from the current partial assignment.
    fn optimistic(&self, values: &[Option<bool>]) -> i128 {
        self.coeffs
            .iter()
            .zip(values)
            .map(|(&c, v)| match v {
                Some(true) => c,
                Some(false) => 0,
                None if self.minimize => c.min(0),
                None => c.max(0),
            })
            .sum()
    }

    fn prunes(&self, values: &[Option<bool>]) -> bool {
        match self.incumbent {
            None => false,
            Some(best) if self.minimize => self.optimistic(values) >= best,
            Some(best) => self.optimistic(values) <= best,
        }
    }
}

/// Resumable enumeration state over one constraint system.
#[derive(Clone, Debug)]
pub struct SolutionCursor {
    system_id: u64,
    engine: Engine,
    frames: Vec<Frame>,
    phase: Phase,
    last_conflict: Option<RawConflict>,
    pub(crate) bound: Option<Bound>,
    delivered: u64,
}

impl SolutionCursor {
    /// Starts a search for configurations extending `partial`.
    pub fn new(system: &ConstraintSystem, partial: &PartialConfiguration) -> Result<Self, SolverError> {
        let engine = super::seeded_engine(system, partial)?;
        Ok(SolutionCursor::from_engine(system, engine))
    }

    pub(crate) fn from_engine(system: &ConstraintSystem, engine: Engine) -> Self {
        SolutionCursor {
            system_id: system.id(),
            engine,
            frames: Vec::new(),
            phase: Phase::Fresh,
            last_conflict: None,
            bound: None,
            delivered: 0,
        }
    }

    /// Returns the next configuration in search order, or `None` once every
    /// solution has been delivered.
    pub fn next(&mut self, system: &ConstraintSystem) -> Result<Option<Configuration>, SolverError> {
        if system.id() != self.system_id {
            return Err(SolverError::StaleCursor);
        }
        if !self.advance() {
            return Ok(None);
        }
        Ok(Some(self.configuration(system)))
    }

    /// Number of solutions delivered so far.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn is_exhausted(&self) -> bool {
        self.phase == Phase::Exhausted
    }

    /// The most recent conflict met by the search; after exhaustion without
    /// any solution this explains why no configuration exists.
    pub fn last_conflict(&self, system: &ConstraintSystem) -> Option<Conflict> {
        self.last_conflict.as_ref().map(|raw| self.engine.conflict(system, raw))
    }

    pub(crate) fn values(&self) -> &[Option<bool>] {
        self.engine.values()
    }

    pub(crate) fn configuration(&self, system: &ConstraintSystem) -> Configuration {
        Configuration::new(
            self.engine
                .values()
                .iter()
                .zip(system.vars())
                .filter(|(v, _)| **v == Some(true))
                .map(|(_, var)| var.feature.clone()),
        )
    }

    /// Moves to the next solution; the engine then holds a total assignment.
    pub(crate) fn advance(&mut self) -> bool {
        match self.phase {
            Phase::Exhausted => return false,
            Phase::Fresh => {
                self.phase = Phase::Searching;
                if let Err(c) = self.engine.propagate_all() {
                    self.last_conflict = Some(c);
                    self.phase = Phase::Exhausted;
                    return false;
                }
            }
            Phase::Searching => {
                if !self.backtrack() {
                    self.phase = Phase::Exhausted;
                    return false;
                }
            }
        }
        loop {
            if self.bound.as_ref().is_some_and(|b| b.prunes(self.engine.values())) {
                if !self.backtrack() {
                    self.phase = Phase::Exhausted;
                    return false;
                }
                continue;
            }
            let Some(var) = self.engine.first_unassigned() else {
                self.delivered += 1;
                return true;
            };
            self.frames.push(Frame { var, trail_len: self.engine.trail_len(), flipped: false });
            self.engine.assign(var, false, Reason::Branch);
            if let Err(c) = self.engine.propagate() {
                self.last_conflict = Some(c);
                if !self.backtrack() {
                    self.phase = Phase::Exhausted;
                    return false;
                }
            }
        }
    }

    /// Flips the deepest branch still at value 0; false when none is left.
    fn backtrack(&mut self) -> bool {
        while let Some(frame) = self.frames.pop() {
            if frame.flipped {
                continue;
            }
            self.engine.backtrack_to(frame.trail_len);
            self.frames.push(Frame { flipped: true, ..frame });
            self.engine.assign(frame.var, true, Reason::Branch);
            match self.engine.propagate() {
                Ok(()) => return true,
                Err(c) => self.last_conflict = Some(c),
            }
        }
        false
    }
}
