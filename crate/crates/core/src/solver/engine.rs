//! Trail-based bound propagation over normalized 0-1 linear constraints.
//!
//! Every compiled constraint is normalized to `Σ aᵢ·xᵢ <= k` (equalities
//! become two such rows). For a row, the slack is `k` minus the least
//! achievable left-hand side given the current assignment; a negative slack
//! is a conflict, and any unassigned variable whose coefficient magnitude
//! exceeds the slack is forced to the value that keeps the sum low. This
//! single rule yields the option/requires/mutex implications, cardinality
//! counting and the two-way equality of mandatory edges.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::compiler::{ConstraintSystem, Relation};

use super::{Conflict, StepReason, TrailStep};

#[derive(Debug)]
pub(crate) struct Row {
    terms: Vec<(i64, usize)>,
    bound: i64,
    /// Index of the compiled constraint this row came from.
    source: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Reason {
    Decision,
    Branch,
    Row(usize),
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Step {
    pub(crate) var: usize,
    pub(crate) value: bool,
    pub(crate) reason: Reason,
}

/// Raw conflict: violated row plus the trail at the time it was detected.
#[derive(Clone, Debug)]
pub(crate) struct RawConflict {
    pub(crate) row: usize,
    pub(crate) trail: Vec<Step>,
}

#[derive(Debug)]
struct Rows {
    rows: Vec<Row>,
    occurs: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub(crate) struct Engine {
    rows: Arc<Rows>,
    values: Vec<Option<bool>>,
    trail: Vec<Step>,
    qhead: usize,
}

impl Engine {
    pub(crate) fn new(system: &ConstraintSystem) -> Self {
        let n = system.vars().len();
        let mut rows = Vec::new();
        for (source, c) in system.constraints().iter().enumerate() {
            let mut combined: BTreeMap<usize, i64> = BTreeMap::new();
            for t in &c.lhs {
                *combined.entry(t.var).or_default() += t.coeff;
            }
            for t in &c.rhs_terms {
                *combined.entry(t.var).or_default() -= t.coeff;
            }
            let terms: Vec<(i64, usize)> = combined.into_iter().filter(|(_, a)| *a != 0).map(|(v, a)| (a, v)).collect();
            if c.relation == Relation::Eq {
                rows.push(Row { terms: terms.iter().map(|&(a, v)| (-a, v)).collect(), bound: -c.rhs_const, source });
            }
            rows.push(Row { terms, bound: c.rhs_const, source });
        }
        let mut occurs = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &(_, v) in &row.terms {
                occurs[v].push(r);
            }
        }
        Engine { rows: Arc::new(Rows { rows, occurs }), values: vec![None; n], trail: Vec::new(), qhead: 0 }
    }

    pub(crate) fn values(&self) -> &[Option<bool>] {
        &self.values
    }

    pub(crate) fn trail(&self) -> &[Step] {
        &self.trail
    }

    pub(crate) fn trail_len(&self) -> usize {
        self.trail.len()
    }

    pub(crate) fn assign(&mut self, var: usize, value: bool, reason: Reason) {
        debug_assert!(self.values[var].is_none());
        self.values[var] = Some(value);
        self.trail.push(Step { var, value, reason });
    }

    pub(crate) fn first_unassigned(&self) -> Option<usize> {
        self.values.iter().position(Option::is_none)
    }

    pub(crate) fn backtrack_to(&mut self, len: usize) {
        for step in self.trail.drain(len..) {
            self.values[step.var] = None;
        }
        self.qhead = self.qhead.min(len);
    }

    /// Examines every row once, then runs the propagation queue.
    pub(crate) fn propagate_all(&mut self) -> Result<(), RawConflict> {
        let Engine { rows, values, trail, .. } = self;
        for r in 0..rows.rows.len() {
            check_row(rows, r, values, trail)?;
        }
        self.propagate()
    }

    /// Propagates the consequences of trail entries not yet processed.
    pub(crate) fn propagate(&mut self) -> Result<(), RawConflict> {
        let Engine { rows, values, trail, qhead } = self;
        while *qhead < trail.len() {
            let var = trail[*qhead].var;
            *qhead += 1;
            for &r in &rows.occurs[var] {
                check_row(rows, r, values, trail)?;
            }
        }
        Ok(())
    }

    pub(crate) fn conflict(&self, system: &ConstraintSystem, raw: &RawConflict) -> Conflict {
        let constraint = self.rows.rows[raw.row].source;
        Conflict {
            constraint,
            rendered: system.render(constraint),
            provenance: system.provenance(constraint).to_string(),
            trail: raw
                .trail
                .iter()
                .map(|s| TrailStep {
                    feature: system.vars()[s.var].feature.clone(),
                    value: s.value,
                    reason: match s.reason {
                        Reason::Decision => StepReason::Decision,
                        Reason::Branch => StepReason::Search,
                        Reason::Row(row) => {
                            let source = self.rows.rows[row].source;
                            StepReason::Propagated {
                                constraint: source,
                                provenance: system.provenance(source).to_string(),
                            }
                        }
                    },
                })
                .collect(),
        }
    }
}

fn check_row(rows: &Rows, r: usize, values: &mut [Option<bool>], trail: &mut Vec<Step>) -> Result<(), RawConflict> {
    let row = &rows.rows[r];
    let mut least = 0i64;
    for &(a, v) in &row.terms {
        least += match values[v] {
            Some(true) => a,
            Some(false) => 0,
            None => a.min(0),
        };
    }
    let slack = row.bound - least;
    if slack < 0 {
        return Err(RawConflict { row: r, trail: trail.clone() });
    }
    for &(a, v) in &row.terms {
        if values[v].is_none() && a.abs() > slack {
            values[v] = Some(a < 0);
            trail.push(Step { var: v, value: a < 0, reason: Reason::Row(r) });
        }
    }
    Ok(())
}
