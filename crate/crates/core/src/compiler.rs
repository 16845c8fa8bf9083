//! Translation of a feature model into a 0-1 linear constraint system.
//!
//! One variable per feature (1 = selected). Per model element:
//!
//! | element              | constraint                                   |
//! |----------------------|----------------------------------------------|
//! | root                 | `R = 1`                                      |
//! | mandatory a → b      | `Ra = Rb`                                    |
//! | optional a → b       | `Rb <= Ra`                                   |
//! | group under a        | `Rm <= Ra` per member, `min*Ra <= ΣRm <= max` |
//! | requires a b         | `Ra <= Rb`                                   |
//! | mutex a b            | `Ra + Rb <= 1`                               |

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::model::{CrossKind, EdgeKind, FeatureId, FeatureModel};
use crate::rational::Rational;

static NEXT_SYSTEM_ID: AtomicU64 = AtomicU64::new(1);

pub(crate) fn fresh_system_id() -> u64 {
    NEXT_SYSTEM_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Var {
    pub feature: FeatureId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Le,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: i64,
    pub var: usize,
}

impl Term {
    pub fn unit(var: usize) -> Self {
        Term { coeff: 1, var }
    }
}

/// `Σ lhs (= | <=) Σ rhs_terms + rhs_const`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearConstraint {
    pub relation: Relation,
    pub lhs: Vec<Term>,
    pub rhs_terms: Vec<Term>,
    pub rhs_const: i64,
}

impl LinearConstraint {
    fn le(lhs: Vec<Term>, rhs_terms: Vec<Term>, rhs_const: i64) -> Self {
        LinearConstraint { relation: Relation::Le, lhs, rhs_terms, rhs_const }
    }

    fn eq(lhs: Vec<Term>, rhs_terms: Vec<Term>, rhs_const: i64) -> Self {
        LinearConstraint { relation: Relation::Eq, lhs, rhs_terms, rhs_const }
    }

    /// Whether a total 0-1 assignment satisfies the constraint.
    pub fn holds(&self, values: &[bool]) -> bool {
        let sum = |terms: &[Term]| terms.iter().map(|t| if values[t.var] { t.coeff } else { 0 }).sum::<i64>();
        let (l, r) = (sum(&self.lhs), sum(&self.rhs_terms) + self.rhs_const);
        match self.relation {
            Relation::Eq => l == r,
            Relation::Le => l <= r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BoundDirection {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl fmt::Display for BoundDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundDirection::AtMost => "<=",
            BoundDirection::AtLeast => ">=",
        })
    }
}

/// The model element a constraint was emitted for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Root,
    Mandatory { parent: FeatureId, child: FeatureId },
    Optional { parent: FeatureId, child: FeatureId },
    GroupMember { group: String, member: FeatureId },
    GroupMin { group: String },
    GroupMax { group: String },
    Requires { a: FeatureId, b: FeatureId },
    Mutex { a: FeatureId, b: FeatureId },
    AttributeBound { attribute: String, direction: BoundDirection, bound: Rational },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Root => write!(f, "root"),
            Provenance::Mandatory { parent, child } => write!(f, "mandatory {parent} {child}"),
            Provenance::Optional { parent, child } => write!(f, "optional {parent} {child}"),
            Provenance::GroupMember { group, member } => write!(f, "member {group} {member}"),
            Provenance::GroupMin { group } => write!(f, "group {group} min"),
            Provenance::GroupMax { group } => write!(f, "group {group} max"),
            Provenance::Requires { a, b } => write!(f, "requires {a} {b}"),
            Provenance::Mutex { a, b } => write!(f, "mutex {a} {b}"),
            Provenance::AttributeBound { attribute, direction, bound } => {
                write!(f, "bound {attribute} {direction} {}", crate::rational::format_decimal(bound))
            }
        }
    }
}

/// Compiled 0-1 system. Every clone shares the identity of its source;
/// adding a constraint produces a new identity.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    id: u64,
    vars: Vec<Var>,
    index: HashMap<FeatureId, usize>,
    constraints: Vec<LinearConstraint>,
    provenance: Vec<Provenance>,
    attributes: BTreeMap<String, Vec<Rational>>,
}

impl ConstraintSystem {
    /// Identity used to detect stale solver cursors.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn var_of(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn provenance(&self, constraint: usize) -> &Provenance {
        &self.provenance[constraint]
    }

    /// Per-variable values of an attribute (zero where the model has none).
    pub fn attribute(&self, name: &str) -> Option<&[Rational]> {
        self.attributes.get(name).map(Vec::as_slice)
    }

    pub fn attribute_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.keys().map(String::as_str)
    }

    pub(crate) fn push(&mut self, constraint: LinearConstraint, provenance: Provenance) {
        self.constraints.push(constraint);
        self.provenance.push(provenance);
        self.id = fresh_system_id();
    }

    /// Renders one constraint, e.g. `D + E <= 1`.
    pub fn render(&self, constraint: usize) -> String {
        let c = &self.constraints[constraint];
        let explicit_lhs = matches!(self.provenance[constraint], Provenance::GroupMin { .. });
        let side = |terms: &[Term], explicit: bool| -> String {
            let mut out = String::new();
            for (i, t) in terms.iter().enumerate() {
                let name = self.vars[t.var].feature.as_str();
                let (sign, mag) = if t.coeff < 0 { ("-", -t.coeff) } else { ("+", t.coeff) };
                if i == 0 {
                    if sign == "-" {
                        out.push('-');
                    }
                } else {
                    out.push_str(&format!(" {sign} "));
                }
                if mag == 1 && !explicit {
                    out.push_str(name);
                } else {
                    out.push_str(&format!("{mag}*{name}"));
                }
            }
            out
        };
        let (lhs, rhs) = if c.lhs.is_empty() {
            (format!("{}", -c.rhs_const), side(&c.rhs_terms, false))
        } else {
            let mut rhs = side(&c.rhs_terms, false);
            if rhs.is_empty() {
                rhs = c.rhs_const.to_string();
            } else if c.rhs_const > 0 {
                rhs.push_str(&format!(" + {}", c.rhs_const));
            } else if c.rhs_const < 0 {
                rhs.push_str(&format!(" - {}", -c.rhs_const));
            }
            (side(&c.lhs, explicit_lhs), rhs)
        };
        format!("{lhs} {} {rhs}", c.relation.symbol())
    }
}

/// Builds the constraint system of a model.
pub fn compile(model: &FeatureModel) -> ConstraintSystem {
    let vars: Vec<Var> = model.ids().map(|id| Var { feature: id.clone() }).collect();
    let index = vars.iter().enumerate().map(|(i, v)| (v.feature.clone(), i)).collect();
    let attributes = model
        .attribute_names()
        .into_iter()
        .map(|name| (name.to_owned(), (0..model.len()).map(|i| model.attribute(i, name)).collect()))
        .collect();
    let mut system = ConstraintSystem {
        id: fresh_system_id(),
        vars,
        index,
        constraints: Vec::new(),
        provenance: Vec::new(),
        attributes,
    };
    let var = |id: &FeatureId| model.index_of(id.as_str()).expect("model ids resolve");
    let root = model.root_index();
    let mut emit = |c: LinearConstraint, p: Provenance| {
        system.constraints.push(c);
        system.provenance.push(p);
    };

    emit(LinearConstraint::eq(vec![Term::unit(root)], vec![], 1), Provenance::Root);

    for edge in model.edges() {
        let (a, b) = (var(&edge.parent), var(&edge.child));
        let (parent, child) = (edge.parent.clone(), edge.child.clone());
        match edge.kind {
            EdgeKind::Mandatory => emit(
                LinearConstraint::eq(vec![Term::unit(a)], vec![Term::unit(b)], 0),
                Provenance::Mandatory { parent, child },
            ),
            EdgeKind::Optional => emit(
                LinearConstraint::le(vec![Term::unit(b)], vec![Term::unit(a)], 0),
                Provenance::Optional { parent, child },
            ),
        }
    }

    for group in model.groups() {
        let a = var(&group.parent);
        for m in &group.members {
            emit(
                LinearConstraint::le(vec![Term::unit(var(m))], vec![Term::unit(a)], 0),
                Provenance::GroupMember { group: group.id.clone(), member: m.clone() },
            );
        }
        let members: Vec<Term> = group.members.iter().map(|m| Term::unit(var(m))).collect();
        emit(
            LinearConstraint::le(vec![Term { coeff: i64::from(group.card_min), var: a }], members.clone(), 0),
            Provenance::GroupMin { group: group.id.clone() },
        );
        emit(
            LinearConstraint::le(members, vec![], i64::from(group.card_max)),
            Provenance::GroupMax { group: group.id.clone() },
        );
    }

    for c in model.constraints() {
        let (a, b) = (var(&c.a), var(&c.b));
        match c.kind {
            CrossKind::Requires => emit(
                LinearConstraint::le(vec![Term::unit(a)], vec![Term::unit(b)], 0),
                Provenance::Requires { a: c.a.clone(), b: c.b.clone() },
            ),
            CrossKind::Mutex => emit(
                LinearConstraint::le(vec![Term::unit(a), Term::unit(b)], vec![], 1),
                Provenance::Mutex { a: c.a.clone(), b: c.b.clone() },
            ),
        }
    }
    system
}

/// One constraint per line with its provenance as a trailing comment.
pub fn dump(system: &ConstraintSystem) -> String {
    let mut out = String::new();
    for i in 0..system.constraints.len() {
        out.push_str(&format!("{}  # {}\n", system.render(i), system.provenance[i]));
    }
    out
}

pub(crate) fn attribute_bound_constraint(
    system: &ConstraintSystem,
    coefficients: &[Rational],
    direction: BoundDirection,
    bound: &Rational,
) -> Option<LinearConstraint> {
    use num_traits::ToPrimitive;
    let scale = crate::rational::common_denominator(coefficients.iter().chain(std::iter::once(bound)));
    let scale = Rational::from_integer(scale);
    let mut terms = Vec::new();
    for (var, c) in coefficients.iter().enumerate() {
        let scaled = (c * &scale).to_integer().to_i64()?;
        if scaled != 0 {
            terms.push(Term { coeff: scaled, var });
        }
    }
    debug_assert_eq!(coefficients.len(), system.vars.len());
    let k = (bound * &scale).to_integer().to_i64()?;
    Some(match direction {
        BoundDirection::AtMost => LinearConstraint::le(terms, vec![], k),
        BoundDirection::AtLeast => LinearConstraint::le(vec![], terms, -k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::press;
    use crate::model::{enumerate_brute_force, ModelDraft};

    #[test]
    fn press_constraint_count_and_dump() {
        let system = compile(&press());
        // 1 root + 1 composition + 1 option + 3 member bounds + 2 cardinality bounds + 1 requires + 1 mutex
        assert_eq!(system.constraints().len(), 10);
        assert_eq!(
            dump(&system),
            "R = 1  # root\n\
             R = A  # mandatory R A\n\
             B <= R  # optional R B\n\
             C <= R  # member g1 C\n\
             D <= R  # member g1 D\n\
             E <= R  # member g1 E\n\
             1*R <= C + D + E  # group g1 min\n\
             C + D + E <= 2  # group g1 max\n\
             B <= C  # requires B C\n\
             D + E <= 1  # mutex D E\n"
        );
    }

    #[test]
    fn root_only_dump() {
        let system = compile(&ModelDraft::new("S", "R").build().unwrap());
        assert_eq!(dump(&system), "R = 1  # root\n");
    }

    #[test]
    fn constraint_count_formula() {
        let m = press();
        let expected = 1 + 1 + 1 + (3 + 2) + 1 + 1;
        assert_eq!(compile(&m).constraints().len(), expected);
    }

    #[test]
    fn solutions_match_brute_force_by_exhaustion() {
        let m = press();
        let system = compile(&m);
        let n = m.len();
        let mut from_system = Vec::new();
        for mask in 0u32..(1 << n) {
            let values: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
            if system.constraints().iter().all(|c| c.holds(&values)) {
                from_system.push(crate::model::Configuration::new(
                    m.ids().zip(&values).filter(|(_, v)| **v).map(|(id, _)| id.clone()),
                ));
            }
        }
        from_system.sort();
        let mut oracle = enumerate_brute_force(&m).unwrap();
        oracle.sort();
        assert_eq!(from_system, oracle);
    }
}
