//! Feature models, configurations and the direct validity checker.
//!
//! A [`FeatureModel`] can only be obtained from a [`ModelDraft`] that passes
//! the structural checks, so every model handed to the rest of the crate is a
//! rooted decomposition tree with well-formed groups and resolved references.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::{canonicalize, Code, Diagnostic};
use crate::rational::Rational;
use crate::terms::TermBag;

/// Largest model the brute-force enumerator accepts.
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    Invalid(Vec<Diagnostic>),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` is both selected and excluded")]
    Contradictory(FeatureId),
    #[error("model has {features} features, brute-force enumeration is limited to {limit}")]
    TooLarge { features: usize, limit: usize },
    #[error("`{0}` is not a valid identifier")]
    InvalidToken(String),
}

/// Returns true when `text` matches `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_token(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureId(String);

impl FeatureId {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if is_token(&text) {
            Ok(FeatureId(text))
        } else {
            Err(ModelError::InvalidToken(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for FeatureId {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        FeatureId::new(value)
    }
}

impl From<FeatureId> for String {
    fn from(id: FeatureId) -> String {
        id.0
    }
}

impl FromStr for FeatureId {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureId::new(s)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for FeatureId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

fn fid(text: &str) -> FeatureId {
    FeatureId::new(text).unwrap_or_else(|e| panic!("{e}"))
}

/// Selection state of a feature in a decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum State {
    In,
    Out,
}

impl State {
    pub fn as_bool(self) -> bool {
        self == State::In
    }

    pub fn from_bool(value: bool) -> Self {
        if value {
            State::In
        } else {
            State::Out
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            State::In => "in",
            State::Out => "out",
        })
    }
}

impl FromStr for State {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in" => Ok(State::In),
            "out" => Ok(State::Out),
            other => Err(format!("expected `in` or `out`, found `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Mandatory,
    Optional,
}

impl EdgeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            EdgeKind::Mandatory => "mandatory",
            EdgeKind::Optional => "optional",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DecompositionEdge {
    pub parent: FeatureId,
    pub child: FeatureId,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Group {
    pub id: String,
    pub parent: FeatureId,
    pub members: Vec<FeatureId>,
    pub card_min: u32,
    pub card_max: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossKind {
    Requires,
    Mutex,
}

impl CrossKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CrossKind::Requires => "requires",
            CrossKind::Mutex => "mutex",
        }
    }
}

/// `requires(a, b)` reads "a requires b"; `mutex` is unordered.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CrossTreeConstraint {
    pub kind: CrossKind,
    pub a: FeatureId,
    pub b: FeatureId,
}

impl CrossTreeConstraint {
    pub fn links(&self, x: &FeatureId, y: &FeatureId) -> bool {
        (&self.a == x && &self.b == y) || (&self.a == y && &self.b == x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feature {
    pub id: FeatureId,
    pub display_name: String,
    pub attributes: BTreeMap<String, Rational>,
    /// Explicit terms; `None` means the tokenized display name is used.
    pub terms: Option<TermBag>,
}

impl Feature {
    fn new(id: FeatureId) -> Self {
        Feature { display_name: id.as_str().to_owned(), id, attributes: BTreeMap::new(), terms: None }
    }

    pub fn term_bag(&self) -> TermBag {
        self.terms.clone().unwrap_or_else(|| TermBag::from_text(&self.display_name))
    }
}

/// How a feature is attached to the decomposition tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Incoming {
    Root,
    Mandatory { edge: usize, parent: usize },
    Optional { edge: usize, parent: usize },
    Member { group: usize, parent: usize },
}

impl Incoming {
    pub fn parent(self) -> Option<usize> {
        match self {
            Incoming::Root => None,
            Incoming::Mandatory { parent, .. }
            | Incoming::Optional { parent, .. }
            | Incoming::Member { parent, .. } => Some(parent),
        }
    }
}

/// A value with the 1-based source line it came from, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located<T> {
    pub value: T,
    pub line: Option<usize>,
}

impl<T> Located<T> {
    pub fn new(value: T, line: Option<usize>) -> Self {
        Located { value, line }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupDecl {
    pub id: String,
    pub parent: FeatureId,
    pub card_min: u32,
    pub card_max: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrDecl {
    pub name: String,
    pub feature: FeatureId,
    pub value: Rational,
}

/// An unchecked model as read from a document, before structural validation.
///
/// The builder methods panic on malformed identifiers; parsers construct the
/// fields directly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelDraft {
    pub name: Option<String>,
    pub root: Option<Located<FeatureId>>,
    pub edges: Vec<Located<DecompositionEdge>>,
    pub groups: Vec<Located<GroupDecl>>,
    pub members: Vec<Located<(String, FeatureId)>>,
    pub constraints: Vec<Located<CrossTreeConstraint>>,
    pub attrs: Vec<Located<AttrDecl>>,
    pub terms: Vec<Located<(FeatureId, TermBag)>>,
    /// Features listed without any other information (JSON `features[]`).
    pub features: Vec<Located<FeatureId>>,
}

impl ModelDraft {
    pub fn new(name: &str, root: &str) -> Self {
        ModelDraft { name: Some(name.to_owned()), root: Some(Located::new(fid(root), None)), ..Default::default() }
    }

    pub fn mandatory(self, parent: &str, child: &str) -> Self {
        self.edge(parent, child, EdgeKind::Mandatory)
    }

    pub fn optional(self, parent: &str, child: &str) -> Self {
        self.edge(parent, child, EdgeKind::Optional)
    }

    fn edge(mut self, parent: &str, child: &str, kind: EdgeKind) -> Self {
        self.edges.push(Located::new(DecompositionEdge { parent: fid(parent), child: fid(child), kind }, None));
        self
    }

    pub fn group(mut self, parent: &str, id: &str, card_min: u32, card_max: u32, members: &[&str]) -> Self {
        self.groups.push(Located::new(GroupDecl { id: id.to_owned(), parent: fid(parent), card_min, card_max }, None));
        for m in members {
            self.members.push(Located::new((id.to_owned(), fid(m)), None));
        }
        self
    }

    pub fn requires(self, a: &str, b: &str) -> Self {
        self.cross(CrossKind::Requires, a, b)
    }

    pub fn mutex(self, a: &str, b: &str) -> Self {
        self.cross(CrossKind::Mutex, a, b)
    }

    fn cross(mut self, kind: CrossKind, a: &str, b: &str) -> Self {
        self.constraints.push(Located::new(CrossTreeConstraint { kind, a: fid(a), b: fid(b) }, None));
        self
    }

    pub fn attr(mut self, name: &str, feature: &str, value: Rational) -> Self {
        self.attrs.push(Located::new(AttrDecl { name: name.to_owned(), feature: fid(feature), value }, None));
        self
    }

    pub fn terms(mut self, feature: &str, terms: &[&str]) -> Self {
        self.terms.push(Located::new((fid(feature), TermBag::from_tokens(terms.iter().copied())), None));
        self
    }

    /// Features in declaration order: root, decomposition edges, group
    /// parents, group members, attribute and term subjects, listed features.
    pub fn declared_features(&self) -> Vec<(FeatureId, Option<usize>)> {
        let mut candidates: Vec<(&FeatureId, Option<usize>)> = Vec::new();
        if let Some(root) = &self.root {
            candidates.push((&root.value, root.line));
        }
        for e in &self.edges {
            candidates.push((&e.value.parent, e.line));
            candidates.push((&e.value.child, e.line));
        }
        for g in &self.groups {
            candidates.push((&g.value.parent, g.line));
        }
        for m in &self.members {
            candidates.push((&m.value.1, m.line));
        }
        for a in &self.attrs {
            candidates.push((&a.value.feature, a.line));
        }
        for t in &self.terms {
            candidates.push((&t.value.0, t.line));
        }
        for f in &self.features {
            candidates.push((&f.value, f.line));
        }
        let mut seen = std::collections::HashSet::new();
        candidates.into_iter().filter(|(id, _)| seen.insert(*id)).map(|(id, line)| (id.clone(), line)).collect()
    }

    /// Structural checks: root presence, reference resolution, single
    /// incoming decomposition, group cardinalities, acyclicity and
    /// reachability. An empty result means the draft builds.
    pub fn structural_diagnostics(&self) -> Vec<Diagnostic> {
        let declared = self.declared_features();
        let position: HashMap<&FeatureId, usize> = declared.iter().enumerate().map(|(i, (f, _))| (f, i)).collect();
        let pos = |f: &FeatureId| position.get(f).copied().unwrap_or(usize::MAX);
        let mut out = Vec::new();

        if self.root.is_none() {
            out.push(Diagnostic::new(Code::MissingRoot, vec![], "model declares no root feature").at(Some(1)));
        }

        let mut group_index: HashMap<&str, usize> = HashMap::new();
        for (i, g) in self.groups.iter().enumerate() {
            if let Some(&first) = group_index.get(g.value.id.as_str()) {
                out.push(
                    Diagnostic::new(
                        Code::DupCard,
                        vec![g.value.id.clone()],
                        format!("duplicate cardinality for {}", g.value.id),
                    )
                    .at(g.line)
                    .ordered(vec![pos(&self.groups[first].value.parent)]),
                );
            } else {
                group_index.insert(&g.value.id, i);
            }
        }

        let mut group_members: Vec<Vec<&FeatureId>> = vec![Vec::new(); self.groups.len()];
        for m in &self.members {
            match group_index.get(m.value.0.as_str()) {
                Some(&g) => group_members[g].push(&m.value.1),
                None => out.push(
                    Diagnostic::new(Code::UnknownId, vec![m.value.0.clone()], format!("unknown group {}", m.value.0))
                        .at(m.line)
                        .ordered(vec![pos(&m.value.1)]),
                ),
            }
        }

        for c in &self.constraints {
            let CrossTreeConstraint { kind, a, b } = &c.value;
            for f in [a, b] {
                if !position.contains_key(f) {
                    out.push(
                        Diagnostic::new(
                            Code::UnknownId,
                            vec![f.to_string()],
                            format!("unknown feature {f} in {} constraint", kind.keyword()),
                        )
                        .at(c.line)
                        .ordered(vec![usize::MAX]),
                    );
                }
            }
            if a == b {
                out.push(
                    Diagnostic::new(
                        Code::SelfConstraint,
                        vec![a.to_string()],
                        format!("{} constraint links {a} to itself", kind.keyword()),
                    )
                    .at(c.line)
                    .ordered(vec![pos(a)]),
                );
            }
        }

        // Incoming decompositions per feature.
        let attachments = self.edges.iter().map(|e| (&e.value.child, e.line)).chain(
            self.members.iter().filter(|m| group_index.contains_key(m.value.0.as_str())).map(|m| (&m.value.1, m.line)),
        );
        let mut incoming: HashMap<&FeatureId, usize> = HashMap::new();
        for (child, line) in attachments {
            let count = incoming.entry(child).or_insert(0);
            *count += 1;
            let is_root = self.root.as_ref().is_some_and(|r| &r.value == child);
            let message = if is_root && *count == 1 {
                format!("root {child} cannot be a child")
            } else if *count == 2 {
                format!("feature {child} has more than one parent")
            } else {
                continue;
            };
            out.push(
                Diagnostic::new(Code::DupFeature, vec![child.to_string()], message).at(line).ordered(vec![pos(child)]),
            );
        }

        for (i, g) in self.groups.iter().enumerate() {
            if group_index.get(g.value.id.as_str()) != Some(&i) {
                continue;
            }
            let n = group_members[i].len() as u32;
            let GroupDecl { id, parent, card_min, card_max } = &g.value;
            if n < 2 || !(1 <= *card_min && card_min <= card_max && *card_max <= n) {
                out.push(
                    Diagnostic::new(
                        Code::CardRange,
                        vec![id.clone()],
                        format!("group {id} has cardinality [{card_min}..{card_max}] over {n} members"),
                    )
                    .at(g.line)
                    .ordered(vec![pos(parent)]),
                );
            }
        }

        // Decomposition graph over declared features.
        let n = declared.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut line_of_edge: HashMap<(usize, usize), Option<usize>> = HashMap::new();
        for e in &self.edges {
            let (p, c) = (pos(&e.value.parent), pos(&e.value.child));
            children[p].push(c);
            line_of_edge.entry((p, c)).or_insert(e.line);
        }
        for m in &self.members {
            if let Some(&g) = group_index.get(m.value.0.as_str()) {
                let (p, c) = (pos(&self.groups[g].value.parent), pos(&m.value.1));
                children[p].push(c);
                line_of_edge.entry((p, c)).or_insert(m.line);
            }
        }
        let cycles = cycles(&children);
        let mut on_cycle = vec![false; n];
        for cycle in &cycles {
            for &v in cycle {
                on_cycle[v] = true;
            }
            let line = cycle
                .iter()
                .flat_map(|&v| children[v].iter().filter(|c| cycle.contains(c)).map(move |&c| (v, c)))
                .filter_map(|edge| line_of_edge.get(&edge).copied().flatten())
                .min();
            let names: Vec<String> = cycle.iter().map(|&v| declared[v].0.to_string()).collect();
            out.push(
                Diagnostic::new(
                    Code::Cycle,
                    names.clone(),
                    format!("decomposition cycle through {}", names.join(", ")),
                )
                .at(line)
                .ordered(cycle.clone()),
            );
        }

        if let Some(root) = &self.root {
            let from_root = reachable(&children, [pos(&root.value)]);
            let from_cycles = reachable(&children, (0..n).filter(|&v| on_cycle[v]));
            for v in 0..n {
                if !from_root[v] && !from_cycles[v] {
                    let (id, line) = &declared[v];
                    out.push(
                        Diagnostic::new(
                            Code::Isolated,
                            vec![id.to_string()],
                            format!("feature {id} is not reachable from root {}", root.value),
                        )
                        .at(*line)
                        .ordered(vec![v]),
                    );
                }
            }
        }

        canonicalize(&mut out);
        out
    }

    /// Validates the draft and builds the model.
    pub fn build(&self) -> Result<FeatureModel, ModelError> {
        let diagnostics = self.structural_diagnostics();
        if !diagnostics.is_empty() {
            return Err(ModelError::Invalid(diagnostics));
        }
        FeatureModel::assemble(self)
    }
}

fn reachable(children: &[Vec<usize>], starts: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut seen = vec![false; children.len()];
    let mut stack: Vec<usize> = starts.into_iter().collect();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(children[v].iter().copied().filter(|&c| !seen[c]));
    }
    seen
}

/// Nontrivial strongly connected components (size > 1, or a self-loop), each
/// sorted ascending, ordered by their smallest vertex.
fn cycles(children: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct Tarjan<'a> {
        children: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for i in 0..self.children[v].len() {
                let w = self.children[v][i];
                match self.index[w] {
                    None => {
                        self.visit(w);
                        self.low[v] = self.low[v].min(self.low[w]);
                    }
                    Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                    Some(_) => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut component = Vec::new();
                loop {
                    let w = self.stack.pop().expect("tarjan stack");
                    self.on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                if component.len() > 1 || self.children[v].contains(&v) {
                    component.sort_unstable();
                    self.out.push(component);
                }
            }
        }
    }
    let n = children.len();
    let mut t = Tarjan {
        children,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.out.sort();
    t.out
}

/// A structurally valid feature model. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureModel {
    name: String,
    root: usize,
    features: Vec<Feature>,
    index: HashMap<FeatureId, usize>,
    edges: Vec<DecompositionEdge>,
    groups: Vec<Group>,
    constraints: Vec<CrossTreeConstraint>,
    incoming: Vec<Incoming>,
}

impl FeatureModel {
    fn assemble(draft: &ModelDraft) -> Result<Self, ModelError> {
        let features: Vec<Feature> = draft.declared_features().into_iter().map(|(id, _)| Feature::new(id)).collect();
        let index: HashMap<FeatureId, usize> = features.iter().enumerate().map(|(i, f)| (f.id.clone(), i)).collect();
        let mut model = FeatureModel {
            name: draft.name.clone().unwrap_or_else(|| "unnamed".to_owned()),
            root: index[&draft.root.as_ref().expect("checked root").value],
            incoming: vec![Incoming::Root; features.len()],
            features,
            index,
            edges: draft.edges.iter().map(|e| e.value.clone()).collect(),
            groups: draft
                .groups
                .iter()
                .map(|g| Group {
                    id: g.value.id.clone(),
                    parent: g.value.parent.clone(),
                    members: Vec::new(),
                    card_min: g.value.card_min,
                    card_max: g.value.card_max,
                })
                .collect(),
            constraints: draft.constraints.iter().map(|c| c.value.clone()).collect(),
        };
        for m in &draft.members {
            let group = model.groups.iter_mut().find(|g| g.id == m.value.0).expect("checked group");
            group.members.push(m.value.1.clone());
        }
        for (e, edge) in model.edges.iter().enumerate() {
            let parent = model.index[&edge.parent];
            model.incoming[model.index[&edge.child]] = match edge.kind {
                EdgeKind::Mandatory => Incoming::Mandatory { edge: e, parent },
                EdgeKind::Optional => Incoming::Optional { edge: e, parent },
            };
        }
        for (g, group) in model.groups.iter().enumerate() {
            let parent = model.index[&group.parent];
            for m in &group.members {
                model.incoming[model.index[m]] = Incoming::Member { group: g, parent };
            }
        }
        for a in &draft.attrs {
            let AttrDecl { name, feature, value } = &a.value;
            let i = model.index[feature];
            model.features[i].attributes.insert(name.clone(), value.clone());
        }
        for t in &draft.terms {
            let i = model.index[&t.value.0];
            model.features[i].terms = Some(t.value.1.clone());
        }
        Ok(model)
    }

    /// Converts back to a draft carrying the same information.
    pub fn to_draft(&self) -> ModelDraft {
        let mut draft = ModelDraft {
            name: Some(self.name.clone()),
            root: Some(Located::new(self.root().clone(), None)),
            edges: self.edges.iter().map(|e| Located::new(e.clone(), None)).collect(),
            constraints: self.constraints.iter().map(|c| Located::new(c.clone(), None)).collect(),
            ..Default::default()
        };
        for g in &self.groups {
            draft.groups.push(Located::new(
                GroupDecl { id: g.id.clone(), parent: g.parent.clone(), card_min: g.card_min, card_max: g.card_max },
                None,
            ));
            for m in &g.members {
                draft.members.push(Located::new((g.id.clone(), m.clone()), None));
            }
        }
        for f in &self.features {
            for (name, value) in &f.attributes {
                draft.attrs.push(Located::new(
                    AttrDecl { name: name.clone(), feature: f.id.clone(), value: value.clone() },
                    None,
                ));
            }
            if let Some(terms) = &f.terms {
                draft.terms.push(Located::new((f.id.clone(), terms.clone()), None));
            }
        }
        draft
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> &FeatureId {
        &self.features[self.root].id
    }

    pub fn root_index(&self) -> usize {
        self.root
    }

    /// Features in declaration order.
    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, id: &str) -> Option<&Feature> {
        self.index.get(id).map(|&i| &self.features[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require_index(&self, id: &str) -> Result<usize, ModelError> {
        self.index_of(id).ok_or_else(|| ModelError::UnknownFeature(id.to_owned()))
    }

    pub fn edges(&self) -> &[DecompositionEdge] {
        &self.edges
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn constraints(&self) -> &[CrossTreeConstraint] {
        &self.constraints
    }

    pub fn incoming(&self, feature: usize) -> Incoming {
        self.incoming[feature]
    }

    pub fn parent(&self, feature: usize) -> Option<usize> {
        self.incoming[feature].parent()
    }

    /// True for the root and for mandatory children of such features.
    pub fn is_core(&self, feature: usize) -> bool {
        match self.incoming[feature] {
            Incoming::Root => true,
            Incoming::Mandatory { parent, .. } => self.is_core(parent),
            _ => false,
        }
    }

    /// True when `ancestor` lies strictly above `feature` in the tree.
    pub fn is_ancestor(&self, ancestor: usize, feature: usize) -> bool {
        let mut cur = self.parent(feature);
        while let Some(p) = cur {
            if p == ancestor {
                return true;
            }
            cur = self.parent(p);
        }
        false
    }

    /// Attribute names used anywhere in the model, sorted.
    pub fn attribute_names(&self) -> BTreeSet<&str> {
        self.features.iter().flat_map(|f| f.attributes.keys().map(String::as_str)).collect()
    }

    /// Attribute value of a feature; absent values read as zero.
    pub fn attribute(&self, feature: usize, name: &str) -> Rational {
        self.features[feature].attributes.get(name).cloned().unwrap_or_else(|| Rational::from_integer(0.into()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &FeatureId> {
        self.features.iter().map(|f| &f.id)
    }
}

/// A total assignment: a feature is in iff it belongs to `selected`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub selected: BTreeSet<FeatureId>,
}

impl Configuration {
    pub fn new(selected: impl IntoIterator<Item = FeatureId>) -> Self {
        Configuration { selected: selected.into_iter().collect() }
    }

    /// Builds a configuration from identifiers, panicking on malformed ones.
    pub fn of(ids: &[&str]) -> Self {
        Configuration::new(ids.iter().map(|s| fid(s)))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.selected.contains(id)
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.selected.iter().map(FeatureId::as_str).collect();
        f.write_str(&ids.join(" "))
    }
}

/// Analyst decisions: features explicitly selected or excluded.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialConfiguration {
    decided_in: BTreeSet<FeatureId>,
    decided_out: BTreeSet<FeatureId>,
}

impl PartialConfiguration {
    pub fn new(
        decided_in: impl IntoIterator<Item = FeatureId>,
        decided_out: impl IntoIterator<Item = FeatureId>,
    ) -> Result<Self, ModelError> {
        let mut partial = PartialConfiguration::default();
        for f in decided_in {
            partial.decide(f, State::In)?;
        }
        for f in decided_out {
            partial.decide(f, State::Out)?;
        }
        Ok(partial)
    }

    pub fn empty() -> Self {
        PartialConfiguration::default()
    }

    /// Convenience constructor for literals; panics on malformed or contradictory input.
    pub fn of(decided_in: &[&str], decided_out: &[&str]) -> Self {
        PartialConfiguration::new(decided_in.iter().map(|s| fid(s)), decided_out.iter().map(|s| fid(s)))
            .unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn decide(&mut self, feature: FeatureId, state: State) -> Result<(), ModelError> {
        let (mine, other) = match state {
            State::In => (&mut self.decided_in, &self.decided_out),
            State::Out => (&mut self.decided_out, &self.decided_in),
        };
        if other.contains(&feature) {
            return Err(ModelError::Contradictory(feature));
        }
        mine.insert(feature);
        Ok(())
    }

    pub fn with(&self, feature: FeatureId, state: State) -> Result<Self, ModelError> {
        let mut next = self.clone();
        next.decide(feature, state)?;
        Ok(next)
    }

    pub fn decided_in(&self) -> &BTreeSet<FeatureId> {
        &self.decided_in
    }

    pub fn decided_out(&self) -> &BTreeSet<FeatureId> {
        &self.decided_out
    }

    pub fn state_of(&self, feature: &str) -> Option<State> {
        if self.decided_in.contains(feature) {
            Some(State::In)
        } else if self.decided_out.contains(feature) {
            Some(State::Out)
        } else {
            None
        }
    }

    pub fn decisions(&self) -> impl Iterator<Item = (&FeatureId, State)> {
        self.decided_in.iter().map(|f| (f, State::In)).chain(self.decided_out.iter().map(|f| (f, State::Out)))
    }

    pub fn is_empty(&self) -> bool {
        self.decided_in.is_empty() && self.decided_out.is_empty()
    }

    /// True when `config` agrees with every decision.
    pub fn admits(&self, config: &Configuration) -> bool {
        self.decided_in.iter().all(|f| config.selected.contains(f))
            && self.decided_out.iter().all(|f| !config.selected.contains(f))
    }
}

/// Checks a selection vector (indexed like `model.features()`) directly
/// against the model's validity conditions.
fn valid_selection(model: &FeatureModel, selected: &[bool]) -> bool {
    if !selected[model.root] {
        return false;
    }
    for (i, &on) in selected.iter().enumerate() {
        if on {
            if let Some(p) = model.parent(i) {
                if !selected[p] {
                    return false;
                }
            }
        }
    }
    for edge in &model.edges {
        if edge.kind == EdgeKind::Mandatory
            && selected[model.index[&edge.parent]]
            && !selected[model.index[&edge.child]]
        {
            return false;
        }
    }
    for group in &model.groups {
        let count = group.members.iter().filter(|m| selected[model.index[*m]]).count() as u32;
        let ok = if selected[model.index[&group.parent]] {
            group.card_min <= count && count <= group.card_max
        } else {
            count == 0
        };
        if !ok {
            return false;
        }
    }
    model.constraints.iter().all(|c| {
        let (a, b) = (selected[model.index[&c.a]], selected[model.index[&c.b]]);
        match c.kind {
            CrossKind::Requires => !a || b,
            CrossKind::Mutex => !(a && b),
        }
    })
}

/// Decides validity of a total configuration directly from the model's
/// rules, without going through the constraint compiler or solver.
pub fn is_valid_configuration(model: &FeatureModel, config: &Configuration) -> Result<bool, ModelError> {
    let mut selected = vec![false; model.len()];
    for f in &config.selected {
        selected[model.require_index(f.as_str())?] = true;
    }
    Ok(valid_selection(model, &selected))
}

/// Every valid configuration, found by checking all subsets of features.
pub fn enumerate_brute_force(model: &FeatureModel) -> Result<Vec<Configuration>, ModelError> {
    let n = model.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(ModelError::TooLarge { features: n, limit: BRUTE_FORCE_LIMIT });
    }
    let mut out = Vec::new();
    let mut selected = vec![false; n];
    for mask in 0u32..(1u32 << n) {
        for (i, s) in selected.iter_mut().enumerate() {
            *s = mask & (1 << i) != 0;
        }
        if valid_selection(model, &selected) {
            out.push(Configuration::new(
                selected.iter().zip(&model.features).filter(|(on, _)| **on).map(|(_, f)| f.id.clone()),
            ));
        }
    }
    Ok(out)
}
