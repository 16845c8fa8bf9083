//! Text and JSON formats: the feature-model DSL, requirement files and
//! lexicon files.
//!
//! Model DSL, one directive per line, `#` starts a comment:
//!
//! ```text
//! model <name>
//! root <feature>
//! mandatory <parent> <child>
//! optional <parent> <child>
//! group <parent> <groupid> <min> <max>
//! member <groupid> <feature>
//! requires <a> <b>
//! mutex <a> <b>
//! attr <attrname> <feature> <decimal>
//! terms <feature> <term>...
//! ```
//!
//! Identifiers are resolved after the whole document is read, so directives
//! may appear in any order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::matcher::{Lexicon, Priority, StakeholderRequirement};
use crate::model::{
    is_token, AttrDecl, CrossKind, CrossTreeConstraint, DecompositionEdge, EdgeKind, FeatureId, FeatureModel,
    GroupDecl, Located, ModelDraft, ModelError,
};
use crate::rational::{decimal, format_decimal, parse_decimal, Rational};
use crate::terms::{normalize_term, TermBag};

/// A line-oriented text document and where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceDocument {
    pub origin: String,
    pub text: String,
}

impl SourceDocument {
    pub fn new(origin: impl Into<String>, text: impl Into<String>) -> Self {
        SourceDocument { origin: origin.into(), text: text.into() }
    }

    pub fn inline(text: impl Into<String>) -> Self {
        SourceDocument::new("<inline>", text)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        Ok(SourceDocument::new(path.display().to_string(), std::fs::read_to_string(path)?))
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.text.lines()
    }
}

impl fmt::Display for SourceDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseErrorKind {
    Syntax,
    Semantic,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::Semantic => "semantic",
        })
    }
}

/// First problem found in a document. `line` and `column` are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("{origin}:{line}:{column}: {kind} error: {message}")]
pub struct ParseError {
    pub origin: String,
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
    /// What the parser would have accepted at that position.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<String>,
    /// All structural diagnostics, for semantic errors found while building.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

struct Token<'a> {
    column: usize,
    text: &'a str,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token { column: content[..s].chars().count() + 1, text: &content[s..i] });
                start = None;
            }
            _ => {}
        }
    }
    out
}

struct LineCtx<'a> {
    origin: &'a str,
    line: usize,
    tokens: Vec<Token<'a>>,
    /// Column just past the last token, for "missing argument" errors.
    end: usize,
}

impl<'a> LineCtx<'a> {
    fn error(&self, column: usize, kind: ParseErrorKind, message: String, expected: &[&str]) -> ParseError {
        ParseError {
            origin: self.origin.to_owned(),
            line: self.line,
            column,
            kind,
            message,
            expected: expected.iter().map(|s| (*s).to_owned()).collect(),
            diagnostics: Vec::new(),
        }
    }

    /// Checks the argument count against the placeholder names in `shape`.
    fn args(&self, shape: &[&str], variadic: bool) -> Result<Vec<&Token<'a>>, ParseError> {
        let args: Vec<&Token<'a>> = self.tokens[1..].iter().collect();
        let directive = self.tokens[0].text;
        if args.len() < shape.len() {
            let missing = shape[args.len()];
            return Err(self.error(
                self.end,
                ParseErrorKind::Syntax,
                format!("`{directive}` is missing {missing}"),
                &[missing],
            ));
        }
        if !variadic && args.len() > shape.len() {
            let extra = args[shape.len()];
            return Err(self.error(
                extra.column,
                ParseErrorKind::Syntax,
                format!("unexpected `{}` after `{directive}` arguments", extra.text),
                &["end of line"],
            ));
        }
        Ok(args)
    }

    fn feature(&self, token: &Token<'_>) -> Result<FeatureId, ParseError> {
        FeatureId::new(token.text).map_err(|_| {
            self.error(
                token.column,
                ParseErrorKind::Syntax,
                format!("`{}` is not a valid identifier", token.text),
                &["identifier"],
            )
        })
    }

    fn ident(&self, token: &Token<'_>) -> Result<String, ParseError> {
        self.feature(token).map(String::from)
    }

    fn count(&self, token: &Token<'_>, what: &str) -> Result<u32, ParseError> {
        if !token.text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.error(
                token.column,
                ParseErrorKind::Syntax,
                format!("{what} `{}` is not a non-negative integer", token.text),
                &["integer"],
            ));
        }
        token.text.parse().map_err(|_| {
            self.error(
                token.column,
                ParseErrorKind::Syntax,
                format!("{what} `{}` is too large", token.text),
                &["integer"],
            )
        })
    }

    fn rational(&self, token: &Token<'_>) -> Result<Rational, ParseError> {
        parse_decimal(token.text).ok_or_else(|| {
            self.error(
                token.column,
                ParseErrorKind::Syntax,
                format!("`{}` is not a decimal literal", token.text),
                &["decimal"],
            )
        })
    }
}

fn lines(doc: &SourceDocument) -> impl Iterator<Item = LineCtx<'_>> {
    doc.lines().enumerate().filter_map(|(i, text)| {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return None;
        }
        let last = tokens.last().expect("non-empty");
        let end = last.column + last.text.chars().count();
        Some(LineCtx { origin: &doc.origin, line: i + 1, tokens, end })
    })
}

const MODEL_DIRECTIVES: &[&str] =
    &["model", "root", "mandatory", "optional", "group", "member", "requires", "mutex", "attr", "terms"];

/// Reads the model DSL without checking structure; syntax errors and
/// repeated singleton directives are reported here, everything else by
/// [`ModelDraft::structural_diagnostics`].
pub fn parse_draft(doc: &SourceDocument) -> Result<ModelDraft, ParseError> {
    let mut draft = ModelDraft::default();
    let mut attrs_seen: HashSet<(String, FeatureId)> = HashSet::new();
    let mut terms_seen: HashSet<FeatureId> = HashSet::new();
    for ctx in lines(doc) {
        let head = &ctx.tokens[0];
        let line = Some(ctx.line);
        match head.text {
            "model" => {
                let args = ctx.args(&["<name>"], false)?;
                if draft.name.is_some() {
                    return Err(ctx.error(
                        head.column,
                        ParseErrorKind::Semantic,
                        "duplicate `model` directive".into(),
                        &[],
                    ));
                }
                draft.name = Some(ctx.ident(args[0])?);
            }
            "root" => {
                let args = ctx.args(&["<feature>"], false)?;
                if let Some(root) = &draft.root {
                    return Err(ctx.error(
                        head.column,
                        ParseErrorKind::Semantic,
                        format!("duplicate `root` directive (root {} already declared)", root.value),
                        &[],
                    ));
                }
                draft.root = Some(Located::new(ctx.feature(args[0])?, line));
            }
            "mandatory" | "optional" => {
                let args = ctx.args(&["<parent>", "<child>"], false)?;
                let kind = if head.text == "mandatory" { EdgeKind::Mandatory } else { EdgeKind::Optional };
                let edge = DecompositionEdge { parent: ctx.feature(args[0])?, child: ctx.feature(args[1])?, kind };
                draft.edges.push(Located::new(edge, line));
            }
            "group" => {
                let args = ctx.args(&["<parent>", "<groupid>", "<min>", "<max>"], false)?;
                let group = GroupDecl {
                    parent: ctx.feature(args[0])?,
                    id: ctx.ident(args[1])?,
                    card_min: ctx.count(args[2], "minimum")?,
                    card_max: ctx.count(args[3], "maximum")?,
                };
                draft.groups.push(Located::new(group, line));
            }
            "member" => {
                let args = ctx.args(&["<groupid>", "<feature>"], false)?;
                draft.members.push(Located::new((ctx.ident(args[0])?, ctx.feature(args[1])?), line));
            }
            "requires" | "mutex" => {
                let args = ctx.args(&["<a>", "<b>"], false)?;
                let kind = if head.text == "requires" { CrossKind::Requires } else { CrossKind::Mutex };
                let c = CrossTreeConstraint { kind, a: ctx.feature(args[0])?, b: ctx.feature(args[1])? };
                draft.constraints.push(Located::new(c, line));
            }
            "attr" => {
                let args = ctx.args(&["<attrname>", "<feature>", "<value>"], false)?;
                let decl = AttrDecl {
                    name: ctx.ident(args[0])?,
                    feature: ctx.feature(args[1])?,
                    value: ctx.rational(args[2])?,
                };
                if !attrs_seen.insert((decl.name.clone(), decl.feature.clone())) {
                    return Err(ctx.error(
                        head.column,
                        ParseErrorKind::Semantic,
                        format!("duplicate value for attribute {} of {}", decl.name, decl.feature),
                        &[],
                    ));
                }
                draft.attrs.push(Located::new(decl, line));
            }
            "terms" => {
                let args = ctx.args(&["<feature>", "<term>"], true)?;
                let feature = ctx.feature(args[0])?;
                let bag = TermBag::from_tokens(args[1..].iter().map(|t| t.text));
                if bag.is_empty() {
                    return Err(ctx.error(
                        args[1].column,
                        ParseErrorKind::Semantic,
                        format!("terms of {feature} are empty after normalization"),
                        &[],
                    ));
                }
                if !terms_seen.insert(feature.clone()) {
                    return Err(ctx.error(
                        head.column,
                        ParseErrorKind::Semantic,
                        format!("duplicate `terms` directive for {feature}"),
                        &[],
                    ));
                }
                draft.terms.push(Located::new((feature, bag), line));
            }
            other => {
                return Err(ctx.error(
                    head.column,
                    ParseErrorKind::Syntax,
                    format!("unknown directive `{other}`"),
                    MODEL_DIRECTIVES,
                ))
            }
        }
    }
    Ok(draft)
}

fn semantic_error(origin: &str, diagnostics: Vec<Diagnostic>) -> ParseError {
    let first = diagnostics.iter().min_by_key(|d| d.line.unwrap_or(usize::MAX)).expect("at least one diagnostic");
    ParseError {
        origin: origin.to_owned(),
        line: first.line.unwrap_or(1),
        column: 1,
        kind: ParseErrorKind::Semantic,
        message: first.message.clone(),
        expected: Vec::new(),
        diagnostics,
    }
}

/// Parses and builds a model; the error points at the earliest line with a
/// structural problem and carries every diagnostic.
pub fn parse_model(doc: &SourceDocument) -> Result<FeatureModel, ParseError> {
    build(&doc.origin, &parse_draft(doc)?)
}

fn build(origin: &str, draft: &ModelDraft) -> Result<FeatureModel, ParseError> {
    draft.build().map_err(|e| match e {
        ModelError::Invalid(diagnostics) => semantic_error(origin, diagnostics),
        other => ParseError {
            origin: origin.to_owned(),
            line: 1,
            column: 1,
            kind: ParseErrorKind::Semantic,
            message: other.to_string(),
            expected: Vec::new(),
            diagnostics: Vec::new(),
        },
    })
}

/// Canonical DSL text: model, root, decomposition edges, groups, members,
/// constraints, attributes sorted by (name, feature), terms.
pub fn serialize_model(model: &FeatureModel) -> SourceDocument {
    let mut out = format!("model {}\nroot {}\n", model.name(), model.root());
    for e in model.edges() {
        out.push_str(&format!("{} {} {}\n", e.kind.keyword(), e.parent, e.child));
    }
    for g in model.groups() {
        out.push_str(&format!("group {} {} {} {}\n", g.parent, g.id, g.card_min, g.card_max));
    }
    for g in model.groups() {
        for m in &g.members {
            out.push_str(&format!("member {} {m}\n", g.id));
        }
    }
    for c in model.constraints() {
        out.push_str(&format!("{} {} {}\n", c.kind.keyword(), c.a, c.b));
    }
    let mut attrs: Vec<(&str, &FeatureId, &Rational)> = model
        .features()
        .iter()
        .flat_map(|f| f.attributes.iter().map(move |(name, v)| (name.as_str(), &f.id, v)))
        .collect();
    attrs.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    for (name, feature, value) in attrs {
        out.push_str(&format!("attr {name} {feature} {}\n", format_decimal(value)));
    }
    for f in model.features() {
        if let Some(terms) = &f.terms {
            out.push_str(&format!("terms {} {terms}\n", f.id));
        }
    }
    SourceDocument::new(model.name(), out)
}

/// Reads `req <id> [must|want] <term>...` lines.
pub fn parse_requirements(doc: &SourceDocument) -> Result<Vec<StakeholderRequirement>, ParseError> {
    let mut out: Vec<StakeholderRequirement> = Vec::new();
    for ctx in lines(doc) {
        let head = &ctx.tokens[0];
        if head.text != "req" {
            return Err(ctx.error(
                head.column,
                ParseErrorKind::Syntax,
                format!("unknown directive `{}`", head.text),
                &["req"],
            ));
        }
        let args = ctx.args(&["<id>", "<term>"], true)?;
        let id = ctx.ident(args[0])?;
        let (priority, rest) = match args[1].text {
            "must" => (Some(Priority::Must), &args[2..]),
            "want" => (Some(Priority::Want), &args[2..]),
            _ => (None, &args[1..]),
        };
        let terms = TermBag::from_tokens(rest.iter().map(|t| t.text));
        if terms.is_empty() {
            let column = rest.first().map_or(ctx.end, |t| t.column);
            return Err(ctx.error(
                column,
                ParseErrorKind::Semantic,
                format!("requirement {id} has no terms"),
                &["<term>"],
            ));
        }
        if out.iter().any(|r| r.id == id) {
            return Err(ctx.error(
                args[0].column,
                ParseErrorKind::Semantic,
                format!("duplicate requirement id {id}"),
                &[],
            ));
        }
        out.push(StakeholderRequirement { id, terms, priority });
    }
    Ok(out)
}

/// Reads `param a|b <v>`, `hom <t1> <t2>` and `hyp <child> <parent>` lines.
/// Absent parameters keep their defaults.
pub fn parse_lexicon(doc: &SourceDocument) -> Result<Lexicon, ParseError> {
    let mut lexicon = Lexicon::default();
    for ctx in lines(doc) {
        let head = &ctx.tokens[0];
        match head.text {
            "param" => {
                let args = ctx.args(&["<name>", "<value>"], false)?;
                let value = ctx.rational(args[1])?;
                let result = match args[0].text {
                    "a" => lexicon.set_a(value),
                    "b" => lexicon.set_b(value),
                    other => {
                        return Err(ctx.error(
                            args[0].column,
                            ParseErrorKind::Syntax,
                            format!("unknown parameter `{other}`"),
                            &["a", "b"],
                        ))
                    }
                };
                result.map_err(|e| ctx.error(args[1].column, ParseErrorKind::Semantic, e.to_string(), &[]))?;
            }
            "hom" | "hyp" => {
                let args = ctx.args(&["<term>", "<term>"], false)?;
                let term = |t: &Token<'_>| {
                    normalize_term(t.text).ok_or_else(|| {
                        ctx.error(
                            t.column,
                            ParseErrorKind::Syntax,
                            format!("`{}` is not a single term", t.text),
                            &["term"],
                        )
                    })
                };
                let (x, y) = (term(args[0])?, term(args[1])?);
                let result = if head.text == "hom" { lexicon.add_homonym(&x, &y) } else { lexicon.add_hyponym(&x, &y) };
                result.map_err(|e| ctx.error(head.column, ParseErrorKind::Semantic, e.to_string(), &[]))?;
            }
            other => {
                return Err(ctx.error(
                    head.column,
                    ParseErrorKind::Syntax,
                    format!("unknown directive `{other}`"),
                    &["param", "hom", "hyp"],
                ))
            }
        }
    }
    Ok(lexicon)
}

/// Canonical lexicon text: parameters, homonyms, hyponyms.
pub fn serialize_lexicon(lexicon: &Lexicon) -> SourceDocument {
    let mut out = format!("param a {}\nparam b {}\n", format_decimal(lexicon.a()), format_decimal(lexicon.b()));
    for (x, y) in lexicon.homonyms() {
        out.push_str(&format!("hom {x} {y}\n"));
    }
    for (x, y) in lexicon.hyponyms() {
        out.push_str(&format!("hyp {x} {y}\n"));
    }
    SourceDocument::inline(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureJson {
    pub id: FeatureId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub parent: FeatureId,
    pub child: FeatureId,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupJson {
    pub id: String,
    pub parent: FeatureId,
    pub min: u32,
    pub max: u32,
    pub members: Vec<FeatureId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub kind: CrossKind,
    pub a: FeatureId,
    pub b: FeatureId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecimalJson(#[serde(with = "decimal")] pub Rational);

/// JSON mirror of the DSL. `attrs` maps attribute name to feature to value;
/// values are decimal strings (numbers are accepted on input).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub root: FeatureId,
    #[serde(default)]
    pub features: Vec<FeatureJson>,
    #[serde(default)]
    pub edges: Vec<EdgeJson>,
    #[serde(default)]
    pub groups: Vec<GroupJson>,
    #[serde(default)]
    pub constraints: Vec<ConstraintJson>,
    #[serde(default)]
    pub attrs: BTreeMap<String, BTreeMap<FeatureId, DecimalJson>>,
}

impl ModelJson {
    pub fn from_model(model: &FeatureModel) -> Self {
        let mut attrs: BTreeMap<String, BTreeMap<FeatureId, DecimalJson>> = BTreeMap::new();
        for f in model.features() {
            for (name, value) in &f.attributes {
                attrs.entry(name.clone()).or_default().insert(f.id.clone(), DecimalJson(value.clone()));
            }
        }
        ModelJson {
            name: Some(model.name().to_owned()),
            root: model.root().clone(),
            features: model
                .features()
                .iter()
                .map(|f| FeatureJson {
                    id: f.id.clone(),
                    terms: f.terms.as_ref().map(|t| t.iter().map(str::to_owned).collect()),
                })
                .collect(),
            edges: model
                .edges()
                .iter()
                .map(|e| EdgeJson { parent: e.parent.clone(), child: e.child.clone(), kind: e.kind })
                .collect(),
            groups: model
                .groups()
                .iter()
                .map(|g| GroupJson {
                    id: g.id.clone(),
                    parent: g.parent.clone(),
                    min: g.card_min,
                    max: g.card_max,
                    members: g.members.clone(),
                })
                .collect(),
            constraints: model
                .constraints()
                .iter()
                .map(|c| ConstraintJson { kind: c.kind, a: c.a.clone(), b: c.b.clone() })
                .collect(),
            attrs,
        }
    }

    /// Converts to a draft; reference and structure problems are left to
    /// the draft's diagnostics.
    pub fn to_draft(&self) -> Result<ModelDraft, String> {
        if let Some(name) = &self.name {
            if !is_token(name) {
                return Err(format!("model name `{name}` is not a valid identifier"));
            }
        }
        let mut draft = ModelDraft {
            name: self.name.clone(),
            root: Some(Located::new(self.root.clone(), None)),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    Located::new(
                        DecompositionEdge { parent: e.parent.clone(), child: e.child.clone(), kind: e.kind },
                        None,
                    )
                })
                .collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Located::new(CrossTreeConstraint { kind: c.kind, a: c.a.clone(), b: c.b.clone() }, None))
                .collect(),
            ..Default::default()
        };
        for g in &self.groups {
            if !is_token(&g.id) {
                return Err(format!("group id `{}` is not a valid identifier", g.id));
            }
            draft.groups.push(Located::new(
                GroupDecl { id: g.id.clone(), parent: g.parent.clone(), card_min: g.min, card_max: g.max },
                None,
            ));
            draft.members.extend(g.members.iter().map(|m| Located::new((g.id.clone(), m.clone()), None)));
        }
        for (name, values) in &self.attrs {
            if !is_token(name) {
                return Err(format!("attribute name `{name}` is not a valid identifier"));
            }
            for (feature, value) in values {
                draft.attrs.push(Located::new(
                    AttrDecl { name: name.clone(), feature: feature.clone(), value: value.0.clone() },
                    None,
                ));
            }
        }
        for f in &self.features {
            if let Some(terms) = &f.terms {
                let bag = TermBag::from_tokens(terms.iter().map(String::as_str));
                if bag.is_empty() {
                    return Err(format!("terms of {} are empty after normalization", f.id));
                }
                draft.terms.push(Located::new((f.id.clone(), bag), None));
            }
            draft.features.push(Located::new(f.id.clone(), None));
        }
        Ok(draft)
    }
}

/// Reads a JSON model into a draft. Malformed JSON is a syntax error with
/// the position reported by the JSON reader.
pub fn parse_model_json_draft(doc: &SourceDocument) -> Result<ModelDraft, ParseError> {
    let json: ModelJson = serde_json::from_str(&doc.text).map_err(|e| ParseError {
        origin: doc.origin.clone(),
        line: e.line().max(1),
        column: e.column().max(1),
        kind: ParseErrorKind::Syntax,
        message: e.to_string(),
        expected: Vec::new(),
        diagnostics: Vec::new(),
    })?;
    json.to_draft().map_err(|message| ParseError {
        origin: doc.origin.clone(),
        line: 1,
        column: 1,
        kind: ParseErrorKind::Syntax,
        message,
        expected: Vec::new(),
        diagnostics: Vec::new(),
    })
}

pub fn parse_model_json(doc: &SourceDocument) -> Result<FeatureModel, ParseError> {
    build(&doc.origin, &parse_model_json_draft(doc)?)
}

/// Reads either model format: documents whose first non-blank character
/// is `{` are JSON, anything else is the DSL.
pub fn parse_any_draft(doc: &SourceDocument) -> Result<ModelDraft, ParseError> {
    if doc.text.trim_start().starts_with('{') {
        parse_model_json_draft(doc)
    } else {
        parse_draft(doc)
    }
}

pub fn model_to_json(model: &FeatureModel) -> serde_json::Value {
    serde_json::to_value(ModelJson::from_model(model)).expect("model JSON is always serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_model, Shape};
    use crate::model::tests::press;
    use crate::rational::{from_int, ratio};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) const PRESS: &str = "\
model PRESS
root R
mandatory R A
optional R B
group R g1 1 2
member g1 C
member g1 D
member g1 E
requires B C
mutex D E
attr cost R 0
attr cost A 1
attr cost B 2
attr cost C 5
attr cost D 3
attr cost E 4
";

    fn doc(text: &str) -> SourceDocument {
        SourceDocument::inline(text)
    }

    #[test]
    fn parses_press() {
        let m = parse_model(&doc(PRESS)).unwrap();
        assert_eq!(m, press());
        assert_eq!(m.len(), 6);
        assert_eq!(m.groups().len(), 1);
        assert_eq!(m.constraints().len(), 2);
    }

    #[test]
    fn sniffs_format() {
        let json = serde_json::to_string(&model_to_json(&press())).unwrap();
        assert_eq!(parse_any_draft(&doc(&format!("  \n{json}"))).unwrap().build().unwrap(), press());
        assert_eq!(parse_any_draft(&doc(PRESS)).unwrap().build().unwrap(), press());
    }

    #[test]
    fn press_canonical_form() {
        let canonical = serialize_model(&press()).text;
        let (head, attrs) = canonical.split_at(canonical.find("attr").unwrap());
        assert!(PRESS.starts_with(head));
        assert_eq!(attrs, "attr cost A 1\nattr cost B 2\nattr cost C 5\nattr cost D 3\nattr cost E 4\nattr cost R 0\n");
        assert_eq!(serialize_model(&parse_model(&doc(&canonical)).unwrap()).text, canonical);
    }

    #[test]
    fn root_only() {
        let m = parse_model(&doc("root R")).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.name(), "unnamed");
        assert_eq!(serialize_model(&m).text, "model unnamed\nroot R\n");
    }

    #[test]
    fn duplicate_cardinality() {
        let text = "root R\ngroup R g1 1 2\ngroup R g1 1 3\nmember g1 C\nmember g1 D\n";
        let e = parse_model(&doc(text)).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Semantic);
        assert_eq!(e.message, "duplicate cardinality for g1");
        assert_eq!(e.line, 3);
    }

    #[test]
    fn directive_order_is_free() {
        let shuffled = "attr cost E 4\nmutex D E\nrequires B C\nmember g1 E\nmember g1 D\nmember g1 C\n\
                        group R g1 1 2\noptional R B\nmandatory R A\nroot R\nmodel PRESS\n\
                        attr cost D 3\nattr cost C 5\nattr cost B 2\nattr cost A 1\nattr cost R 0\n";
        let m = parse_model(&doc(shuffled)).unwrap();
        assert_eq!(m.len(), 6);
        let again = parse_model(&serialize_model(&m)).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn comments_and_blank_lines() {
        let m = parse_model(&doc("# header\n\nroot R   # the root\n  optional R X\n")).unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_model(&doc("root R\nfeature X\n")).unwrap_err();
        assert_eq!((e.line, e.column, e.kind), (2, 1, ParseErrorKind::Syntax));
        assert!(e.expected.contains(&"mandatory".to_owned()));

        let e = parse_model(&doc("root R\n  optional R\n")).unwrap_err();
        assert_eq!((e.line, e.column), (2, 13));
        assert_eq!(e.expected, ["<child>"]);

        let e = parse_model(&doc("root R\noptional R 9x\n")).unwrap_err();
        assert_eq!((e.line, e.column), (2, 12));

        let e = parse_model(&doc("root R\ngroup R g1 one 2\n")).unwrap_err();
        assert_eq!((e.line, e.column), (2, 12));

        let e = parse_model(&doc("root R\nattr cost R 1e3\n")).unwrap_err();
        assert_eq!((e.line, e.column), (2, 13));

        let e = parse_model(&doc("root R\nroot S\n")).unwrap_err();
        assert_eq!((e.line, e.kind), (2, ParseErrorKind::Semantic));

        let e = parse_model(&doc("root R\nmutex R S extra\n")).unwrap_err();
        assert_eq!((e.line, e.column), (2, 11));
    }

    #[test]
    fn semantic_errors_point_at_lines() {
        let e = parse_model(&doc("root R\nmandatory R X\nmandatory A B\nmandatory B A\n")).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Semantic);
        assert_eq!(e.line, 3);
        assert_eq!(e.diagnostics.iter().map(|d| d.code.as_str()).collect::<Vec<_>>(), ["CYCLE"]);

        let e = parse_model(&doc("root R\nattr cost X 1\n")).unwrap_err();
        assert_eq!(e.diagnostics[0].code.as_str(), "ISOLATED");
        assert_eq!(e.line, 2);

        let e = parse_model(&doc("root R\nrequires R Q\n")).unwrap_err();
        assert_eq!(e.diagnostics[0].code.as_str(), "UNKNOWN_ID");

        let e = parse_model(&doc("root R\noptional R X\nmandatory R X\n")).unwrap_err();
        assert_eq!((e.line, e.diagnostics[0].code.as_str()), (3, "DUP_FEATURE"));

        let e = parse_model(&doc("root R\nattr cost R 1\nattr cost R 2\n")).unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn attrs_sorted_on_output() {
        let text = "model m\nroot R\noptional R B\nattr weight B 2.5\nattr cost R -1\nattr cost B 0.125\n";
        let out = serialize_model(&parse_model(&doc(text)).unwrap()).text;
        assert!(out.ends_with("attr cost B 0.125\nattr cost R -1\nattr weight B 2.5\n"));
    }

    #[test]
    fn terms_override_display_name() {
        let text = "root R\noptional R Pump\nterms Pump Blood-Pump fluid\n";
        let m = parse_model(&doc(text)).unwrap();
        assert_eq!(m.feature("Pump").unwrap().term_bag().to_string(), "blood fluid pump");
        assert!(serialize_model(&m).text.ends_with("terms Pump blood fluid pump\n"));
        assert_eq!(parse_model(&serialize_model(&m)).unwrap(), m);
    }

    #[test]
    fn requirements() {
        let reqs =
            parse_requirements(&doc("req S1 must measure plasma\nreq S2 measure blood\nreq S3 want Blood\n")).unwrap();
        assert_eq!(reqs[0].priority, Some(Priority::Must));
        assert_eq!(reqs[0].terms, TermBag::from_tokens(["measure", "plasma"]));
        assert_eq!(reqs[1].priority, None);
        assert_eq!(reqs[1].terms, TermBag::from_tokens(["measure", "blood"]));
        assert_eq!(reqs[2].priority, Some(Priority::Want));

        let e = parse_requirements(&doc("req S1 a b\nreq S1 measure\n")).unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_requirements(&doc("req S1 measure\nreq S1 measure\n")).unwrap_err();
        assert_eq!((e.line, e.message.as_str()), (2, "duplicate requirement id S1"));
        let e = parse_requirements(&doc("req S1 must\n")).unwrap_err();
        assert_eq!(e.expected, ["<term>"]);
    }

    #[test]
    fn lexicons() {
        let lex = parse_lexicon(&doc("param b 0.25\nhyp plasma blood\n")).unwrap();
        assert!(lex.is_hyponym("plasma", "blood"));
        assert_eq!(lex.b(), &ratio(1, 4));
        assert_eq!(lex.a(), &ratio(1, 10));

        let e = parse_lexicon(&doc("param a 1.0\n")).unwrap_err();
        assert_eq!((e.line, e.column, e.kind), (1, 9, ParseErrorKind::Semantic));

        assert_eq!(parse_lexicon(&doc("")).unwrap(), Lexicon::default());
        assert!(parse_lexicon(&doc("hom x\n")).is_err());
        assert!(parse_lexicon(&doc("hyp two-words blood\n")).is_err());
        assert!(parse_lexicon(&doc("param c 0.5\n")).is_err());

        let lex = parse_lexicon(&doc("param a 0.2\nhom Gauge measure\nhyp plasma blood\n")).unwrap();
        assert_eq!(parse_lexicon(&serialize_lexicon(&lex)).unwrap(), lex);
    }

    #[test]
    fn json_round_trip() {
        let m = press();
        let json = model_to_json(&m);
        assert_eq!(json["attrs"]["cost"]["C"], "5");
        assert_eq!(json["groups"][0]["members"], serde_json::json!(["C", "D", "E"]));
        let back = parse_model_json(&SourceDocument::inline(json.to_string())).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_inputs() {
        let text = r#"{"root": "R", "features": [{"id": "R"}, {"id": "X", "terms": ["pump"]}],
                       "edges": [{"parent": "R", "child": "X", "kind": "optional"}],
                       "attrs": {"cost": {"X": 1.5, "R": "2"}}}"#;
        let m = parse_model_json(&SourceDocument::inline(text)).unwrap();
        assert_eq!(m.attribute(m.index_of("X").unwrap(), "cost"), ratio(3, 2));
        assert_eq!(m.attribute(0, "cost"), from_int(2));

        let isolated = r#"{"root": "R", "features": [{"id": "R"}, {"id": "Y"}]}"#;
        let e = parse_model_json(&SourceDocument::inline(isolated)).unwrap_err();
        assert_eq!(e.diagnostics[0].code.as_str(), "ISOLATED");

        let broken = "{\"root\": \"R\",\n \"edges\": [}";
        let e = parse_model_json(&SourceDocument::inline(broken)).unwrap_err();
        assert_eq!((e.kind, e.line), (ParseErrorKind::Syntax, 2));
    }

    proptest! {
        #[test]
        fn dsl_round_trip(seed in any::<u64>()) {
            let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), &Shape::default());
            let text = serialize_model(&m);
            let back = parse_model(&text).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(serialize_model(&back).text, text.text);
        }

        #[test]
        fn json_round_trip_random(seed in any::<u64>()) {
            let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), &Shape::default());
            let json = model_to_json(&m).to_string();
            prop_assert_eq!(parse_model_json(&SourceDocument::inline(json)).unwrap(), m);
        }
    }
}
