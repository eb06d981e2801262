//! SPICE-dialect netlists.
//!
//! One card per line; the first line is the title. `*` or `;` starts a
//! comment, `+` continues the previous card. Identifiers are
//! case-insensitive and node `0` is ground.
//!
//! ```text
//! R<name> n+ n- <value>
//! V<name> n+ n- <value>
//! I<name> n+ n- <value>            current flows n+ -> n- through the source
//! M<name> nd ng ns nb <model> W=<v> L=<v>
//! F<name> nd nref ns nb <model> W=<v> L=<v> [PH=<v>]
//! E<name> out+ out- in+ in- <gain> [VMIN=<v> VMAX=<v>]
//! .model <name> NMOS|ISFET (<key=value> ...)
//! .temp <celsius>
//! .op
//! .dc <source> <start> <stop> <step>
//! .sweep ph|temp <start> <stop> <step>
//! .probe <node> [<ref-node>]
//! .end
//! ```
//!
//! Model keys are `VTO KP LAMBDA TCV MUEXP TNOM` for `NMOS`, plus
//! `ALPHA PHPZC EREF EREFTC CHISOL DPHILJ E0 CHELM N0` for `ISFET`.
//! `TNOM` is in °C like every other temperature at this interface.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

mod elaborate;
mod parse;
mod print;
mod value;

pub use elaborate::{elaborate, Circuit, ElaborateError, Element, ElementKind, Node};
pub use parse::parse;
pub use value::{format_value, parse_value, ValueError};

/// Device letters and their fixed terminal counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceKind {
    Resistor,
    VoltageSource,
    CurrentSource,
    Mosfet,
    Isfet,
    Vcvs,
}

impl DeviceKind {
    pub fn from_letter(c: char) -> Option<Self> {
        Some(match c.to_ascii_uppercase() {
            'R' => DeviceKind::Resistor,
            'V' => DeviceKind::VoltageSource,
            'I' => DeviceKind::CurrentSource,
            'M' => DeviceKind::Mosfet,
            'F' => DeviceKind::Isfet,
            'E' => DeviceKind::Vcvs,
            _ => return None,
        })
    }

    pub fn letter(self) -> char {
        match self {
            DeviceKind::Resistor => 'R',
            DeviceKind::VoltageSource => 'V',
            DeviceKind::CurrentSource => 'I',
            DeviceKind::Mosfet => 'M',
            DeviceKind::Isfet => 'F',
            DeviceKind::Vcvs => 'E',
        }
    }

    pub fn terminals(self) -> usize {
        match self {
            DeviceKind::Resistor | DeviceKind::VoltageSource | DeviceKind::CurrentSource => 2,
            DeviceKind::Mosfet | DeviceKind::Isfet | DeviceKind::Vcvs => 4,
        }
    }

    /// Instance parameters accepted after the positional fields.
    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            DeviceKind::Mosfet => &["W", "L"],
            DeviceKind::Isfet => &["W", "L", "PH"],
            DeviceKind::Vcvs => &["VMIN", "VMAX"],
            _ => &[],
        }
    }

    fn takes_model(self) -> bool {
        matches!(self, DeviceKind::Mosfet | DeviceKind::Isfet)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceCard {
    pub kind: DeviceKind,
    /// Full instance name including the letter, as written.
    pub name: String,
    /// Lower-cased node labels in terminal order.
    pub nodes: Vec<String>,
    /// Positional value: resistance, source value or VCVS gain.
    pub value: Option<f64>,
    /// Lower-cased model name for transistors.
    pub model: Option<String>,
    /// Upper-cased keys in file order.
    pub params: Vec<(String, f64)>,
}

impl DeviceCard {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(key))
            .map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Nmos,
    Isfet,
}

impl ModelKind {
    pub const MOS_KEYS: &'static [&'static str] = &["VTO", "KP", "LAMBDA", "TCV", "MUEXP", "TNOM"];
    pub const ISFET_KEYS: &'static [&'static str] = &[
        "ALPHA", "PHPZC", "EREF", "EREFTC", "CHISOL", "DPHILJ", "E0", "CHELM", "N0",
    ];

    pub fn accepts(self, key: &str) -> bool {
        let key_is = |k: &&str| k.eq_ignore_ascii_case(key);
        Self::MOS_KEYS.iter().any(key_is)
            || (self == ModelKind::Isfet && Self::ISFET_KEYS.iter().any(key_is))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Nmos => "NMOS",
            ModelKind::Isfet => "ISFET",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCard {
    /// Lower-cased model name.
    pub name: String,
    pub kind: ModelKind,
    /// Upper-cased keys in file order.
    pub params: Vec<(String, f64)>,
}

impl ModelCard {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(key))
            .map(|&(_, v)| v)
    }
}

/// What a sweep axis varies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    /// pH of every ISFET instance.
    Ph,
    /// Global analysis temperature, °C.
    Temperature,
    /// Value of an independent source (lower-cased name).
    Source(String),
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepVariable::Ph => f.write_str("ph"),
            SweepVariable::Temperature => f.write_str("temp"),
            SweepVariable::Source(s) => f.write_str(s),
        }
    }
}

/// An inclusive `start..=stop` range walked in `step` increments.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepAxis {
    pub fn new(variable: SweepVariable, start: f64, stop: f64, step: f64) -> Self {
        Self {
            variable,
            start,
            stop,
            step,
        }
    }

    /// Number of points, or `None` for a zero step or a step pointing away
    /// from `stop`.
    pub fn len(&self) -> Option<usize> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return None;
        }
        if self.start == self.stop {
            return (self.step != 0.0).then_some(1);
        }
        if self.step == 0.0 {
            return None;
        }
        let spans = (self.stop - self.start) / self.step;
        if spans < 0.0 {
            return None;
        }
        // tolerate accumulated decimal error such as 0..100 step 0.1
        Some(libm::floor(spans + 1e-9) as usize + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len().is_none()
    }

    /// Point values computed as `start + i·step`, so they do not accumulate
    /// rounding error.
    pub fn points(&self) -> Vec<f64> {
        let n = self.len().unwrap_or(0);
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Output node, optionally measured against a second node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbeSpec {
    pub pos: String,
    pub neg: Option<String>,
}

impl ProbeSpec {
    pub fn node(pos: &str) -> Self {
        Self {
            pos: pos.to_ascii_lowercase(),
            neg: None,
        }
    }

    pub fn pair(pos: &str, neg: &str) -> Self {
        Self {
            pos: pos.to_ascii_lowercase(),
            neg: Some(neg.to_ascii_lowercase()),
        }
    }

    /// Column label used in sweep output, e.g. `v(vo)` or `v(vo-ref)`.
    pub fn label(&self) -> String {
        match &self.neg {
            Some(n) => alloc::format!("v({}-{})", self.pos, n),
            None => alloc::format!("v({})", self.pos),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Op,
    /// Analysis temperature, °C.
    Temp(f64),
    /// Source sweep.
    Dc(SweepAxis),
    /// pH or temperature sweep.
    Sweep(SweepAxis),
    Probe(ProbeSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Card {
    Comment(String),
    Device(DeviceCard),
    Model(ModelCard),
    Directive(Directive),
}

/// A card and the 1-based line it started on (0 when built in code).
#[derive(Debug, Clone, PartialEq)]
pub struct CardEntry {
    pub line: usize,
    pub card: Card,
}

/// Parsed file: title plus cards in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub title: String,
    pub cards: Vec<CardEntry>,
}

impl Netlist {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            cards: Vec::new(),
        }
    }

    pub fn push(&mut self, card: Card) -> &mut Self {
        self.cards.push(CardEntry { line: 0, card });
        self
    }

    pub fn comment(&mut self, text: impl Into<String>) -> &mut Self {
        self.push(Card::Comment(text.into()))
    }

    pub fn device(
        &mut self,
        name: &str,
        nodes: &[&str],
        value: Option<f64>,
        model: Option<&str>,
        params: &[(&str, f64)],
    ) -> &mut Self {
        let kind = name
            .chars()
            .next()
            .and_then(DeviceKind::from_letter)
            .expect("device name must start with a known letter");
        self.push(Card::Device(DeviceCard {
            kind,
            name: name.into(),
            nodes: nodes.iter().map(|n| n.to_ascii_lowercase()).collect(),
            value,
            model: model.map(|m| m.to_ascii_lowercase()),
            params: params
                .iter()
                .map(|&(k, v)| (k.to_ascii_uppercase(), v))
                .collect(),
        }))
    }

    pub fn model(&mut self, name: &str, kind: ModelKind, params: &[(&str, f64)]) -> &mut Self {
        self.push(Card::Model(ModelCard {
            name: name.to_ascii_lowercase(),
            kind,
            params: params
                .iter()
                .map(|&(k, v)| (k.to_ascii_uppercase(), v))
                .collect(),
        }))
    }

    pub fn directive(&mut self, d: Directive) -> &mut Self {
        self.push(Card::Directive(d))
    }

    pub fn devices(&self) -> impl Iterator<Item = &DeviceCard> {
        self.cards.iter().filter_map(|e| match &e.card {
            Card::Device(d) => Some(d),
            _ => None,
        })
    }

    pub fn models(&self) -> impl Iterator<Item = &ModelCard> {
        self.cards.iter().filter_map(|e| match &e.card {
            Card::Model(m) => Some(m),
            _ => None,
        })
    }

    pub fn directives(&self) -> impl Iterator<Item = &Directive> {
        self.cards.iter().filter_map(|e| match &e.card {
            Card::Directive(d) => Some(d),
            _ => None,
        })
    }

    pub fn comments(&self) -> impl Iterator<Item = &str> {
        self.cards.iter().filter_map(|e| match &e.card {
            Card::Comment(c) => Some(c.as_str()),
            _ => None,
        })
    }

    pub fn find_device(&self, name: &str) -> Option<&DeviceCard> {
        self.devices().find(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn find_model(&self, name: &str) -> Option<&ModelCard> {
        self.models().find(|m| m.name.eq_ignore_ascii_case(name))
    }

    pub fn find_model_mut(&mut self, name: &str) -> Option<&mut ModelCard> {
        self.cards.iter_mut().find_map(|e| match &mut e.card {
            Card::Model(m) if m.name.eq_ignore_ascii_case(name) => Some(m),
            _ => None,
        })
    }
}

/// One located problem in the input text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line.
    pub line: usize,
    /// 1-based column.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}:{}: {}", self.line, self.column, self.message)
    }
}

/// Every diagnostic collected while parsing one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ParseError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_counts() {
        let a = SweepAxis::new(SweepVariable::Ph, 1.0, 13.0, 1.0);
        assert_eq!(a.len(), Some(13));
        assert_eq!(a.points()[12], 13.0);
        let t = SweepAxis::new(SweepVariable::Temperature, 0.0, 100.0, 5.0);
        assert_eq!(t.len(), Some(21));
        let fine = SweepAxis::new(SweepVariable::Temperature, 0.0, 1.0, 0.1);
        assert_eq!(fine.len(), Some(11));
        let down = SweepAxis::new(SweepVariable::Temperature, 100.0, 0.0, -5.0);
        assert_eq!(down.len(), Some(21));
        assert_eq!(
            SweepAxis::new(SweepVariable::Temperature, 100.0, 0.0, 5.0).len(),
            None
        );
        assert_eq!(SweepAxis::new(SweepVariable::Ph, 1.0, 2.0, 0.0).len(), None);
        assert_eq!(
            SweepAxis::new(SweepVariable::Ph, 7.0, 7.0, 1.0).len(),
            Some(1)
        );
    }

    #[test]
    fn probe_labels() {
        assert_eq!(ProbeSpec::node("VO").label(), "v(vo)");
        assert_eq!(ProbeSpec::pair("vo", "Ref").label(), "v(vo-ref)");
    }
}
