use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::value::parse_value;
use super::{
    Card, CardEntry, DeviceCard, DeviceKind, Diagnostic, Directive, ModelCard, ModelKind, Netlist,
    ParseError, ProbeSpec, SweepAxis, SweepVariable,
};

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    /// 1-based column within the logical line.
    column: usize,
}

/// A card after continuation lines have been folded in.
struct LogicalLine {
    line: usize,
    text: String,
}

type CardResult<T> = Result<T, (usize, String)>;

fn err<T>(column: usize, message: impl Into<String>) -> CardResult<T> {
    Err((column, message.into()))
}

/// Split on whitespace and parentheses, then glue `key = value` spellings
/// back into a single `key=value` token.
fn tokenize(text: &str) -> Vec<(String, usize)> {
    let mut raw: Vec<(String, usize)> = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || c == '(' || c == ')' || c == ',' {
            if !current.is_empty() {
                raw.push((core::mem::take(&mut current), start + 1));
            }
        } else {
            if current.is_empty() {
                start = i;
            }
            current.push(c);
        }
    }
    if !current.is_empty() {
        raw.push((current, start + 1));
    }

    let mut merged: Vec<(String, usize)> = Vec::with_capacity(raw.len());
    let mut iter = raw.into_iter().peekable();
    while let Some((tok, col)) = iter.next() {
        let joins_prev = tok.starts_with('=') && !merged.is_empty();
        if joins_prev {
            let last = merged.last_mut().unwrap();
            last.0.push_str(&tok);
        } else {
            merged.push((tok, col));
        }
        let last = merged.last_mut().unwrap();
        if last.0.ends_with('=') {
            if let Some((next, _)) = iter.next() {
                last.0.push_str(&next);
            }
        }
    }
    merged
}

fn logical_lines(body: &str, first_line: usize) -> (Vec<LogicalLine>, Vec<Diagnostic>) {
    let mut out: Vec<LogicalLine> = Vec::new();
    let mut diags = Vec::new();
    for (offset, raw) in body.lines().enumerate() {
        let line = first_line + offset;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('*') || trimmed.starts_with(';') {
            out.push(LogicalLine {
                line,
                text: trimmed.to_string(),
            });
            continue;
        }
        let content = match trimmed.find(';') {
            Some(i) => trimmed[..i].trim_end(),
            None => trimmed,
        };
        if let Some(rest) = content.strip_prefix('+') {
            match out.last_mut() {
                Some(prev) if !prev.text.starts_with('*') && !prev.text.starts_with(';') => {
                    prev.text.push(' ');
                    prev.text.push_str(rest.trim());
                }
                _ => diags.push(Diagnostic {
                    line,
                    column: 1,
                    message: "continuation line without a preceding card".into(),
                }),
            }
            continue;
        }
        out.push(LogicalLine {
            line,
            text: content.to_string(),
        });
    }
    (out, diags)
}

fn value_at(tok: &Token<'_>) -> CardResult<f64> {
    parse_value(tok.text).map_err(|e| (tok.column + e.offset, e.message))
}

fn key_value<'a>(tok: &Token<'a>) -> CardResult<(String, f64)> {
    let Some((k, v)) = tok.text.split_once('=') else {
        return err(
            tok.column,
            format!("expected key=value, found '{}'", tok.text),
        );
    };
    if k.is_empty() {
        return err(tok.column, format!("missing key in '{}'", tok.text));
    }
    let value = parse_value(v).map_err(|e| (tok.column + k.len() + 1 + e.offset, e.message))?;
    Ok((k.to_ascii_uppercase(), value))
}

#[derive(Default)]
struct State {
    device_names: BTreeSet<String>,
    model_names: BTreeSet<String>,
    seen_temp: bool,
}

fn parse_device(tokens: &[Token<'_>], state: &mut State) -> CardResult<DeviceCard> {
    let head = &tokens[0];
    let letter = head.text.chars().next().unwrap();
    let Some(kind) = DeviceKind::from_letter(letter) else {
        return err(head.column, format!("unknown card letter '{letter}'"));
    };
    if head.text.len() < 2 {
        return err(
            head.column,
            format!("device '{}' has no name after its letter", head.text),
        );
    }
    let key = head.text.to_ascii_lowercase();
    if state.device_names.contains(&key) {
        return err(
            head.column,
            format!("duplicate device name '{}'", head.text),
        );
    }

    let mut positional: Vec<&Token<'_>> = Vec::new();
    let mut keyed: Vec<&Token<'_>> = Vec::new();
    for t in &tokens[1..] {
        if t.text.contains('=') {
            keyed.push(t);
        } else {
            positional.push(t);
        }
    }
    if matches!(kind, DeviceKind::VoltageSource | DeviceKind::CurrentSource) {
        if let Some(i) = positional
            .iter()
            .position(|t| t.text.eq_ignore_ascii_case("dc"))
        {
            if i == kind.terminals() {
                positional.remove(i);
            }
        }
    }
    let terminals = kind.terminals();
    if positional.len() != terminals + 1 {
        let what = if kind.takes_model() {
            "a model"
        } else {
            "a value"
        };
        return err(
            head.column,
            format!(
                "wrong terminal count: {} takes {terminals} nodes and {what}, found {} positional fields",
                head.text,
                positional.len()
            ),
        );
    }
    let nodes: Vec<String> = positional[..terminals]
        .iter()
        .map(|t| t.text.to_ascii_lowercase())
        .collect();
    let last = positional[terminals];
    let (value, model) = if kind.takes_model() {
        (None, Some(last.text.to_ascii_lowercase()))
    } else {
        (Some(value_at(last)?), None)
    };

    let allowed = kind.allowed_params();
    let mut params = Vec::new();
    for t in keyed {
        let (k, v) = key_value(t)?;
        if !allowed.contains(&k.as_str()) {
            return err(
                t.column,
                format!("unknown parameter '{k}' on {}", head.text),
            );
        }
        if params.iter().any(|(p, _): &(String, f64)| *p == k) {
            return err(t.column, format!("parameter '{k}' given twice"));
        }
        params.push((k, v));
    }
    let card = DeviceCard {
        kind,
        name: head.text.to_string(),
        nodes,
        value,
        model,
        params,
    };
    if kind.takes_model() {
        for req in ["W", "L"] {
            if card.param(req).is_none() {
                return err(head.column, format!("{} is missing {req}=", head.text));
            }
        }
    }
    if let Some(ph) = card.param("PH") {
        if !(0.0..=14.0).contains(&ph) {
            return err(
                head.column,
                format!("PH={ph} on {} outside 0..=14", head.text),
            );
        }
    }
    state.device_names.insert(key);
    Ok(card)
}

fn expect_args<'t, 'a>(
    tokens: &'t [Token<'a>],
    n: usize,
    usage: &str,
) -> CardResult<&'t [Token<'a>]> {
    if tokens.len() - 1 != n {
        return err(tokens[0].column, format!("expected `{usage}`"));
    }
    Ok(&tokens[1..])
}

fn parse_axis(variable: SweepVariable, args: &[Token<'_>]) -> CardResult<SweepAxis> {
    Ok(SweepAxis::new(
        variable,
        value_at(&args[0])?,
        value_at(&args[1])?,
        value_at(&args[2])?,
    ))
}

fn parse_model(tokens: &[Token<'_>], state: &mut State) -> CardResult<ModelCard> {
    if tokens.len() < 3 {
        return err(
            tokens[0].column,
            "expected `.model <name> NMOS|ISFET (<key=value> ...)`",
        );
    }
    let name = tokens[1].text.to_ascii_lowercase();
    if state.model_names.contains(&name) {
        return err(
            tokens[1].column,
            format!("duplicate model name '{}'", tokens[1].text),
        );
    }
    let kind = match tokens[2].text.to_ascii_uppercase().as_str() {
        "NMOS" => ModelKind::Nmos,
        "ISFET" => ModelKind::Isfet,
        other => return err(tokens[2].column, format!("unknown model type '{other}'")),
    };
    let mut params: Vec<(String, f64)> = Vec::new();
    for t in &tokens[3..] {
        let (k, v) = key_value(t)?;
        if !kind.accepts(&k) {
            return err(t.column, format!("unknown {kind} model key '{k}'"));
        }
        if params.iter().any(|(p, _)| *p == k) {
            return err(t.column, format!("model key '{k}' given twice"));
        }
        params.push((k, v));
    }
    state.model_names.insert(name.clone());
    Ok(ModelCard { name, kind, params })
}

enum Parsed {
    Card(Card),
    End,
}

fn parse_directive(tokens: &[Token<'_>], state: &mut State) -> CardResult<Parsed> {
    let head = &tokens[0];
    let card = match head.text.to_ascii_lowercase().as_str() {
        ".end" => return Ok(Parsed::End),
        ".model" => Card::Model(parse_model(tokens, state)?),
        ".op" => {
            expect_args(tokens, 0, ".op")?;
            Card::Directive(Directive::Op)
        }
        ".temp" => {
            let args = expect_args(tokens, 1, ".temp <celsius>")?;
            if state.seen_temp {
                return err(head.column, "more than one .temp");
            }
            let t = value_at(&args[0])?;
            state.seen_temp = true;
            Card::Directive(Directive::Temp(t))
        }
        ".dc" => {
            let args = expect_args(tokens, 4, ".dc <source> <start> <stop> <step>")?;
            let src = SweepVariable::Source(args[0].text.to_ascii_lowercase());
            Card::Directive(Directive::Dc(parse_axis(src, &args[1..])?))
        }
        ".sweep" => {
            let args = expect_args(tokens, 4, ".sweep ph|temp <start> <stop> <step>")?;
            let var = match args[0].text.to_ascii_lowercase().as_str() {
                "ph" => SweepVariable::Ph,
                "temp" => SweepVariable::Temperature,
                other => {
                    return err(
                        args[0].column,
                        format!("cannot sweep '{other}' (expected ph or temp)"),
                    )
                }
            };
            Card::Directive(Directive::Sweep(parse_axis(var, &args[1..])?))
        }
        ".probe" => match tokens.len() {
            2 => Card::Directive(Directive::Probe(ProbeSpec::node(tokens[1].text))),
            3 => Card::Directive(Directive::Probe(ProbeSpec::pair(
                tokens[1].text,
                tokens[2].text,
            ))),
            _ => return err(head.column, "expected `.probe <node> [<ref-node>]`"),
        },
        other => return err(head.column, format!("unknown directive '{other}'")),
    };
    Ok(Parsed::Card(card))
}

/// Parse netlist text. All card-level problems are collected before
/// returning, one diagnostic per faulty card.
pub fn parse(text: &str) -> Result<Netlist, ParseError> {
    let (title, body) = match text.split_once('\n') {
        Some((t, b)) => (t.trim().to_string(), b),
        None => (text.trim().to_string(), ""),
    };
    let (lines, mut diagnostics) = logical_lines(body, 2);
    let mut netlist = Netlist::new(title);
    let mut state = State::default();
    let mut ended = false;

    for ll in &lines {
        if ll.text.starts_with('*') || ll.text.starts_with(';') {
            let c = ll.text[1..].trim().to_string();
            netlist.cards.push(CardEntry {
                line: ll.line,
                card: Card::Comment(c),
            });
            continue;
        }
        let owned = tokenize(&ll.text);
        let tokens: Vec<Token<'_>> = owned
            .iter()
            .map(|(t, c)| Token {
                text: t.as_str(),
                column: *c,
            })
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let result = if tokens[0].text.starts_with('.') {
            parse_directive(&tokens, &mut state)
        } else {
            parse_device(&tokens, &mut state).map(|d| Parsed::Card(Card::Device(d)))
        };
        match result {
            Ok(Parsed::End) => {
                ended = true;
                break;
            }
            Ok(Parsed::Card(card)) => netlist.cards.push(CardEntry {
                line: ll.line,
                card,
            }),
            Err((column, message)) => diagnostics.push(Diagnostic {
                line: ll.line,
                column,
                message,
            }),
        }
    }
    if !ended {
        diagnostics.push(Diagnostic {
            line: text.lines().count() + 1,
            column: 1,
            message: "missing .end".into(),
        });
    }
    if diagnostics.is_empty() {
        Ok(netlist)
    } else {
        diagnostics.sort_by_key(|d| d.line);
        Err(ParseError { diagnostics })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let n = parse("t\nR1 1 0 1k\n.end").unwrap();
        assert_eq!(n.title, "t");
        let devs: Vec<_> = n.devices().collect();
        assert_eq!(devs.len(), 1);
        assert_eq!(devs[0].kind, DeviceKind::Resistor);
        assert_eq!(devs[0].value, Some(1000.0));
        assert_eq!(devs[0].nodes, ["1", "0"]);
    }

    #[test]
    fn missing_end_is_reported_at_eof() {
        let e = parse("t\nR1 1 0 1k").unwrap_err();
        assert_eq!(e.diagnostics.len(), 1);
        assert_eq!(e.diagnostics[0].message, "missing .end");
        assert_eq!(e.diagnostics[0].line, 3);
    }

    #[test]
    fn comments_and_continuations() {
        let text = "title here\n* a comment\nM1 d g\n+ s b nch ; trailing\n+ W=10u L=1u\n; other\n.model nch NMOS (VTO = 0.6 KP=50u)\n.end\nR9 garbage after end\n";
        let n = parse(text).unwrap();
        let comments: Vec<_> = n.comments().collect();
        assert_eq!(comments, ["a comment", "other"]);
        let m = n.find_device("m1").unwrap();
        assert_eq!(m.nodes, ["d", "g", "s", "b"]);
        assert_eq!(m.model.as_deref(), Some("nch"));
        assert_eq!(m.param("w"), Some(10e-6));
        let model = n.find_model("NCH").unwrap();
        assert_eq!(model.param("VTO"), Some(0.6));
        assert_eq!(model.param("kp"), Some(50e-6));
        assert_eq!(n.cards[1].line, 3);
    }

    #[test]
    fn directives() {
        let n = parse(
            "t\nV1 1 0 DC 1\nR1 1 0 1k\n.temp 25\n.op\n.dc V1 0 1 0.5\n.sweep PH 1 13 1\n.sweep temp 0 100 5\n.probe VO ref\n.end",
        )
        .unwrap();
        let d: Vec<_> = n.directives().cloned().collect();
        assert_eq!(d.len(), 6);
        assert_eq!(d[0], Directive::Temp(25.0));
        assert_eq!(
            d[2],
            Directive::Dc(SweepAxis::new(
                SweepVariable::Source("v1".into()),
                0.0,
                1.0,
                0.5
            ))
        );
        assert_eq!(d[5], Directive::Probe(ProbeSpec::pair("vo", "ref")));
        assert_eq!(n.find_device("v1").unwrap().value, Some(1.0));
    }

    #[test]
    fn each_bad_card_reports_once() {
        let text = "t\n\
            X1 1 0 5\n\
            R1 1 0\n\
            R2 1 0 1k\n\
            R2 2 0 1k\n\
            M1 d g s b nch W=1u\n\
            F1 d r s b iso W=1u L=1u PH=20\n\
            E1 a 0 b c 1e5 GAIN=3\n\
            .model nch NMOS (VTO=0.7 FOO=1)\n\
            .temp 25\n\
            .temp 30\n\
            .bogus\n\
            V1 1 0 1q\n\
            .end";
        let e = parse(text).unwrap_err();
        let lines: Vec<_> = e.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, [2, 3, 5, 6, 7, 8, 9, 11, 12, 13], "{e}");
        assert!(e.diagnostics[0].message.contains("unknown card letter"));
        assert!(e.diagnostics[1].message.contains("wrong terminal count"));
        assert!(e.diagnostics[2].message.contains("duplicate device name"));
        assert!(e.diagnostics[3].message.contains("missing L="));
        assert!(e.diagnostics[9].message.contains("unknown suffix"));
        assert_eq!(e.diagnostics[9].column, 9);
    }

    #[test]
    fn wrong_terminal_counts() {
        for bad in ["M1 d g s nch W=1u L=1u", "E1 a 0 b 1e5", "R1 1 2 3 1k"] {
            let text = format!("t\n{bad}\n.end");
            let e = parse(&text).unwrap_err();
            assert_eq!(e.diagnostics.len(), 1);
            assert!(
                e.diagnostics[0].message.contains("wrong terminal count"),
                "{e}"
            );
        }
    }

    #[test]
    fn case_insensitive_identifiers() {
        let n = parse("t\nr1 N1 0 1K\n.END").unwrap();
        let r = n.devices().next().unwrap();
        assert_eq!(r.nodes[0], "n1");
        assert_eq!(r.value, Some(1000.0));
    }
}
