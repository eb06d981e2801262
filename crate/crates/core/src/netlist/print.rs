//! Canonical text form. `parse(&netlist.to_string())` reproduces the same
//! cards with bit-identical values.

use core::fmt;

use super::value::format_value;
use super::{Card, DeviceCard, Directive, ModelCard, Netlist, SweepAxis};

fn write_params(
    f: &mut fmt::Formatter<'_>,
    params: &[(alloc::string::String, f64)],
) -> fmt::Result {
    for (k, v) in params {
        write!(f, " {k}={}", format_value(*v))?;
    }
    Ok(())
}

impl fmt::Display for DeviceCard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        for n in &self.nodes {
            write!(f, " {n}")?;
        }
        if let Some(v) = self.value {
            write!(f, " {}", format_value(v))?;
        }
        if let Some(m) = &self.model {
            write!(f, " {m}")?;
        }
        write_params(f, &self.params)
    }
}

impl fmt::Display for ModelCard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ".model {} {} (", self.name, self.kind)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={}", format_value(*v))?;
        }
        f.write_str(")")
    }
}

fn write_range(f: &mut fmt::Formatter<'_>, a: &SweepAxis) -> fmt::Result {
    write!(
        f,
        "{} {} {}",
        format_value(a.start),
        format_value(a.stop),
        format_value(a.step)
    )
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::Op => f.write_str(".op"),
            Directive::Temp(t) => write!(f, ".temp {}", format_value(*t)),
            Directive::Dc(a) => {
                write!(f, ".dc {} ", a.variable)?;
                write_range(f, a)
            }
            Directive::Sweep(a) => {
                write!(f, ".sweep {} ", a.variable)?;
                write_range(f, a)
            }
            Directive::Probe(p) => match &p.neg {
                Some(n) => write!(f, ".probe {} {n}", p.pos),
                None => write!(f, ".probe {}", p.pos),
            },
        }
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        for entry in &self.cards {
            match &entry.card {
                Card::Comment(c) if c.is_empty() => writeln!(f, "*")?,
                Card::Comment(c) => writeln!(f, "* {c}")?,
                Card::Device(d) => writeln!(f, "{d}")?,
                Card::Model(m) => writeln!(f, "{m}")?,
                Card::Directive(d) => writeln!(f, "{d}")?,
            }
        }
        writeln!(f, ".end")
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use alloc::string::ToString;

    #[test]
    fn prints_canonical_text() {
        let text = "t\n* hi\nm1 D G S B nch w=840u l=18u\nV1 vdd 0 DC 3.3\n.model NCH nmos (vto=0.7 kp=100u)\n.sweep ph 1 13 1\n.probe vo\n.end\n";
        let n = parse(text).unwrap();
        let printed = n.to_string();
        assert_eq!(
            printed,
            "t\n* hi\nm1 d g s b nch W=840u L=18u\nV1 vdd 0 3.3\n.model nch NMOS (VTO=0.7 KP=100u)\n.sweep ph 1 13 1\n.probe vo\n.end\n"
        );
        let again = parse(&printed).unwrap();
        for (a, b) in n.cards.iter().zip(&again.cards) {
            assert_eq!(a.card, b.card);
        }
    }
}
