use std::fmt::Write;

use super::*;

fn term(out: &mut String, first: &mut bool, a: f64, name: &str) {
    let sign = if a < 0.0 { "-" } else if *first { "" } else { "+" };
    let _ = write!(out, " {sign} {:.10} {name}", a.abs());
    *first = false;
}

/// LP-format text with one comment per row naming the equation it implements.
pub fn to_lp_text(f: &Formulation) -> String {
    let names: Vec<String> = (0..f.variables.len()).map(|j| f.var_name(j)).collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "\\ {} hour {} mode {:?} scenario '{}'",
        f.network.name, f.meta.hour, f.meta.mode, f.meta.scenario
    );
    let _ = writeln!(s, "\\ objective constant {:.6}", f.objective.constant);
    s.push_str("Minimize\n obj:");
    let mut first = true;
    for t in &f.objective.terms {
        term(&mut s, &mut first, t.coef, &names[t.var]);
    }
    s.push_str("\nSubject To\n");
    for (r, c) in f.constraints.iter().enumerate() {
        let _ = writeln!(s, "\\ {}", c.tag);
        let _ = write!(s, " r{r}:");
        let mut first = true;
        for &(j, a) in &c.coeffs {
            term(&mut s, &mut first, a, &names[j]);
        }
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(s, " {op} {:.10}", c.rhs);
    }
    s.push_str("Bounds\n");
    for (j, v) in f.variables.iter().enumerate() {
        let _ = writeln!(s, " {:.10} <= {} <= {:.10}", v.lo, names[j], v.hi);
    }
    let bins: Vec<&str> = f.binaries().map(|(j, _)| names[j].as_str()).collect();
    if !bins.is_empty() {
        s.push_str("Binaries\n");
        for b in bins {
            let _ = writeln!(s, " {b}");
        }
    }
    s.push_str("End\n");
    s
}
