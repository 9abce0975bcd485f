//! Reader for the MATPOWER `.m` subset: `mpc.baseMVA`, `mpc.bus`, `mpc.gen`,
//! `mpc.branch` and `mpc.gencost` (polynomial model only).
//!
//! Any other `mpc.<field> = ...;` statement is skipped with a warning, as are
//! the `function` header and `%` comments. Reactive and voltage columns are
//! read but ignored.

use std::collections::{BTreeMap, BTreeSet};

use super::CaseError;
use crate::network::{
    Demand, DemandId, GenId, Generator, Line, LineId, Network, Substation, SubstationId,
};

/// Rating substituted for branches with `rateA = 0` (MATPOWER's "unlimited").
pub const UNLIMITED_RATING_MW: f64 = 9900.0;

#[derive(Debug, Clone)]
pub struct ParsedCase {
    pub network: Network,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Text(String),
    Matrix(Vec<Vec<f64>>),
    Skipped,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { src: text.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> CaseError {
        CaseError::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == b'\n' {
                break;
            }
            self.bump();
        }
    }

    /// Skips blanks and comments; newlines too when `newlines` is set.
    fn skip_ws(&mut self, newlines: bool) {
        while let Some(c) = self.peek() {
            match c {
                b' ' | b'\t' | b'\r' => {
                    self.bump();
                }
                b'\n' if newlines => {
                    self.bump();
                }
                b'%' | b'#' => self.skip_comment(),
                b'.' if self.src[self.pos..].starts_with(b"...") => {
                    // line continuation
                    self.skip_comment();
                    self.bump();
                }
                _ => break,
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn expect(&mut self, want: u8) -> Result<(), CaseError> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected `{}`, found `{}`", want as char, c as char))),
            None => Err(self.err(format!("expected `{}`, found end of input", want as char))),
        }
    }

    fn number(&mut self) -> Result<f64, CaseError> {
        let (line, col) = (self.line, self.col);
        let start = self.pos;
        if matches!(self.peek(), Some(b'+' | b'-')) {
            self.bump();
        }
        if self.src[self.pos..].starts_with(b"Inf") {
            for _ in 0..3 {
                self.bump();
            }
        } else if self.src[self.pos..].starts_with(b"NaN") {
            return Err(self.err("NaN is not a valid case value"));
        } else {
            while let Some(c) = self.peek() {
                let exp_sign = matches!(c, b'+' | b'-')
                    && matches!(self.src.get(self.pos.wrapping_sub(1)), Some(b'e' | b'E'));
                if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                    // stop before a `...` continuation
                    if c == b'.' && self.src[self.pos..].starts_with(b"...") {
                        break;
                    }
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let tok = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        tok.parse::<f64>().map_err(|_| CaseError::Syntax {
            line,
            col,
            msg: format!("invalid number `{tok}`"),
        })
    }

    fn matrix(&mut self) -> Result<Vec<Vec<f64>>, CaseError> {
        self.expect(b'[')?;
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            self.skip_ws(false);
            match self.peek() {
                None => return Err(self.err("unterminated matrix")),
                Some(b']') => {
                    self.bump();
                    if !row.is_empty() {
                        rows.push(row);
                    }
                    break;
                }
                Some(b';') | Some(b'\n') => {
                    self.bump();
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                }
                Some(b',') => {
                    self.bump();
                }
                Some(c) if c.is_ascii_digit() || matches!(c, b'-' | b'+' | b'.' | b'I' | b'N') => {
                    row.push(self.number()?);
                }
                Some(c) => return Err(self.err(format!("unexpected `{}` in matrix", c as char))),
            }
        }
        Ok(rows)
    }

    fn skip_braced(&mut self) -> Result<(), CaseError> {
        self.expect(b'{')?;
        let mut depth = 1usize;
        while depth > 0 {
            match self.bump() {
                None => return Err(self.err("unterminated cell array")),
                Some(b'{') => depth += 1,
                Some(b'}') => depth -= 1,
                Some(b'\'') => self.string_tail()?,
                Some(b'%') => self.skip_comment(),
                _ => {}
            }
        }
        Ok(())
    }

    fn string_tail(&mut self) -> Result<(), CaseError> {
        loop {
            match self.bump() {
                None | Some(b'\n') => return Err(self.err("unterminated string")),
                Some(b'\'') => return Ok(()),
                _ => {}
            }
        }
    }

    fn string(&mut self) -> Result<String, CaseError> {
        self.expect(b'\'')?;
        let start = self.pos;
        self.string_tail()?;
        Ok(String::from_utf8_lossy(&self.src[start..self.pos - 1]).into_owned())
    }

    fn value(&mut self) -> Result<Value, CaseError> {
        self.skip_ws(false);
        match self.peek() {
            Some(b'[') => Ok(Value::Matrix(self.matrix()?)),
            Some(b'{') => {
                self.skip_braced()?;
                Ok(Value::Skipped)
            }
            Some(b'\'') => Ok(Value::Text(self.string()?)),
            Some(c) if c.is_ascii_digit() || matches!(c, b'-' | b'+' | b'.' | b'I') => {
                Ok(Value::Number(self.number()?))
            }
            Some(c) => Err(self.err(format!("unexpected `{}` in value", c as char))),
            None => Err(self.err("missing value")),
        }
    }

    fn statements(&mut self) -> Result<Vec<(String, Value, usize)>, CaseError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws(true);
            let Some(c) = self.peek() else { break };
            if c == b';' {
                self.bump();
                continue;
            }
            if !(c.is_ascii_alphabetic() || c == b'_') {
                return Err(self.err(format!("unexpected `{}`", c as char)));
            }
            let line = self.line;
            let head = self.ident();
            if head == "function" {
                // `function mpc = name`
                self.skip_comment();
                continue;
            }
            if head != "mpc" {
                return Err(CaseError::Syntax {
                    line,
                    col: 1,
                    msg: format!("expected `mpc.<field> = ...`, found `{head}`"),
                });
            }
            self.expect(b'.')?;
            let field = self.ident();
            if field.is_empty() {
                return Err(self.err("missing field name after `mpc.`"));
            }
            self.skip_ws(false);
            self.expect(b'=')?;
            let v = self.value()?;
            self.skip_ws(false);
            match self.peek() {
                Some(b';') | Some(b'\n') | None => {}
                Some(c) => {
                    return Err(self.err(format!("expected `;` after value, found `{}`", c as char)))
                }
            }
            out.push((field, v, line));
        }
        Ok(out)
    }
}

fn col(table: &'static str, row: &[f64], idx: usize, r: usize) -> Result<f64, CaseError> {
    row.get(idx).copied().ok_or(CaseError::BadRow {
        table,
        row: r + 1,
        msg: format!("expected at least {} columns, found {}", idx + 1, row.len()),
    })
}

fn as_id(table: &'static str, v: f64, r: usize) -> Result<u32, CaseError> {
    if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
        return Err(CaseError::BadRow { table, row: r + 1, msg: format!("invalid id {v}") });
    }
    Ok(v as u32)
}

/// Parses the supported `.m` subset into a [`Network`].
pub fn parse_matpower(text: &str) -> Result<ParsedCase, CaseError> {
    let mut lex = Lexer::new(text);
    let stmts = lex.statements()?;
    let mut warnings = Vec::new();
    let mut tables: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    let mut base_mva = None;
    let mut name = String::new();
    for (field, v, line) in stmts {
        match (field.as_str(), v) {
            ("baseMVA", Value::Number(x)) => base_mva = Some(x),
            ("version", _) => {}
            ("bus" | "gen" | "branch" | "gencost", Value::Matrix(m)) => {
                tables.insert(field, m);
            }
            ("bus" | "gen" | "branch" | "gencost" | "baseMVA", _) => {
                return Err(CaseError::Syntax {
                    line,
                    col: 1,
                    msg: format!("`mpc.{field}` has the wrong value type"),
                })
            }
            ("casename", Value::Text(s)) => name = s,
            (other, _) => warnings.push(format!("line {line}: ignoring unsupported field mpc.{other}")),
        }
    }
    if let Some(fline) = text.lines().find(|l| l.trim_start().starts_with("function")) {
        if let Some(n) = fline.split('=').nth(1) {
            if name.is_empty() {
                name = n.trim().trim_end_matches(';').to_string();
            }
        }
    }
    let base_mva = base_mva.ok_or(CaseError::MissingTable("baseMVA"))?;
    if !(base_mva > 0.0 && base_mva.is_finite()) {
        return Err(CaseError::BadRow { table: "baseMVA", row: 1, msg: format!("invalid base {base_mva}") });
    }
    let bus = tables.remove("bus").ok_or(CaseError::MissingTable("bus"))?;
    let gen = tables.remove("gen").unwrap_or_default();
    let branch = tables.remove("branch").ok_or(CaseError::MissingTable("branch"))?;
    let gencost = tables.remove("gencost").unwrap_or_default();
    warnings.push("reactive power and voltage data are parsed and ignored".to_string());

    // buses
    let mut substations = Vec::with_capacity(bus.len());
    let mut demands = Vec::new();
    let mut seen = BTreeSet::new();
    let mut slack = Vec::new();
    for (r, row) in bus.iter().enumerate() {
        let id = SubstationId(as_id("bus", col("bus", row, 0, r)?, r)?);
        if !seen.insert(id) {
            return Err(CaseError::DuplicateId(id.to_string()));
        }
        let kind = col("bus", row, 1, r)?;
        let pd = col("bus", row, 2, r)?;
        if kind == 3.0 {
            slack.push(id);
        }
        if !pd.is_finite() {
            return Err(CaseError::BadRow { table: "bus", row: r + 1, msg: "non-finite Pd".into() });
        }
        if pd < 0.0 {
            return Err(CaseError::BadRow {
                table: "bus",
                row: r + 1,
                msg: format!("negative demand {pd} MW is not supported"),
            });
        }
        if pd > 0.0 {
            demands.push(Demand {
                id: DemandId(demands.len() as u32 + 1),
                substation: id,
                p_max_nominal: pd,
            });
        }
        substations.push(Substation { id, is_reference: false });
    }
    if slack.len() > 1 {
        warnings.push(format!("{} reference buses; using {}", slack.len(), slack[0]));
    }

    // generators
    let mut generators = Vec::new();
    let mut gen_rows = Vec::new();
    for (r, row) in gen.iter().enumerate() {
        let sub = SubstationId(as_id("gen", col("gen", row, 0, r)?, r)?);
        if !seen.contains(&sub) {
            return Err(CaseError::DanglingReference {
                owner: format!("gen{}", r + 1),
                target: sub.to_string(),
            });
        }
        let status = col("gen", row, 7, r)?;
        let p_max = col("gen", row, 8, r)?;
        let p_min = col("gen", row, 9, r)?;
        if !(p_max.is_finite() && p_min.is_finite()) {
            return Err(CaseError::BadRow { table: "gen", row: r + 1, msg: "non-finite limits".into() });
        }
        gen_rows.push(r);
        if status <= 0.0 {
            warnings.push(format!("gen{} is out of service; skipped", r + 1));
            continue;
        }
        generators.push(Generator {
            id: GenId(r as u32 + 1),
            substation: sub,
            p_min,
            p_max,
            cost_quadratic: 0.0,
            cost_linear: 0.0,
            cost_constant: 0.0,
        });
    }

    // costs: one row per gen row (extra reactive rows ignored)
    if !gen.is_empty() {
        if gencost.len() < gen.len() {
            return Err(CaseError::BadRow {
                table: "gencost",
                row: gencost.len(),
                msg: format!("expected {} rows, found {}", gen.len(), gencost.len()),
            });
        }
        if gencost.len() > gen.len() {
            warnings.push("reactive gencost rows ignored".to_string());
        }
    }
    let mut by_id: BTreeMap<u32, usize> = BTreeMap::new();
    for (k, g) in generators.iter().enumerate() {
        by_id.insert(g.id.0, k);
    }
    for r in gen_rows {
        let row = &gencost[r];
        let model = col("gencost", row, 0, r)?;
        if model != 2.0 {
            return Err(CaseError::Unsupported(format!(
                "gencost row {} uses model {model}; only polynomial (2) is supported",
                r + 1
            )));
        }
        let n = col("gencost", row, 3, r)?;
        if n.fract() != 0.0 || !(0.0..=3.0).contains(&n) {
            return Err(CaseError::Unsupported(format!(
                "gencost row {} has {n} coefficients; at most quadratic is supported",
                r + 1
            )));
        }
        let n = n as usize;
        let mut c = [0.0f64; 3]; // c2, c1, c0
        for k in 0..n {
            let v = col("gencost", row, 4 + k, r)?;
            if !v.is_finite() {
                return Err(CaseError::BadRow { table: "gencost", row: r + 1, msg: "non-finite cost".into() });
            }
            c[3 - n + k] = v;
        }
        if let Some(&k) = by_id.get(&(r as u32 + 1)) {
            let g = &mut generators[k];
            g.cost_quadratic = c[0];
            g.cost_linear = c[1];
            g.cost_constant = c[2];
        }
    }

    // branches
    let mut lines = Vec::new();
    for (r, row) in branch.iter().enumerate() {
        let f = SubstationId(as_id("branch", col("branch", row, 0, r)?, r)?);
        let t = SubstationId(as_id("branch", col("branch", row, 1, r)?, r)?);
        let id = LineId(r as u32 + 1);
        for end in [f, t] {
            if !seen.contains(&end) {
                return Err(CaseError::DanglingReference { owner: id.to_string(), target: end.to_string() });
            }
        }
        let x = col("branch", row, 3, r)?;
        let rate = col("branch", row, 5, r)?;
        let status = col("branch", row, 10, r)?;
        if status <= 0.0 {
            warnings.push(format!("{id} is out of service; skipped"));
            continue;
        }
        if x == 0.0 {
            return Err(CaseError::ZeroReactance(id.to_string()));
        }
        if !x.is_finite() || !rate.is_finite() || rate < 0.0 {
            return Err(CaseError::BadRow { table: "branch", row: r + 1, msg: "invalid reactance or rating".into() });
        }
        let p_max_static = if rate == 0.0 {
            warnings.push(format!("{id} has no rating; using {UNLIMITED_RATING_MW} MW"));
            UNLIMITED_RATING_MW
        } else {
            rate
        };
        lines.push(Line {
            id,
            from_sub: f,
            to_sub: t,
            susceptance_nominal: 1.0 / x,
            p_max_static,
            vid_equipped: false,
            dlr_equipped: false,
        });
    }

    // reference: slack bus, else largest generation capacity (lowest id on ties)
    let reference = match slack.first() {
        Some(&id) => Some(id),
        None => {
            let mut cap: BTreeMap<SubstationId, f64> = BTreeMap::new();
            for g in &generators {
                *cap.entry(g.substation).or_default() += g.p_max;
            }
            let best = cap
                .iter()
                .fold(None::<(SubstationId, f64)>, |acc, (&id, &c)| match acc {
                    Some((_, bc)) if bc >= c => acc,
                    _ => Some((id, c)),
                })
                .map(|(id, _)| id);
            if best.is_some() {
                warnings.push("no reference bus; using largest generation capacity".to_string());
            }
            best.or_else(|| substations.first().map(|s| s.id))
        }
    };
    for s in &mut substations {
        s.is_reference = Some(s.id) == reference;
    }

    Ok(ParsedCase {
        network: Network { name, base_mva, substations, lines, generators, demands },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::tests::TRIANGLE;

    #[test]
    fn triangle_parses() {
        let net = parse_matpower(TRIANGLE).unwrap().network;
        assert_eq!(net.substations.len(), 3);
        assert_eq!(net.lines.len(), 3);
        assert_eq!(net.generators.len(), 1);
        assert_eq!(net.demands.len(), 1);
        assert_eq!(net.name, "tri");
        assert!((net.lines[0].susceptance_nominal - 10.0).abs() < 1e-12);
        assert_eq!(net.lines[2].p_max_static, 50.0);
        let g = &net.generators[0];
        assert_eq!((g.cost_quadratic, g.cost_linear, g.cost_constant), (0.01, 20.0, 5.0));
        assert!(net.substations[0].is_reference);
    }

    #[test]
    fn bundled_cases_have_expected_sizes() {
        let c24 = parse_matpower(include_str!("../../data/case24_ieee_rts.m")).unwrap().network;
        assert_eq!(c24.lines.len(), 38);
        assert_eq!(c24.substations.len(), 24);
        assert_eq!(c24.generators.len(), 33);
        let c118 = parse_matpower(include_str!("../../data/case118.m")).unwrap().network;
        assert_eq!(c118.lines.len(), 186);
        assert_eq!(c118.substations.len(), 118);
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = "mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0 ;\n 2 1 x ;\n];\n";
        match parse_matpower(text) {
            Err(CaseError::Syntax { line, col, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(col, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_duplicate_and_zero_reactance() {
        let dangling = TRIANGLE.replace(" 1 3 0 0.2 0 50", " 1 7 0 0.2 0 50");
        assert!(matches!(parse_matpower(&dangling), Err(CaseError::DanglingReference { .. })));
        let dup = TRIANGLE.replace(" 2 1 0 0 0 0 1 1 0 230", " 1 1 0 0 0 0 1 1 0 230");
        assert!(matches!(parse_matpower(&dup), Err(CaseError::DuplicateId(_))));
        let zx = TRIANGLE.replace(" 1 3 0 0.2 0 50", " 1 3 0 0 0 50");
        assert!(matches!(parse_matpower(&zx), Err(CaseError::ZeroReactance(_))));
    }

    #[test]
    fn linear_gencost_is_padded() {
        let text = TRIANGLE.replace(" 2 0 0 3 0.01 20 5;", " 2 0 0 2 20 5;");
        let g = &parse_matpower(&text).unwrap().network.generators[0];
        assert_eq!((g.cost_quadratic, g.cost_linear, g.cost_constant), (0.0, 20.0, 5.0));
        let pw = TRIANGLE.replace(" 2 0 0 3 0.01 20 5;", " 1 0 0 2 0 0 100 2000;");
        assert!(matches!(parse_matpower(&pw), Err(CaseError::Unsupported(_))));
    }

    #[test]
    fn reference_falls_back_to_largest_capacity() {
        let text = TRIANGLE
            .replace(" 1 3 0 0 0 0", " 1 1 0 0 0 0")
            .replace(
                " 1 0 0 0 0 1 100 1 250 0",
                " 3 0 0 0 0 1 100 1 250 0 0 0 0 0 0 0 0 0 0 0 0;\n 2 0 0 0 0 1 100 1 100 0",
            )
            .replace(" 2 0 0 3 0.01 20 5;", " 2 0 0 3 0.01 20 5;\n 2 0 0 3 0.01 20 5;");
        let net = parse_matpower(&text).unwrap().network;
        assert_eq!(net.reference_substation().unwrap().id, SubstationId(3));
    }

    #[test]
    fn unknown_fields_and_cells_are_skipped() {
        let text = format!("{TRIANGLE}\nmpc.bus_name = {{\n 'a';\n 'b';\n}};\nmpc.areas = [1 1];\n");
        let parsed = parse_matpower(&text).unwrap();
        assert!(parsed.warnings.iter().any(|w| w.contains("bus_name")));
        assert!(parsed.warnings.iter().any(|w| w.contains("areas")));
    }
}
