//! Plain-text dump of a [`ConeProgram`], one item per line:
//!
//! ```text
//! var <index> <name>
//! maximize <expr>
//! eq <expr> = 0
//! nonneg <expr> >= 0
//! soc [<expr>; <expr>; ...] <= <expr>
//! ```
//!
//! An `<expr>` is a signed sum of `<coeff>*x<index>` terms followed by a
//! nonzero constant, e.g. `1*x0 - 2.5*x3 + 4`. Numbers use Rust's shortest
//! round-trip formatting, so the dump is stable for golden tests.

use std::fmt::{self, Write};

use super::{AffineExpr, ConeProgram};

fn write_expr(out: &mut String, e: &AffineExpr) {
    let mut first = true;
    let mut push = |out: &mut String, c: f64, var: Option<usize>| {
        let body = match var {
            Some(i) => format!("{}*x{i}", c.abs()),
            None => format!("{}", c.abs()),
        };
        match (first, c < 0.0) {
            (true, false) => out.push_str(&body),
            (true, true) => {
                let _ = write!(out, "-{body}");
            }
            (false, false) => {
                let _ = write!(out, " + {body}");
            }
            (false, true) => {
                let _ = write!(out, " - {body}");
            }
        }
        first = false;
    };
    for (v, c) in e.terms() {
        push(out, *c, Some(v.index()));
    }
    if e.terms().is_empty() || e.constant_term() != 0.0 {
        push(out, e.constant_term(), None);
    }
}

impl fmt::Display for ConeProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (i, name) in self.var_names().iter().enumerate() {
            let _ = writeln!(out, "var {i} {name}");
        }
        out.push_str("maximize ");
        write_expr(&mut out, self.objective());
        out.push('\n');
        for e in self.equalities() {
            out.push_str("eq ");
            write_expr(&mut out, e);
            out.push_str(" = 0\n");
        }
        for e in self.nonnegatives() {
            out.push_str("nonneg ");
            write_expr(&mut out, e);
            out.push_str(" >= 0\n");
        }
        for b in self.socs() {
            out.push_str("soc [");
            for (k, e) in b.u.iter().enumerate() {
                if k > 0 {
                    out.push_str("; ");
                }
                write_expr(&mut out, e);
            }
            out.push_str("] <= ");
            write_expr(&mut out, &b.t);
            out.push('\n');
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn golden_dump() {
        let mut p = ConeProgram::new();
        let t = p.add_var("t");
        let s = p.add_var("s");
        p.maximize(t.into()).unwrap();
        p.add_le(t.into(), AffineExpr::constant(5.0)).unwrap();
        p.add_equality(AffineExpr::from(s) - AffineExpr::constant(2.0))
            .unwrap();
        p.add_soc(
            s.into(),
            vec![AffineExpr::constant(3.0), AffineExpr::term(t, -0.5)],
        )
        .unwrap();
        let expected = "\
var 0 t
var 1 s
maximize 1*x0
eq 1*x1 - 2 = 0
nonneg -1*x0 + 5 >= 0
soc [3; -0.5*x0] <= 1*x1
";
        assert_eq!(p.to_string(), expected);
    }
}
