//! Seeded random generator of programs in the supported subset.
//!
//! Output is written directly in canonical layout (the same layout
//! [`print_function`](crate::print_function) produces), so parse-then-print
//! must reproduce it byte for byte. Property tests and benchmarks use it.

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

const PAD: &str = "    ";

#[derive(Clone)]
struct Var {
    name: String,
    mutable: bool,
}

pub struct ProgramGenerator {
    rng: StdRng,
    next_var: usize,
    max_depth: usize,
    max_stmts: usize,
}

impl ProgramGenerator {
    pub fn new(seed: u64) -> Self {
        ProgramGenerator { rng: StdRng::seed_from_u64(seed), next_var: 0, max_depth: 2, max_stmts: 5 }
    }

    /// A whole function: header, clauses and a random body.
    pub fn program(&mut self) -> String {
        self.next_var = 0;
        let mut out = String::new();
        if self.rng.random_bool(0.2) {
            out.push_str("// generated\n");
        }
        if self.rng.random_bool(0.5) {
            out.push_str("pub ");
        }
        out.push_str("fn gen(a: &mut Vec<u32>, b: &Vec<u32>, N: u32, c: u64)\n");
        let mut scope = vec![
            Var { name: "N".into(), mutable: false },
            Var { name: "c".into(), mutable: false },
        ];
        for kw in ["requires", "ensures"] {
            let n = self.rng.random_range(0..3);
            if n > 0 {
                out.push_str(&format!("{PAD}{kw}\n"));
                for _ in 0..n {
                    let clause = self.spec(&scope);
                    out.push_str(&format!("{PAD}{PAD}{clause},\n"));
                }
            }
        }
        out.push_str("{\n");
        self.body(&mut out, 1, &mut scope, 0);
        out.push_str("}\n");
        out
    }

    /// A function whose body is a single (possibly nested) loop preceded by
    /// the declarations it uses.
    pub fn loop_program(&mut self) -> String {
        self.next_var = 0;
        let mut out = String::from("fn gen(a: &mut Vec<u32>, b: &Vec<u32>, N: u32, c: u64)\n{\n");
        let mut scope = vec![
            Var { name: "N".into(), mutable: false },
            Var { name: "c".into(), mutable: false },
        ];
        for _ in 0..self.rng.random_range(1..3) {
            let name = self.fresh();
            out.push_str(&format!("{PAD}let mut {name}: u64 = 0;\n"));
            scope.push(Var { name, mutable: true });
        }
        self.while_stmt(&mut out, 1, &mut scope, 0);
        out.push_str("}\n");
        out
    }

    fn fresh(&mut self) -> String {
        let n = self.next_var;
        self.next_var += 1;
        format!("x{n}")
    }

    fn body(&mut self, out: &mut String, depth: usize, scope: &mut Vec<Var>, nest: usize) {
        let n = self.rng.random_range(0..=self.max_stmts);
        let mark = scope.len();
        for _ in 0..n {
            self.stmt(out, depth, scope, nest);
        }
        if self.rng.random_bool(0.05) {
            out.push_str(&format!("{}// end of block\n", PAD.repeat(depth)));
        }
        scope.truncate(mark);
    }

    fn stmt(&mut self, out: &mut String, depth: usize, scope: &mut Vec<Var>, nest: usize) {
        let ind = PAD.repeat(depth);
        if self.rng.random_bool(0.1) {
            out.push_str(&format!("{ind}// step\n"));
        }
        let mutables: Vec<Var> = scope.iter().filter(|v| v.mutable).cloned().collect();
        let choice = self.rng.random_range(0..10);
        match choice {
            0 | 1 => {
                let e = self.expr(scope, 2);
                let name = self.fresh();
                let mutable = self.rng.random_bool(0.6);
                let kw = if mutable { "let mut" } else { "let" };
                out.push_str(&format!("{ind}{kw} {name}: u64 = {e};\n"));
                scope.push(Var { name, mutable });
            }
            2 if !mutables.is_empty() => {
                let v = mutables.choose(&mut self.rng).unwrap().name.clone();
                let op = *["=", "+=", "-="].choose(&mut self.rng).unwrap();
                let e = self.expr(scope, 2);
                out.push_str(&format!("{ind}{v} {op} {e};\n"));
            }
            3 => {
                let i = self.index(scope);
                let e = self.expr(scope, 1);
                out.push_str(&format!("{ind}a.set({i}, {e} as u32);\n"));
            }
            4 => {
                let s = self.spec(scope);
                let kw = if self.rng.random_bool(0.7) { "assert" } else { "assume" };
                out.push_str(&format!("{ind}{kw}({s});\n"));
            }
            5 if nest < self.max_depth => {
                let cond = self.cond(scope);
                out.push_str(&format!("{ind}if {cond} {{\n"));
                self.body(out, depth + 1, scope, nest + 1);
                if self.rng.random_bool(0.4) {
                    let mut inner = String::new();
                    self.body(&mut inner, depth + 1, scope, nest + 1);
                    // `else { if .. }` alone would print as `else if`
                    if !lone_if(&inner, depth + 1) {
                        out.push_str(&format!("{ind}}} else {{\n"));
                        out.push_str(&inner);
                    }
                }
                out.push_str(&format!("{ind}}}\n"));
            }
            6 | 7 if nest < self.max_depth => self.while_stmt(out, depth, scope, nest),
            8 => {
                out.push_str(&format!("{ind}proof {{\n"));
                for _ in 0..self.rng.random_range(1..3) {
                    let s = self.spec(scope);
                    out.push_str(&format!("{ind}{PAD}assert({s});\n"));
                }
                out.push_str(&format!("{ind}}}\n"));
            }
            _ if !mutables.is_empty() => {
                let v = mutables.choose(&mut self.rng).unwrap().name.clone();
                let e = self.expr(scope, 1);
                out.push_str(&format!("{ind}helper(&mut {v}, {e});\n"));
            }
            _ => {
                let e = self.expr(scope, 1);
                out.push_str(&format!("{ind}observe({e});\n"));
            }
        }
    }

    fn while_stmt(&mut self, out: &mut String, depth: usize, scope: &mut Vec<Var>, nest: usize) {
        let ind = PAD.repeat(depth);
        let cond = self.cond(scope);
        out.push_str(&format!("{ind}while {cond}\n"));
        let n = self.rng.random_range(0..3);
        if n > 0 {
            out.push_str(&format!("{ind}{PAD}invariant\n"));
            for _ in 0..n {
                let s = self.spec(scope);
                out.push_str(&format!("{ind}{PAD}{PAD}{s},\n"));
            }
        }
        out.push_str(&format!("{ind}{{\n"));
        self.body(out, depth + 1, scope, nest + 1);
        out.push_str(&format!("{ind}}}\n"));
    }

    fn atom(&mut self, scope: &[Var]) -> String {
        match self.rng.random_range(0..6) {
            0 => self.rng.random_range(0..10).to_string(),
            1 => "a.len() as u64".to_string(),
            2 => format!("b[{}] as u64", self.index(scope)),
            _ => scope.choose(&mut self.rng).map(|v| v.name.clone()).unwrap_or_else(|| "1".into()),
        }
    }

    fn expr(&mut self, scope: &[Var], budget: usize) -> String {
        if budget == 0 || self.rng.random_bool(0.4) {
            return self.atom(scope);
        }
        let op = *["+", "-", "*", "/"].choose(&mut self.rng).unwrap();
        let l = self.expr(scope, budget - 1);
        let r = self.expr(scope, budget - 1);
        if self.rng.random_bool(0.2) {
            format!("({l} {op} {r})")
        } else {
            format!("{l} {op} {r}")
        }
    }

    fn index(&mut self, scope: &[Var]) -> String {
        let v = scope.choose(&mut self.rng).map(|v| v.name.clone()).unwrap_or_else(|| "0".into());
        format!("{v} as usize")
    }

    fn cond(&mut self, scope: &[Var]) -> String {
        let l = self.expr(scope, 1);
        let r = self.expr(scope, 1);
        let op = *["<", "<=", "!=", ">"].choose(&mut self.rng).unwrap();
        if self.rng.random_bool(0.3) {
            format!("({l} {op} {r})")
        } else {
            format!("{l} {op} {r}")
        }
    }

    fn spec(&mut self, scope: &[Var]) -> String {
        match self.rng.random_range(0..5) {
            0 => {
                let e = self.expr(scope, 1);
                format!("forall|k: int| 0 <= k < N ==> a[k] <= {e}")
            }
            1 => "old(a).len() == N".to_string(),
            2 => {
                let e = self.expr(scope, 1);
                format!("exists|j: int, k: int| 0 <= j < k < N && b[j] == {e}")
            }
            _ => {
                let l = self.expr(scope, 1);
                let r = self.expr(scope, 1);
                format!("{l} <= {r}")
            }
        }
    }
}

fn lone_if(block: &str, depth: usize) -> bool {
    let top = PAD.repeat(depth);
    let starts: Vec<&str> = block
        .lines()
        .filter(|l| l.starts_with(&top) && !l[top.len()..].starts_with(' ') && !l[top.len()..].starts_with('}'))
        .collect();
    starts.len() == 1 && starts[0][top.len()..].starts_with("if ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_program() {
        assert_eq!(ProgramGenerator::new(7).program(), ProgramGenerator::new(7).program());
        assert_ne!(ProgramGenerator::new(7).program(), ProgramGenerator::new(8).program());
    }
}
