//! Plain-text instance files.
//!
//! A file is a sequence of whitespace-separated tokens; `#` starts a comment
//! that runs to the end of the line. Numbers are written in Rust's shortest
//! round-trip notation, so reading a file back reproduces every `f64` bit
//! for bit.
//!
//! Quadratic systems (`g_i(x) = x'G_i'G_i x + c_i'x + d_i`):
//!
//! ```text
//! strelax-quadratic 1
//! seed <u64> n <n> count <M> margin <f64>
//! function            # repeated M times
//!   <n rows of n entries: G_i, row-major>
//!   <n entries: c_i>
//!   <d_i>
//! ```
//!
//! Linear systems (`Ax = b` with row blocks):
//!
//! ```text
//! strelax-linear 1
//! seed <u64 | none> m <m> n <n> weights <identity | row-inverse-norm-sq>
//! blocks <p> <p block sizes>
//! A <m rows of n entries>
//! b <m entries>
//! solution <none | n entries>
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use strelax_core::linalg::{Matrix, Vector};
use strelax_core::problems::{LinearFeasibility, QuadraticFunction, QuadraticSystem, WeightMode};

use crate::error::CliError;

const QUADRATIC_MAGIC: &str = "strelax-quadratic";
const LINEAR_MAGIC: &str = "strelax-linear";
const VERSION: &str = "1";

fn push_row(out: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

pub fn write_quadratic(sys: &QuadraticSystem) -> String {
    let n = sys.dim();
    let mut out = String::new();
    writeln!(out, "{QUADRATIC_MAGIC} {VERSION}").unwrap();
    writeln!(out, "seed {} n {} count {} margin {}", sys.seed, n, sys.len(), sys.margin).unwrap();
    for (i, f) in sys.functions.iter().enumerate() {
        writeln!(out, "function # {i}").unwrap();
        for r in 0..n {
            push_row(&mut out, f.factor().row(r));
        }
        push_row(&mut out, f.linear());
        push_row(&mut out, &[f.constant()]);
    }
    out
}

pub fn write_linear(lf: &LinearFeasibility) -> String {
    let mut out = String::new();
    writeln!(out, "{LINEAR_MAGIC} {VERSION}").unwrap();
    let seed = lf.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    let weights = match lf.weight_mode {
        WeightMode::Identity => "identity",
        WeightMode::RowInverseNormSq => "row-inverse-norm-sq",
    };
    writeln!(out, "seed {seed} m {} n {} weights {weights}", lf.rows(), lf.dim()).unwrap();
    write!(out, "blocks {}", lf.blocks.len()).unwrap();
    for b in &lf.blocks {
        write!(out, " {}", b.len()).unwrap();
    }
    out.push('\n');
    out.push_str("A\n");
    for r in 0..lf.rows() {
        push_row(&mut out, lf.matrix.row(r));
    }
    out.push_str("b\n");
    push_row(&mut out, &lf.rhs);
    match &lf.solution {
        Some(x) => {
            out.push_str("solution\n");
            push_row(&mut out, x);
        }
        None => out.push_str("solution none\n"),
    }
    out
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("");
                line.split_whitespace().map(move |t| (i + 1, t))
            })
            .collect();
        Self { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).or(self.items.last()).map_or(0, |t| t.0)
    }

    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::Format { line: self.line(), message: message.into() }
    }

    fn next(&mut self) -> Result<&'a str, CliError> {
        let t = self.items.get(self.pos).ok_or_else(|| self.err("unexpected end of file"))?.1;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, word: &str) -> Result<(), CliError> {
        let t = self.next()?;
        if t != word {
            self.pos -= 1;
            return Err(self.err(format!("expected `{word}`, found `{t}`")));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, CliError> {
        let t = self.next()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("bad {what} `{t}`"))
        })
    }

    fn numbers(&mut self, count: usize) -> Result<Vec<f64>, CliError> {
        (0..count).map(|_| self.parse::<f64>("number")).collect()
    }

    fn finish(&self) -> Result<(), CliError> {
        if self.pos != self.items.len() {
            return Err(self.err("trailing data"));
        }
        Ok(())
    }
}

fn core_err(t: &Tokens, e: strelax_core::Error) -> CliError {
    t.err(e.to_string())
}

pub fn read_quadratic(text: &str) -> Result<QuadraticSystem, CliError> {
    let mut t = Tokens::new(text);
    t.expect(QUADRATIC_MAGIC)?;
    t.expect(VERSION)?;
    t.expect("seed")?;
    let seed: u64 = t.parse("seed")?;
    t.expect("n")?;
    let n: usize = t.parse("dimension")?;
    t.expect("count")?;
    let count: usize = t.parse("count")?;
    t.expect("margin")?;
    let margin: f64 = t.parse("margin")?;
    if n == 0 || count == 0 {
        return Err(t.err("n and count must be positive"));
    }
    let mut functions = Vec::with_capacity(count);
    for _ in 0..count {
        t.expect("function")?;
        let g = Matrix::new(n, n, t.numbers(n * n)?).map_err(|e| core_err(&t, e))?;
        let c = Vector::new(t.numbers(n)?).map_err(|e| core_err(&t, e))?;
        let d: f64 = t.parse("constant")?;
        functions.push(Arc::new(QuadraticFunction::new(g, c, d).map_err(|e| core_err(&t, e))?));
    }
    t.finish()?;
    Ok(QuadraticSystem { seed, margin, functions, anchor: Vector::filled(n, 1.0) })
}

pub fn read_linear(text: &str) -> Result<LinearFeasibility, CliError> {
    let mut t = Tokens::new(text);
    t.expect(LINEAR_MAGIC)?;
    t.expect(VERSION)?;
    t.expect("seed")?;
    let seed = match t.next()? {
        "none" => None,
        s => Some(s.parse::<u64>().map_err(|_| t.err(format!("bad seed `{s}`")))?),
    };
    t.expect("m")?;
    let m: usize = t.parse("row count")?;
    t.expect("n")?;
    let n: usize = t.parse("dimension")?;
    t.expect("weights")?;
    let weight_mode = match t.next()? {
        "identity" => WeightMode::Identity,
        "row-inverse-norm-sq" => WeightMode::RowInverseNormSq,
        w => return Err(t.err(format!("unknown weights `{w}`"))),
    };
    t.expect("blocks")?;
    let p: usize = t.parse("block count")?;
    let mut blocks = Vec::with_capacity(p);
    let mut start = 0;
    for _ in 0..p {
        let size: usize = t.parse("block size")?;
        blocks.push(start..start + size);
        start += size;
    }
    t.expect("A")?;
    let a = Matrix::new(m, n, t.numbers(m * n)?).map_err(|e| core_err(&t, e))?;
    t.expect("b")?;
    let b = Vector::new(t.numbers(m)?).map_err(|e| core_err(&t, e))?;
    t.expect("solution")?;
    let solution = if t.items.get(t.pos).is_some_and(|x| x.1 == "none") {
        t.pos += 1;
        None
    } else {
        Some(Vector::new(t.numbers(n)?).map_err(|e| core_err(&t, e))?)
    };
    t.finish()?;
    let mut lf = LinearFeasibility::new(a, b, blocks, weight_mode).map_err(|e| core_err(&t, e))?;
    lf.seed = seed;
    lf.solution = solution;
    Ok(lf)
}
