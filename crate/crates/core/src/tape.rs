//! Evaluation tapes.
//!
//! Indices follow the usual AD convention: independents are numbered
//! `1-n..=0` and intermediates `1..=ℓ`, the output being node `ℓ`. Storage is
//! dense and zero-based; a logical index `i` lives at position `i + n - 1`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::elementals::{Elemental, Partials};
use crate::error::{Error, Result};

const NO_OPERAND: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Node {
    op: u32,
    args: [u32; 2],
}

/// A sealed evaluation list. Immutable and `Sync`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    n: usize,
    ops: Vec<Elemental>,
    nodes: Vec<Node>,
}

/// Handle to a variable of a [`TapeBuilder`] (its storage position).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

/// One instruction of a program in logical indices: `op` applied to `args`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instr {
    pub op: Elemental,
    pub args: Vec<isize>,
}

/// Borrowed view of one tape node.
#[derive(Debug, Clone, Copy)]
pub struct NodeRef<'a> {
    pub index: isize,
    pub op: Elemental,
    preds: &'a [u32],
    n: usize,
}

impl NodeRef<'_> {
    /// Predecessors as logical indices, in operand order.
    pub fn preds(&self) -> impl Iterator<Item = isize> + '_ {
        self.preds.iter().map(|&p| p as isize + 1 - self.n as isize)
    }
}

/// Records elemental applications and seals them into a [`Tape`].
#[derive(Debug, Clone)]
pub struct TapeBuilder {
    n: usize,
    ops: Vec<Elemental>,
    interned: BTreeMap<(u8, u64), u32>,
    nodes: Vec<Node>,
}

impl TapeBuilder {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoIndependents);
        }
        if n + 1 >= NO_OPERAND as usize {
            return Err(Error::Parameter(format!("{n} independents do not fit a tape")));
        }
        Ok(Self {
            n,
            ops: Vec::new(),
            interned: BTreeMap::new(),
            nodes: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The `k`-th independent, zero-based (logical index `k + 1 - n`).
    pub fn input(&self, k: usize) -> Var {
        assert!(k < self.n, "independent {k} out of range");
        Var(k as u32)
    }

    pub fn inputs(&self) -> Vec<Var> {
        (0..self.n).map(|k| Var(k as u32)).collect()
    }

    /// Variable with logical index `index`.
    pub fn var(&self, index: isize) -> Result<Var> {
        let pos = index + self.n as isize - 1;
        if pos < 0 || pos as usize >= self.n + self.nodes.len() {
            return Err(Error::IndexOutOfRange {
                index,
                lo: 1 - self.n as isize,
                hi: self.nodes.len() as isize,
            });
        }
        Ok(Var(pos as u32))
    }

    /// Logical index of a variable.
    pub fn index_of(&self, v: Var) -> isize {
        v.0 as isize + 1 - self.n as isize
    }

    fn len(&self) -> usize {
        self.n + self.nodes.len()
    }

    /// Appends `op(args)`. Repeated operands are rewritten to unary
    /// elementals (`x*x` → square, `x+x` → scale by 2, `x-x` → scale by 0).
    pub fn push(&mut self, op: Elemental, args: &[Var]) -> Result<Var> {
        if args.len() != op.arity() {
            return Err(Error::Arity {
                symbol: op.symbol(),
                expected: op.arity(),
                got: args.len(),
            });
        }
        let next = self.len();
        for a in args {
            if a.0 as usize >= next {
                return Err(Error::MalformedTape {
                    node: self.nodes.len() as isize + 1,
                    operand: self.index_of(*a),
                });
            }
        }
        if args.len() == 2 && args[0] == args[1] {
            let unary = match op {
                Elemental::Mul => Elemental::Square,
                Elemental::Add => Elemental::Scale(2.0),
                Elemental::Sub => Elemental::Scale(0.0),
                _ => return Err(Error::DuplicateOperand { symbol: op.symbol() }),
            };
            return self.push(unary, &args[..1]);
        }
        if next + 1 >= NO_OPERAND as usize {
            return Err(Error::Parameter("tape too long".to_string()));
        }
        let id = *self.interned.entry(op.key()).or_insert_with(|| {
            self.ops.push(op);
            (self.ops.len() - 1) as u32
        });
        let mut node = Node { op: id, args: [NO_OPERAND; 2] };
        for (slot, a) in node.args.iter_mut().zip(args) {
            *slot = a.0;
        }
        self.nodes.push(node);
        Ok(Var(next as u32))
    }

    pub fn unary(&mut self, op: Elemental, a: Var) -> Result<Var> {
        self.push(op, &[a])
    }

    pub fn binary(&mut self, op: Elemental, a: Var, b: Var) -> Result<Var> {
        self.push(op, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Elemental::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Elemental::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Elemental::Mul, a, b)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Elemental::Div, a, b)
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.unary(Elemental::Square, a)
    }

    pub fn scale(&mut self, c: f64, a: Var) -> Result<Var> {
        self.unary(Elemental::Scale(c), a)
    }

    pub fn offset(&mut self, a: Var, c: f64) -> Result<Var> {
        self.unary(Elemental::Offset(c), a)
    }

    pub fn sin(&mut self, a: Var) -> Result<Var> {
        self.unary(Elemental::Sin, a)
    }

    pub fn cos(&mut self, a: Var) -> Result<Var> {
        self.unary(Elemental::Cos, a)
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.unary(Elemental::Exp, a)
    }

    /// Sum of `terms` as a left-leaning chain of additions.
    pub fn sum(&mut self, terms: &[Var]) -> Result<Var> {
        let (&first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::Parameter("empty sum".to_string()))?;
        rest.iter().try_fold(first, |acc, &t| self.add(acc, t))
    }

    /// Seals the tape; the last recorded node is the output.
    pub fn finish(self) -> Result<Tape> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyTape);
        }
        Ok(Tape {
            n: self.n,
            ops: self.ops,
            nodes: self.nodes,
        })
    }
}

impl Tape {
    /// Builds a tape from instructions written in logical indices.
    /// Instruction `t` (zero-based) defines node `t + 1` and may only read
    /// indices `1-n..=t`.
    pub fn build(n: usize, program: &[Instr]) -> Result<Self> {
        let mut b = TapeBuilder::new(n)?;
        for (t, instr) in program.iter().enumerate() {
            let node = t as isize + 1;
            let args = instr
                .args
                .iter()
                .map(|&j| {
                    if j >= node || j < 1 - n as isize {
                        Err(Error::MalformedTape { node, operand: j })
                    } else {
                        b.var(j)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            b.push(instr.op, &args)?;
        }
        b.finish()
    }

    /// Number of independents `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of intermediates `ℓ`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Logical index of the output (always `ℓ`).
    pub fn output_index(&self) -> isize {
        self.nodes.len() as isize
    }

    /// `n + ℓ`, the size of every per-variable workspace.
    pub fn total_len(&self) -> usize {
        self.n + self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeRef<'_>> + '_ {
        (0..self.nodes.len()).map(move |t| {
            let (op, preds) = self.node(t);
            NodeRef {
                index: t as isize + 1,
                op,
                preds,
                n: self.n,
            }
        })
    }

    /// Elemental and predecessor positions of node number `t` (zero-based,
    /// i.e. logical index `t + 1`, position `n + t`).
    #[inline]
    pub(crate) fn node(&self, t: usize) -> (Elemental, &[u32]) {
        let node = &self.nodes[t];
        let op = self.ops[node.op as usize];
        (op, &node.args[..op.arity()])
    }

    /// Partials of node `t` read from `values` (indexed by position).
    #[inline]
    pub(crate) fn partials(&self, t: usize, values: &[f64]) -> Result<(Partials, &[u32])> {
        let (_, p, preds) = self.op_partials(t, values)?;
        Ok((p, preds))
    }

    /// Like [`Tape::partials`], also returning the elemental.
    #[inline]
    pub(crate) fn op_partials(
        &self,
        t: usize,
        values: &[f64],
    ) -> Result<(Elemental, Partials, &[u32])> {
        let (op, preds) = self.node(t);
        let mut args = [0.0; 2];
        for (a, &p) in args.iter_mut().zip(preds) {
            *a = values[p as usize];
        }
        let p = op
            .partials_at(&args[..preds.len()])
            .map_err(|source| Error::Domain {
                node: t as isize + 1,
                source,
            })?;
        Ok((op, p, preds))
    }

    /// Converts a logical index to a storage position.
    pub fn position(&self, index: isize) -> Result<usize> {
        let pos = index + self.n as isize - 1;
        if pos < 0 || pos as usize >= self.total_len() {
            return Err(Error::IndexOutOfRange {
                index,
                lo: 1 - self.n as isize,
                hi: self.nodes.len() as isize,
            });
        }
        Ok(pos as usize)
    }

    /// Replays the tape at `x`.
    pub fn eval_forward(&self, x: &[f64]) -> Result<ValueTrace> {
        if x.len() != self.n {
            return Err(Error::Shape {
                what: "independent vector",
                expected: self.n,
                got: x.len(),
            });
        }
        let mut values = Vec::with_capacity(self.total_len());
        values.extend_from_slice(x);
        let mut args = [0.0; 2];
        for t in 0..self.nodes.len() {
            let (op, preds) = self.node(t);
            for (a, &p) in args.iter_mut().zip(preds) {
                *a = values[p as usize];
            }
            let v = op.value(&args[..preds.len()]).map_err(|source| Error::Domain {
                node: t as isize + 1,
                source,
            })?;
            values.push(v);
        }
        Ok(ValueTrace { n: self.n, values })
    }

    /// One line per node: `i <symbol> j [k]` in logical indices.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for node in self.nodes() {
            if node.index > 1 {
                out.push('\n');
            }
            let _ = write!(out, "{} {}", node.index, symbol_with_param(&node.op));
            for p in node.preds() {
                let _ = write!(out, " {p}");
            }
        }
        out
    }

    /// Inverse of [`Tape::dump_text`]; `n` is not part of the text.
    pub fn parse_text(text: &str, n: usize) -> Result<Self> {
        let mut program = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let mut fields = line.split_whitespace();
            let index: isize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| err("missing node index".to_string()))?;
            if index != program.len() as isize + 1 {
                return Err(err(format!(
                    "expected node {}, found {index}",
                    program.len() + 1
                )));
            }
            let op = fields
                .next()
                .ok_or_else(|| err("missing elemental".to_string()))
                .and_then(|s| parse_symbol(s).map_err(err))?;
            let args = fields
                .map(|f| f.parse::<isize>().map_err(|e| err(format!("operand `{f}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            program.push(Instr { op, args });
        }
        Tape::build(n, &program)
    }
}

fn symbol_with_param(op: &Elemental) -> String {
    match *op {
        Elemental::Scale(c) | Elemental::Offset(c) => format!("{}:{c}", op.symbol()),
        Elemental::PowInt(k) => format!("{}:{k}", op.symbol()),
        _ => op.symbol().to_string(),
    }
}

fn parse_symbol(s: &str) -> core::result::Result<Elemental, String> {
    let (name, param) = match s.split_once(':') {
        Some((name, p)) => (name, Some(p)),
        None => (s, None),
    };
    let float = || -> core::result::Result<f64, String> {
        param
            .ok_or_else(|| format!("`{name}` needs a constant"))?
            .parse::<f64>()
            .map_err(|e| format!("constant of `{name}`: {e}"))
    };
    let op = match name {
        "id" => Elemental::Id,
        "add" => Elemental::Add,
        "sub" => Elemental::Sub,
        "mul" => Elemental::Mul,
        "div" => Elemental::Div,
        "square" => Elemental::Square,
        "neg" => Elemental::Neg,
        "scale" => Elemental::Scale(float()?),
        "offset" => Elemental::Offset(float()?),
        "sin" => Elemental::Sin,
        "cos" => Elemental::Cos,
        "exp" => Elemental::Exp,
        "log" => Elemental::Log,
        "recip" => Elemental::Recip,
        "powi" => Elemental::PowInt(
            param
                .ok_or_else(|| "`powi` needs an exponent".to_string())?
                .parse()
                .map_err(|e| format!("exponent of `powi`: {e}"))?,
        ),
        "sqrt" => Elemental::Sqrt,
        other => return Err(format!("unknown elemental `{other}`")),
    };
    if param.is_some() && !matches!(op, Elemental::Scale(_) | Elemental::Offset(_) | Elemental::PowInt(_)) {
        return Err(format!("`{name}` takes no constant"));
    }
    Ok(op)
}

/// Values of every variable after a forward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTrace {
    n: usize,
    values: Vec<f64>,
}

impl ValueTrace {
    /// Value at logical index `i`.
    pub fn get(&self, i: isize) -> f64 {
        self.values[(i + self.n as isize - 1) as usize]
    }

    /// `f(x)`, the value of the last node.
    pub fn output(&self) -> f64 {
        *self.values.last().expect("a sealed tape has one node")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Fails unless this trace was produced from `tape`'s shape.
    pub(crate) fn check_shape(&self, tape: &Tape) -> Result<()> {
        if self.n != tape.n() || self.values.len() != tape.total_len() {
            return Err(Error::Shape {
                what: "value trace",
                expected: tape.total_len(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::FRAC_PI_2;

    pub(crate) fn toy() -> Tape {
        Tape::build(
            3,
            &[
                Instr { op: Elemental::Mul, args: vec![-2, -1] },
                Instr { op: Elemental::Sin, args: vec![0] },
                Instr { op: Elemental::Mul, args: vec![2, 1] },
            ],
        )
        .unwrap()
    }

    #[test]
    fn builds_worked_example() {
        let t = toy();
        assert_eq!((t.n(), t.len(), t.output_index()), (3, 3, 3));
        let last = t.nodes().last().unwrap();
        assert_eq!(last.preds().collect::<Vec<_>>(), vec![2, 1]);
        let trace = t.eval_forward(&[1.0, 2.0, FRAC_PI_2]).unwrap();
        assert_eq!(trace.get(3), 2.0);
        assert_eq!(trace.output(), 2.0);
    }

    #[test]
    fn identity_tape() {
        let t = Tape::build(1, &[Instr { op: Elemental::Id, args: vec![0] }]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.eval_forward(&[7.0]).unwrap().get(1), 7.0);
        assert_eq!(t.dump_text(), "1 id 0");
    }

    #[test]
    fn rejects_forward_reference() {
        let e = Tape::build(2, &[Instr { op: Elemental::Sin, args: vec![5] }]).unwrap_err();
        assert_eq!(e, Error::MalformedTape { node: 1, operand: 5 });
        let e = Tape::build(2, &[Instr { op: Elemental::Sin, args: vec![1] }]).unwrap_err();
        assert!(matches!(e, Error::MalformedTape { .. }));
        let e = Tape::build(2, &[Instr { op: Elemental::Sin, args: vec![-2] }]).unwrap_err();
        assert!(matches!(e, Error::MalformedTape { .. }));
    }

    #[test]
    fn rejects_bad_arity_and_empty() {
        let e = Tape::build(2, &[Instr { op: Elemental::Mul, args: vec![0] }]).unwrap_err();
        assert!(matches!(e, Error::Arity { expected: 2, got: 1, .. }));
        assert_eq!(Tape::build(2, &[]).unwrap_err(), Error::EmptyTape);
        assert_eq!(TapeBuilder::new(0).unwrap_err(), Error::NoIndependents);
    }

    #[test]
    fn repeated_operands_are_normalised() {
        let mut b = TapeBuilder::new(1).unwrap();
        let x = b.input(0);
        let sq = b.mul(x, x).unwrap();
        let two = b.add(sq, sq).unwrap();
        let t = b.finish().unwrap();
        assert_eq!(t.dump_text(), "1 square 0\n2 scale:2 1");
        assert_eq!(t.eval_forward(&[3.0]).unwrap().output(), 18.0);
        let mut b = TapeBuilder::new(1).unwrap();
        let x = b.input(0);
        assert!(matches!(b.div(x, x), Err(Error::DuplicateOperand { .. })));
        let _ = two;
    }

    #[test]
    fn dump_worked_example() {
        assert_eq!(toy().dump_text(), "1 mul -2 -1\n2 sin 0\n3 mul 2 1");
        assert_eq!(Tape::parse_text(&toy().dump_text(), 3).unwrap(), toy());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Tape::parse_text("2 sin 0", 1), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Tape::parse_text("1 tan 0", 1), Err(Error::Parse { .. })));
        assert!(matches!(Tape::parse_text("1 scale 0", 1), Err(Error::Parse { .. })));
        assert!(matches!(Tape::parse_text("1 sin:2 0", 1), Err(Error::Parse { .. })));
        let t = Tape::parse_text("1 powi:-3 0\n2 offset:0.1 1\n", 1).unwrap();
        assert_eq!(t.dump_text(), "1 powi:-3 0\n2 offset:0.1 1");
    }

    #[test]
    fn domain_error_names_node() {
        let t = Tape::parse_text("1 sin 0\n2 offset:-5 1\n3 log 2", 1).unwrap();
        match t.eval_forward(&[0.3]).unwrap_err() {
            Error::Domain { node, .. } => assert_eq!(node, 3),
            e => panic!("{e:?}"),
        }
        assert!(matches!(t.eval_forward(&[1.0, 2.0]), Err(Error::Shape { .. })));
    }
}
