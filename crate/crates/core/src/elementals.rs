//! Elemental functions and their closed-form partials up to third order.
//!
//! Every elemental has arity one or two. Partials are returned as small
//! symmetric tables indexed by operand position: because the tables are
//! symmetric, an entry only depends on how many of its indices point at the
//! second operand, so `d2` has three slots and `d3` four.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

/// An elemental function evaluated at one tape node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elemental {
    Id,
    Add,
    Sub,
    Mul,
    Div,
    Square,
    Neg,
    /// `c * a`
    Scale(f64),
    /// `a + c`
    Offset(f64),
    Sin,
    Cos,
    Exp,
    Log,
    Recip,
    /// `a^k`
    PowInt(i32),
    Sqrt,
}

/// The argument lies outside the elemental's domain.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("`{symbol}` is undefined at {arg}")]
pub struct DomainError {
    pub symbol: &'static str,
    pub arg: f64,
}

/// Value and partials of an elemental at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partials {
    pub value: f64,
    pub d1: [f64; 2],
    pub d2: [f64; 3],
    pub d3: [f64; 4],
}

impl Partials {
    /// First partial with respect to operand `j` (0 or 1).
    #[inline]
    pub fn d1(&self, j: usize) -> f64 {
        self.d1[j]
    }

    /// Second partial; symmetric in its arguments.
    #[inline]
    pub fn d2(&self, j: usize, k: usize) -> f64 {
        self.d2[j + k]
    }

    /// Third partial; invariant under permutation of its arguments.
    #[inline]
    pub fn d3(&self, j: usize, k: usize, p: usize) -> f64 {
        self.d3[j + k + p]
    }
}

/// Every elemental kind, with representative constants for the
/// parameterised ones.
pub fn catalog() -> Vec<Elemental> {
    use Elemental::*;
    vec![
        Id,
        Add,
        Sub,
        Mul,
        Div,
        Square,
        Neg,
        Scale(-0.5),
        Offset(3.0),
        Sin,
        Cos,
        Exp,
        Log,
        Recip,
        PowInt(3),
        PowInt(-2),
        Sqrt,
    ]
}

// coef * a^e, with an exact zero when the coefficient vanishes (avoids 0 * inf).
#[inline]
fn mono(coef: f64, a: f64, e: i32) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * a.powi(e)
    }
}

impl Elemental {
    pub fn arity(&self) -> usize {
        match self {
            Elemental::Add | Elemental::Sub | Elemental::Mul | Elemental::Div => 2,
            _ => 1,
        }
    }

    /// Name used in the text dump. Parameterised elementals append `:c`.
    pub fn symbol(&self) -> &'static str {
        match self {
            Elemental::Id => "id",
            Elemental::Add => "add",
            Elemental::Sub => "sub",
            Elemental::Mul => "mul",
            Elemental::Div => "div",
            Elemental::Square => "square",
            Elemental::Neg => "neg",
            Elemental::Scale(_) => "scale",
            Elemental::Offset(_) => "offset",
            Elemental::Sin => "sin",
            Elemental::Cos => "cos",
            Elemental::Exp => "exp",
            Elemental::Log => "log",
            Elemental::Recip => "recip",
            Elemental::PowInt(_) => "powi",
            Elemental::Sqrt => "sqrt",
        }
    }

    /// Key identifying the elemental including its constant, usable for
    /// interning (`f64` is not `Ord`).
    pub(crate) fn key(&self) -> (u8, u64) {
        match *self {
            Elemental::Id => (0, 0),
            Elemental::Add => (1, 0),
            Elemental::Sub => (2, 0),
            Elemental::Mul => (3, 0),
            Elemental::Div => (4, 0),
            Elemental::Square => (5, 0),
            Elemental::Neg => (6, 0),
            Elemental::Scale(c) => (7, c.to_bits()),
            Elemental::Offset(c) => (8, c.to_bits()),
            Elemental::Sin => (9, 0),
            Elemental::Cos => (10, 0),
            Elemental::Exp => (11, 0),
            Elemental::Log => (12, 0),
            Elemental::Recip => (13, 0),
            Elemental::PowInt(k) => (14, k as u32 as u64),
            Elemental::Sqrt => (15, 0),
        }
    }

    /// Structural support of the second-order table: `false` marks entries
    /// that vanish identically, whatever the arguments.
    pub fn second_order_support(&self) -> [bool; 3] {
        match *self {
            Elemental::Id
            | Elemental::Add
            | Elemental::Sub
            | Elemental::Neg
            | Elemental::Scale(_)
            | Elemental::Offset(_) => [false; 3],
            Elemental::Mul => [false, true, false],
            Elemental::Div => [false, true, true],
            Elemental::PowInt(k) => [k != 0 && k != 1, false, false],
            _ => [true, false, false],
        }
    }

    /// Structural support of the third-order table.
    pub fn third_order_support(&self) -> [bool; 4] {
        match *self {
            Elemental::Sin
            | Elemental::Cos
            | Elemental::Exp
            | Elemental::Log
            | Elemental::Recip
            | Elemental::Sqrt => [true, false, false, false],
            Elemental::PowInt(k) => [!(0..=2).contains(&k), false, false, false],
            Elemental::Div => [false, false, true, true],
            _ => [false; 4],
        }
    }

    /// True if all second partials vanish identically.
    pub fn is_linear(&self) -> bool {
        self.second_order_support().iter().all(|s| !s)
    }

    /// True if all third partials vanish identically.
    pub fn has_zero_third_order(&self) -> bool {
        self.third_order_support().iter().all(|s| !s)
    }

    fn check_domain(&self, args: &[f64]) -> Result<(), DomainError> {
        let bad = match self {
            Elemental::Log | Elemental::Sqrt => !(args[0] > 0.0),
            Elemental::Recip => args[0] == 0.0,
            Elemental::PowInt(k) => *k < 0 && args[0] == 0.0,
            Elemental::Div => args[1] == 0.0,
            _ => false,
        };
        if bad {
            let arg = if matches!(self, Elemental::Div) { args[1] } else { args[0] };
            Err(DomainError { symbol: self.symbol(), arg })
        } else {
            Ok(())
        }
    }

    /// Value only. `args.len()` must equal [`Self::arity`].
    pub fn value(&self, args: &[f64]) -> Result<f64, DomainError> {
        debug_assert_eq!(args.len(), self.arity());
        self.check_domain(args)?;
        let a = args[0];
        Ok(match *self {
            Elemental::Id => a,
            Elemental::Add => a + args[1],
            Elemental::Sub => a - args[1],
            Elemental::Mul => a * args[1],
            Elemental::Div => a / args[1],
            Elemental::Square => a * a,
            Elemental::Neg => -a,
            Elemental::Scale(c) => c * a,
            Elemental::Offset(c) => a + c,
            Elemental::Sin => Float::sin(a),
            Elemental::Cos => Float::cos(a),
            Elemental::Exp => Float::exp(a),
            Elemental::Log => Float::ln(a),
            Elemental::Recip => 1.0 / a,
            Elemental::PowInt(k) => a.powi(k),
            Elemental::Sqrt => Float::sqrt(a),
        })
    }

    /// Value and all partials up to third order at `args`.
    pub fn partials_at(&self, args: &[f64]) -> Result<Partials, DomainError> {
        debug_assert_eq!(args.len(), self.arity());
        self.check_domain(args)?;
        let a = args[0];
        let unary = |value: f64, d1: f64, d2: f64, d3: f64| Partials {
            value,
            d1: [d1, 0.0],
            d2: [d2, 0.0, 0.0],
            d3: [d3, 0.0, 0.0, 0.0],
        };
        Ok(match *self {
            Elemental::Id => unary(a, 1.0, 0.0, 0.0),
            Elemental::Neg => unary(-a, -1.0, 0.0, 0.0),
            Elemental::Scale(c) => unary(c * a, c, 0.0, 0.0),
            Elemental::Offset(c) => unary(a + c, 1.0, 0.0, 0.0),
            Elemental::Square => unary(a * a, 2.0 * a, 2.0, 0.0),
            Elemental::Sin => {
                let (s, c) = (Float::sin(a), Float::cos(a));
                unary(s, c, -s, -c)
            }
            Elemental::Cos => {
                let (s, c) = (Float::sin(a), Float::cos(a));
                unary(c, -s, -c, s)
            }
            Elemental::Exp => {
                let e = Float::exp(a);
                unary(e, e, e, e)
            }
            Elemental::Log => {
                let r = 1.0 / a;
                unary(Float::ln(a), r, -r * r, 2.0 * r * r * r)
            }
            Elemental::Recip => {
                let r = 1.0 / a;
                let r2 = r * r;
                unary(r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2)
            }
            Elemental::PowInt(k) => {
                let kf = k as f64;
                unary(
                    a.powi(k),
                    mono(kf, a, k - 1),
                    mono(kf * (kf - 1.0), a, k - 2),
                    mono(kf * (kf - 1.0) * (kf - 2.0), a, k - 3),
                )
            }
            Elemental::Sqrt => {
                let s = Float::sqrt(a);
                unary(s, 0.5 / s, -0.25 / (a * s), 0.375 / (a * a * s))
            }
            Elemental::Add => Partials {
                value: a + args[1],
                d1: [1.0, 1.0],
                ..Partials::default()
            },
            Elemental::Sub => Partials {
                value: a - args[1],
                d1: [1.0, -1.0],
                ..Partials::default()
            },
            Elemental::Mul => {
                let b = args[1];
                Partials {
                    value: a * b,
                    d1: [b, a],
                    d2: [0.0, 1.0, 0.0],
                    d3: [0.0; 4],
                }
            }
            Elemental::Div => {
                let b = args[1];
                let r = 1.0 / b;
                let r2 = r * r;
                let r3 = r2 * r;
                Partials {
                    value: a / b,
                    d1: [r, -a * r2],
                    d2: [0.0, -r2, 2.0 * a * r3],
                    d3: [0.0, 0.0, 2.0 * r3, -6.0 * a * r3 * r],
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + a.abs().max(b.abs()))
    }

    fn sample(e: &Elemental, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..e.arity())
            .map(|_| match e {
                Elemental::Log | Elemental::Sqrt | Elemental::Recip | Elemental::Div => {
                    rng.gen_range(0.5..2.0)
                }
                Elemental::PowInt(k) if *k < 0 => rng.gen_range(0.5..2.0),
                _ => rng.gen_range(-2.0..2.0),
            })
            .collect()
    }

    // Central difference of `f` along operand `dir`.
    fn fd(f: impl Fn(&[f64]) -> f64, args: &[f64], dir: usize) -> f64 {
        let h = f64::EPSILON.powf(1.0 / 3.0) * (1.0 + args[dir].abs());
        let mut p = args.to_vec();
        let mut m = args.to_vec();
        p[dir] += h;
        m[dir] -= h;
        (f(&p) - f(&m)) / (p[dir] - m[dir])
    }

    #[test]
    fn partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for e in catalog() {
            for _ in 0..100 {
                let x = sample(&e, &mut rng);
                let p = e.partials_at(&x).unwrap();
                let v = e.value(&x).unwrap();
                assert!((p.value - v).abs() <= 4.0 * f64::EPSILON * v.abs(), "{e:?}");
                for j in 0..e.arity() {
                    let g = fd(|y| e.value(y).unwrap(), &x, j);
                    assert!(rel(g, p.d1(j)) < 1e-6, "{e:?} d1[{j}] at {x:?}");
                    for k in 0..e.arity() {
                        let g = fd(|y| e.partials_at(y).unwrap().d1(j), &x, k);
                        assert!(rel(g, p.d2(j, k)) < 1e-6, "{e:?} d2[{j}{k}] at {x:?}");
                        for q in 0..e.arity() {
                            let g = fd(|y| e.partials_at(y).unwrap().d2(j, k), &x, q);
                            assert!(rel(g, p.d3(j, k, q)) < 1e-6, "{e:?} d3 at {x:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tables_are_symmetric_by_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for e in catalog().into_iter().filter(|e| e.arity() == 2) {
            let p = e.partials_at(&sample(&e, &mut rng)).unwrap();
            assert_eq!(p.d2(0, 1), p.d2(1, 0));
            for (j, k, q) in [(0, 0, 1), (0, 1, 0), (1, 0, 0)] {
                assert_eq!(p.d3(j, k, q), p.d3(0, 0, 1));
            }
            for (j, k, q) in [(0, 1, 1), (1, 0, 1), (1, 1, 0)] {
                assert_eq!(p.d3(j, k, q), p.d3(0, 1, 1));
            }
        }
    }

    #[test]
    fn support_masks_cover_nonzero_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for e in catalog() {
            let s2 = e.second_order_support();
            let s3 = e.third_order_support();
            for _ in 0..20 {
                let p = e.partials_at(&sample(&e, &mut rng)).unwrap();
                for i in 0..3 {
                    assert!(s2[i] || p.d2[i] == 0.0, "{e:?}");
                }
                for i in 0..4 {
                    assert!(s3[i] || p.d3[i] == 0.0, "{e:?}");
                }
            }
        }
    }

    #[test]
    fn sin_at_half_pi() {
        let p = Elemental::Sin.partials_at(&[FRAC_PI_2]).unwrap();
        assert_eq!(p.value, 1.0);
        assert!(p.d1(0).abs() < 1e-15);
        assert_eq!(p.d2(0, 0), -1.0);
        assert!(p.d3(0, 0, 0).abs() < 1e-15);
    }

    #[test]
    fn mul_is_bilinear() {
        let p = Elemental::Mul.partials_at(&[3.0, 4.0]).unwrap();
        assert_eq!(p.value, 12.0);
        assert_eq!(p.d1, [4.0, 3.0]);
        assert_eq!(p.d2, [0.0, 1.0, 0.0]);
        assert_eq!(p.d3, [0.0; 4]);
        let add = Elemental::Add.partials_at(&[3.0, 4.0]).unwrap();
        assert_eq!(add.d2, [0.0; 3]);
        assert_eq!(add.d3, [0.0; 4]);
    }

    #[test]
    fn domain_violations() {
        assert!(Elemental::Log.partials_at(&[0.0]).is_err());
        assert!(Elemental::Log.value(&[-1.0]).is_err());
        assert!(Elemental::Sqrt.value(&[0.0]).is_err());
        assert!(Elemental::Recip.value(&[0.0]).is_err());
        assert!(Elemental::Div.value(&[1.0, 0.0]).is_err());
        assert!(Elemental::PowInt(-1).value(&[0.0]).is_err());
        assert!(Elemental::PowInt(3).partials_at(&[0.0]).is_ok());
    }

    #[test]
    fn powint_at_zero_is_finite() {
        let p = Elemental::PowInt(2).partials_at(&[0.0]).unwrap();
        assert_eq!(p.d3, [0.0; 4]);
        let p = Elemental::PowInt(3).partials_at(&[0.0]).unwrap();
        assert_eq!((p.d1(0), p.d2(0, 0), p.d3(0, 0, 0)), (0.0, 0.0, 6.0));
    }
}
