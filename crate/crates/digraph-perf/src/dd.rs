//! Double-double arithmetic (~31 significant digits) for the second-order
//! scalar products. The partial-fraction form of those integrals cancels
//! catastrophically as the Jordan block size grows — terms reach ~1e18 for
//! size-11 blocks while the result is ~1e−3 — so the coefficient and
//! summation pipeline runs in extended precision and rounds once at the end.
//!
//! Error-free transforms follow Dekker/Knuth; `two_prod` relies on the
//! correctly rounded `f64::mul_add`.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = f64::mul_add(a, b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        // one Newton step x → (x + a/x)/2 from the f64 seed doubles the digits
        let x = Dd::from_f64(self.hi.sqrt());
        (x + self / x).scale(0.5)
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn scale(self, v: f64) -> Dd {
        self * Dd::from_f64(v)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (r1, mut r2) = quick_two_sum(s1, s2 + t1);
        r2 += t2;
        let (hi, lo) = quick_two_sum(r1, r2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let (p1, mut p2) = two_prod(self.hi, rhs.hi);
        p2 += self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        // long division with two correction steps
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r2 = r - rhs * Dd::from_f64(q2);
        let q3 = r2.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e } + Dd::from_f64(q3)
    }
}

/// Complex number with double-double components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdC {
    pub re: Dd,
    pub im: Dd,
}

impl DdC {
    pub const ZERO: DdC = DdC { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: DdC = DdC { re: Dd::ONE, im: Dd::ZERO };

    #[inline]
    pub fn from_f64(re: f64, im: f64) -> DdC {
        DdC { re: Dd::from_f64(re), im: Dd::from_f64(im) }
    }

    #[inline]
    pub fn from_real(re: Dd) -> DdC {
        DdC { re, im: Dd::ZERO }
    }

    #[inline]
    pub fn from_c64(z: num_complex::Complex64) -> DdC {
        DdC::from_f64(z.re, z.im)
    }

    #[inline]
    pub fn to_c64(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn conj(self) -> DdC {
        DdC { re: self.re, im: -self.im }
    }

    #[inline]
    pub fn scale(self, v: f64) -> DdC {
        DdC { re: self.re.scale(v), im: self.im.scale(v) }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt().to_f64()
    }

    /// Principal square root (real part nonnegative).
    pub fn sqrt(self) -> DdC {
        let r = self.norm_sqr().sqrt();
        if self.re.hi >= 0.0 {
            let w = (r + self.re).scale(0.5).sqrt();
            if w.hi == 0.0 {
                return DdC::ZERO;
            }
            let im = self.im.scale(0.5) / w;
            DdC { re: w, im }
        } else {
            let v = (r + self.re.abs()).scale(0.5).sqrt();
            let re = self.im.abs().scale(0.5) / v;
            if self.im.hi >= 0.0 {
                DdC { re, im: v }
            } else {
                DdC { re, im: -v }
            }
        }
    }

    pub fn powu(self, e: usize) -> DdC {
        let mut acc = DdC::ONE;
        for _ in 0..e {
            acc = acc * self;
        }
        acc
    }
}

impl Neg for DdC {
    type Output = DdC;
    #[inline]
    fn neg(self) -> DdC {
        DdC { re: -self.re, im: -self.im }
    }
}

impl Add for DdC {
    type Output = DdC;
    #[inline]
    fn add(self, rhs: DdC) -> DdC {
        DdC { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for DdC {
    type Output = DdC;
    #[inline]
    fn sub(self, rhs: DdC) -> DdC {
        DdC { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Mul for DdC {
    type Output = DdC;
    fn mul(self, rhs: DdC) -> DdC {
        DdC {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Div for DdC {
    type Output = DdC;
    fn div(self, rhs: DdC) -> DdC {
        let den = rhs.norm_sqr();
        let num = self * rhs.conj();
        DdC { re: num.re / den, im: num.im / den }
    }
}

impl Div<Dd> for DdC {
    type Output = DdC;
    fn div(self, rhs: Dd) -> DdC {
        DdC { re: self.re / rhs, im: self.im / rhs }
    }
}
