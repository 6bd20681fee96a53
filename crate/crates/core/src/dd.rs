//! Double-double arithmetic (an unevaluated sum `hi + lo` of two f64s,
//! about 106 significant bits). Used by the finite-difference oracles so the
//! difference quotient is limited by truncation, not by f64 roundoff.

use core::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, libm::fma(a, b, -p))
}

const LN2: Dd = Dd { hi: core::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn scale_pow2(self, k: i32) -> Self {
        Dd { hi: libm::scalbn(self.hi, k), lo: libm::scalbn(self.lo, k) }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        // x = k·ln2 + r, then exp(r) = exp(r / 32)^32.
        let k = libm::round(self.hi / LN2.hi);
        let r = (self - LN2 * Dd::from_f64(k)).scale_pow2(-5);
        let mut sum = Dd::ONE;
        let mut term = Dd::ONE;
        for n in 1..=14 {
            term = term * r / Dd::from_f64(n as f64);
            sum = sum + term;
        }
        for _ in 0..5 {
            sum = sum * sum;
        }
        sum.scale_pow2(k as i32)
    }

    pub fn tanh(self) -> Self {
        if self.hi > 40.0 {
            return Dd::ONE;
        }
        if self.hi < -40.0 {
            return -Dd::ONE;
        }
        let e = (self + self).exp();
        (e - Dd::ONE) / (e + Dd::ONE)
    }

    pub fn sigmoid(self) -> Self {
        Dd::ONE / (Dd::ONE + (-self).exp())
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(a: Dd, b: Dd) -> f64 {
        let d = a - b;
        (d.hi + d.lo).abs()
    }

    #[test]
    fn exp_of_one_is_e() {
        let e = Dd { hi: core::f64::consts::E, lo: 1.445_646_891_729_250_2e-16 };
        let got = Dd::ONE.exp();
        assert!(err(got, e) < 1e-29, "{got:?}");
    }

    #[test]
    fn exp_inverse_pairs() {
        for x in [0.3, -1.7, 2.5, 12.25, -30.0, 1e-9] {
            let a = Dd::from_f64(x);
            let prod = a.exp() * (-a).exp();
            assert!(err(prod, Dd::ONE) < 1e-29, "{x}: {prod:?}");
        }
    }

    #[test]
    fn division_and_small_perturbations() {
        let third = Dd::ONE / Dd::from_f64(3.0);
        assert!(err(third * Dd::from_f64(3.0), Dd::ONE) < 1e-31);
        // 0.25 + 1e-6 − 0.25 is exact in double-double.
        let w = Dd::from_f64(0.25) + Dd::from_f64(1e-6);
        assert_eq!((w - Dd::from_f64(0.25)).to_f64(), 1e-6);
    }

    #[test]
    fn tanh_matches_f64() {
        for x in [-3.0, -0.2, 0.0, 0.7, 5.0] {
            assert!((Dd::from_f64(x).tanh().to_f64() - libm::tanh(x)).abs() < 1e-15);
        }
    }
}
