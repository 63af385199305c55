//! Double-double arithmetic: an unevaluated sum of two `f64`s giving ~31
//! significant decimal digits. Used by the brute-force opinion recursion so
//! that oracle error stays orders of magnitude below the closed forms under
//! test. Algorithms are the classic error-free transformations (Dekker,
//! Knuth) as organized in the QD library.

/// hi + lo with |lo| <= ulp(hi)/2; hi is the double nearest the true value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

/// Exact: a + b = s + e with s = fl(a + b).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Exact under |a| >= |b|; one branch cheaper than `two_sum`.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Exact: a * b = p + e with p = fl(a * b), via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub(crate) const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub(crate) fn from_f64(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    /// Exact product of two doubles, kept to full precision.
    #[inline]
    pub(crate) fn prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub(crate) fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub(crate) fn sub(self, other: Dd) -> Dd {
        self.add(Dd { hi: -other.hi, lo: -other.lo })
    }

    #[inline]
    pub(crate) fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub(crate) fn mul_f64(self, c: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, c);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * c);
        Dd { hi, lo }
    }

    /// Long division with two Newton correction terms.
    pub(crate) fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = (r.hi + r.lo) / other.hi;
        let r = r.sub(other.mul_f64(q2));
        let q3 = (r.hi + r.lo) / other.hi;
        let (s, e) = quick_two_sum(q1, q2);
        let (hi, lo) = quick_two_sum(s, e + q3);
        Dd { hi, lo }
    }

    #[inline]
    pub(crate) fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            Dd { hi: -self.hi, lo: -self.lo }
        } else {
            self
        }
    }

    /// self >= c, resolved at full precision.
    #[inline]
    pub(crate) fn ge_f64(self, c: f64) -> bool {
        self.hi > c || (self.hi == c && self.lo >= 0.0)
    }
}
