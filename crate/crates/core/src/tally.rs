//! Complex arithmetic with real-operation counting.
//!
//! Conventions: a complex division costs 6 multiplications, 2 divisions,
//! 2 additions and 1 subtraction; a complex multiplication costs 4
//! multiplications and 3 additions. Estimators route their arithmetic
//! through a [`Tally`] so instrumented counts can be audited against the
//! closed forms in [`crate::complexity`].

use std::cell::Cell;

use crate::complexity::OpCount;
use crate::grid::C64;

#[derive(Debug, Default, Clone)]
pub struct Tally {
    muldiv: Cell<u64>,
    addsub: Cell<u64>,
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> OpCount {
        OpCount::new(self.muldiv.get() as u128, self.addsub.get() as u128)
    }

    pub fn reset(&self) {
        self.muldiv.set(0);
        self.addsub.set(0);
    }

    #[inline]
    fn add(&self, muldiv: u64, addsub: u64) {
        self.muldiv.set(self.muldiv.get() + muldiv);
        self.addsub.set(self.addsub.get() + addsub);
    }

    /// `a / b` evaluated as `((ac + bd) + j(bc - ad)) / (c^2 + d^2)`.
    #[inline]
    pub fn cdiv(&self, a: C64, b: C64) -> C64 {
        self.add(8, 3);
        let den = b.re * b.re + b.im * b.im;
        C64::new(
            (a.re * b.re + a.im * b.im) / den,
            (a.im * b.re - a.re * b.im) / den,
        )
    }

    #[inline]
    pub fn cmul(&self, a: C64, b: C64) -> C64 {
        self.add(4, 3);
        C64::new(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)
    }

    #[inline]
    pub fn cadd(&self, a: C64, b: C64) -> C64 {
        self.add(0, 2);
        C64::new(a.re + b.re, a.im + b.im)
    }

    #[inline]
    pub fn csub(&self, a: C64, b: C64) -> C64 {
        self.add(0, 2);
        C64::new(a.re - b.re, a.im - b.im)
    }

    /// Complex times real scalar.
    #[inline]
    pub fn scale(&self, a: C64, s: f64) -> C64 {
        self.add(2, 0);
        C64::new(a.re * s, a.im * s)
    }

    /// Complex divided by real scalar.
    #[inline]
    pub fn div_real(&self, a: C64, s: f64) -> C64 {
        self.add(2, 0);
        C64::new(a.re / s, a.im / s)
    }
}
