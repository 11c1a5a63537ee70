//! Not-a-knot cubic spline through complex samples on a real axis.

use crate::grid::C64;

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<C64>,
    m: Vec<C64>,
}

impl CubicSpline {
    /// Needs at least 4 strictly increasing knots.
    pub fn new(x: &[f64], y: &[C64]) -> Option<Self> {
        let n = x.len();
        if n < 4 || y.len() != n || !x.windows(2).all(|w| w[0] < w[1]) {
            return None;
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} follow from third-derivative
        // continuity at x_1 and x_{n-2}.
        let m_len = n - 2;
        let mut sub = vec![0.0; m_len];
        let mut diag = vec![0.0; m_len];
        let mut sup = vec![0.0; m_len];
        let mut rhs = vec![C64::new(0.0, 0.0); m_len];
        for j in 0..m_len {
            let i = j + 1;
            sub[j] = h[i - 1];
            diag[j] = 2.0 * (h[i - 1] + h[i]);
            sup[j] = h[i];
            rhs[j] = ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]) * 6.0;
        }
        // Row for i = 1 absorbs M_0 = ((h0 + h1) M_1 - h0 M_2) / h1.
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 * (h0 + h1) / h1;
        sup[0] -= h0 * h0 / h1;
        // Row for i = n-2 absorbs M_{n-1} = ((a + b) M_{n-2} - b M_{n-3}) / a.
        let (a, b) = (h[n - 3], h[n - 2]);
        let last = m_len - 1;
        diag[last] += b * (a + b) / a;
        sub[last] -= b * b / a;

        // Thomas algorithm.
        let mut c = vec![0.0; m_len];
        let mut d = vec![C64::new(0.0, 0.0); m_len];
        c[0] = sup[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for j in 1..m_len {
            let den = diag[j] - sub[j] * c[j - 1];
            c[j] = sup[j] / den;
            d[j] = (rhs[j] - d[j - 1] * sub[j]) / den;
        }
        let mut inner = vec![C64::new(0.0, 0.0); m_len];
        inner[last] = d[last];
        for j in (0..last).rev() {
            inner[j] = d[j] - inner[j + 1] * c[j];
        }
        let mut m = Vec::with_capacity(n);
        m.push((inner[0] * (h0 + h1) - inner[1.min(last)] * h0) / h1);
        m.extend_from_slice(&inner);
        let prev = if last >= 1 {
            inner[last - 1]
        } else {
            inner[last]
        };
        m.push((inner[last] * (a + b) - prev * b) / a);
        Some(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    /// Spline value inside the knot range; outside it, the nearest knot's
    /// value.
    pub fn eval(&self, t: f64) -> C64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = self.x[i + 1] - t;
        let b = t - self.x[i];
        self.m[i] * (a * a * a / (6.0 * h))
            + self.m[i + 1] * (b * b * b / (6.0 * h))
            + (self.y[i] / h - self.m[i] * (h / 6.0)) * a
            + (self.y[i + 1] / h - self.m[i + 1] * (h / 6.0)) * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic(x: f64) -> C64 {
        C64::new(
            0.02 * x * x * x - 0.3 * x * x + x - 4.0,
            -0.01 * x * x * x + 0.5 * x,
        )
    }

    #[test]
    fn four_knots_reproduce_a_cubic() {
        let xs = [-20.0, -3.0, 8.0, 19.0];
        let ys: Vec<C64> = xs.iter().map(|&x| cubic(x)).collect();
        let s = CubicSpline::new(&xs, &ys).unwrap();
        for t in -20..=19 {
            let t = t as f64;
            assert!((s.eval(t) - cubic(t)).norm() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn outside_the_hull_holds_the_nearest_knot() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<C64> = xs.iter().map(|&x| cubic(x)).collect();
        let s = CubicSpline::new(&xs, &ys).unwrap();
        assert_eq!(s.eval(-5.0), ys[0]);
        assert_eq!(s.eval(7.0), ys[3]);
    }

    #[test]
    fn too_few_knots() {
        assert!(CubicSpline::new(&[0.0, 1.0, 2.0], &[C64::new(0.0, 0.0); 3]).is_none());
    }

    proptest! {
        #[test]
        fn interpolates_knots_and_cubics(n in 4usize..30, seed in 0u64..1000) {
            let xs: Vec<f64> = (0..n).map(|i| i as f64 * 1.5 + ((seed + i as u64) % 3) as f64 * 0.3).collect();
            let ys: Vec<C64> = xs.iter().map(|&x| cubic(x)).collect();
            let s = CubicSpline::new(&xs, &ys).unwrap();
            for (x, y) in xs.iter().zip(&ys) {
                prop_assert!((s.eval(*x) - y).norm() < 1e-9);
            }
            let mid = (xs[0] + xs[1]) / 2.0;
            prop_assert!((s.eval(mid) - cubic(mid)).norm() < 1e-7);
        }
    }
}
