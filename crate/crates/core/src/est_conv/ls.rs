use crate::error::{Error, Result};
use crate::grid::{CGrid, C64};
use crate::tally::Tally;

/// Preamble LS: `sum_u y_u[k] / (P * lambda[k])`. Real preamble entries are
/// divided as reals (2 divisions per subcarrier).
pub fn ls_preamble(received: &CGrid, preamble: &[C64], tally: &Tally) -> Result<Vec<C64>> {
    let p = received.cols();
    if p == 0 {
        return Err(Error::shape("LS needs at least one preamble symbol"));
    }
    if received.rows() != preamble.len() {
        return Err(Error::shape(format!(
            "{} received rows vs preamble of length {}",
            received.rows(),
            preamble.len()
        )));
    }
    let mut out = Vec::with_capacity(preamble.len());
    for (k, &lam) in preamble.iter().enumerate() {
        if lam.norm_sqr() == 0.0 {
            return Err(Error::DivideByZero(format!("preamble entry {k} is zero")));
        }
        let mut s = received.get(k, 0);
        for u in 1..p {
            s = tally.cadd(s, received.get(k, u));
        }
        let v = if lam.im == 0.0 {
            tally.div_real(s, p as f64 * lam.re)
        } else {
            tally.cdiv(s, lam * p as f64)
        };
        out.push(v);
    }
    Ok(out)
}

/// LS at known pilot positions: `y[r] / x[r]` for each listed row.
pub fn ls_pilots(y: &[C64], rows: &[usize], values: &[C64], tally: &Tally) -> Vec<C64> {
    rows.iter()
        .zip(values)
        .map(|(&r, &x)| {
            if x.im == 0.0 {
                tally.div_real(y[r], x.re)
            } else {
                tally.cdiv(y[r], x)
            }
        })
        .collect()
}
