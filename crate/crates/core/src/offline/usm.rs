//! Randomized double greedy for unconstrained (non-monotone) maximization.

use rand::Rng;

use crate::error::Result;
use crate::oracle::ValueOracle;
use crate::rng::StreamRng;
use crate::subset::{ElementId, Subset};

/// Grows `X` from `∅` and shrinks `Y` from `Ω` in index order.
///
/// For each `u`, with `a = f̂(X∪u) − f̂(X)` and `b = f̂(Y∖u) − f̂(Y)` clipped
/// at zero, `u` joins `X` with probability `a/(a+b)` (probability 1 when
/// both are zero) and otherwise leaves `Y`. At most `4n` queries.
pub fn randomized_usm(oracle: &mut dyn ValueOracle, n: usize, rng: &mut StreamRng) -> Result<Subset> {
    let mut x = Subset::empty();
    let mut y = Subset::full(n);
    for u in (0..n).map(ElementId::from) {
        let fx = oracle.query(&x)?;
        let x_plus = x.with(u);
        let a = oracle.query(&x_plus)? - fx;
        let fy = oracle.query(&y)?;
        let y_minus = y.without(u);
        let b = oracle.query(&y_minus)? - fy;
        let (a, b) = (a.max(0.0), b.max(0.0));
        let p = if a + b == 0.0 { 1.0 } else { a / (a + b) };
        if rng.random::<f64>() < p {
            x = x_plus;
        } else {
            y = y_minus;
        }
    }
    debug_assert_eq!(x, y);
    Ok(x)
}
