use rand::Rng;

use crate::error::Result;
use crate::process::{exp_draw, HullPartition};
use crate::tree::HyperplaneCut;

/// Next cut of a hull partition together with its waiting cost. The leaf
/// and dimension pair are drawn jointly in proportion to the pair hull
/// perimeters, the line on the winning hull, and the cost from
/// `Exp(rate_scale * total perimeter)`. Returns `None` when every hull is
/// degenerate, i.e. the cost would be infinite.
pub fn propose_cut_on_hulls<R: Rng + ?Sized>(
    part: &HullPartition<'_>,
    rate_scale: f64,
    time: f64,
    rng: &mut R,
) -> Result<Option<(HyperplaneCut, f64)>> {
    let total = part.exact_rate();
    if !(total > 0.0) || !(rate_scale > 0.0) {
        return Ok(None);
    }
    let cost = exp_draw(rate_scale * total, rng);
    let cut = part.sample_cut(time + cost, rng)?;
    Ok(Some((cut, cost)))
}
