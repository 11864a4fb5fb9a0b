//! Match a depth map's value distribution to a reference before scoring.

use cshift::eval::{histogram_specification, l1_x100};
use cshift::PredictionMap;

fn main() -> cshift::Result<()> {
    let reference = PredictionMap::from_fn(32, 32, 1, |y, x, _| (y * 32 + x) as f32 / 1024.0);
    // same ordering, different scale and offset
    let mut source = reference.clone();
    for v in source.data_mut() {
        *v = 0.3 + 0.2 * *v * *v;
    }
    let aligned = histogram_specification(&source, &reference, 256)?;
    println!("before alignment L1x100 {:.3}", l1_x100(&source, &reference)?);
    println!("after alignment  L1x100 {:.3}", l1_x100(&aligned, &reference)?);
    Ok(())
}
