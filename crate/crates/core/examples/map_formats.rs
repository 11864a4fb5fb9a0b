//! Round-trip a prediction map through the CSMAP binary format.

use cshift::csmap::{decode_map, encode_map, read_task_map, write_task_map};
use cshift::{PredictionMap, TaskSpec};

fn main() -> cshift::Result<()> {
    let task = TaskSpec::classification("seg", 3);
    let map = PredictionMap::from_fn(4, 4, 3, |y, x, c| if (y + x) % 3 == c { 0.8 } else { 0.1 });
    let bytes = encode_map(&map);
    println!("{}x{}x{} map -> {} bytes, magic {:?}", 4, 4, 3, bytes.len(), &bytes[..6]);
    assert_eq!(decode_map(&bytes)?, map);

    let path = std::env::temp_dir().join("seg.csmap");
    write_task_map(&map, &task, &path)?;
    let back = read_task_map(&path, &task)?;
    println!("read back from {}: equal = {}", path.display(), back == map);

    let mut truncated = bytes.clone();
    truncated.truncate(bytes.len() - 1);
    println!("truncated file: {}", decode_map(&truncated).unwrap_err());
    Ok(())
}
