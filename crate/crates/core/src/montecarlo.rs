//! Deterministic parallel map/fold over Monte-Carlo tasks.
//!
//! Tasks are mapped in parallel in fixed-size chunks and folded strictly in
//! index order, so results are bit-identical for any thread count.

use rayon::prelude::*;

use crate::error::Result;

pub fn ordered_map_fold<T, A>(
    count: usize,
    init: A,
    map: impl Fn(usize) -> Result<T> + Sync,
    mut fold: impl FnMut(&mut A, usize, T),
) -> Result<A>
where
    T: Send,
{
    let chunk = (rayon::current_num_threads() * 2).max(1);
    let mut acc = init;
    let mut start = 0;
    while start < count {
        let end = (start + chunk).min(count);
        let results: Vec<T> = (start..end)
            .into_par_iter()
            .map(&map)
            .collect::<Result<_>>()?;
        for (offset, r) in results.into_iter().enumerate() {
            fold(&mut acc, start + offset, r);
        }
        start = end;
    }
    Ok(acc)
}
