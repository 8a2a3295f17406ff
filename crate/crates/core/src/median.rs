//! Order statistics of weighted multisets without materializing the copies.
//!
//! A pair `(v, w)` stands for `w` copies of `v`. Ranks are 0-based positions
//! in the sorted, fully expanded multiset.

/// Value at 0-based `rank` of the expanded multiset, by three-way quickselect.
/// Reorders `items`. Panics if `rank` is not below the total weight.
pub fn weighted_select(items: &mut [(f64, u64)], rank: u64) -> f64 {
    let total: u64 = items.iter().map(|&(_, w)| w).sum();
    assert!(
        rank < total,
        "rank {rank} out of range for total weight {total}"
    );
    let mut lo = 0;
    let mut hi = items.len();
    let mut rank = rank;
    loop {
        let slice = &mut items[lo..hi];
        if slice.len() <= 16 {
            slice.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut seen = 0;
            for &(v, w) in slice.iter() {
                seen += w;
                if rank < seen {
                    return v;
                }
            }
            unreachable!("rank exceeds slice weight");
        }
        let pivot = median_of_three(slice);
        let (lt, gt) = partition3(slice, pivot);
        let w_lt: u64 = slice[..lt].iter().map(|&(_, w)| w).sum();
        let w_eq: u64 = slice[lt..gt].iter().map(|&(_, w)| w).sum();
        if rank < w_lt {
            hi = lo + lt;
        } else if rank < w_lt + w_eq {
            return pivot;
        } else {
            rank -= w_lt + w_eq;
            lo += gt;
        }
    }
}

fn median_of_three(slice: &[(f64, u64)]) -> f64 {
    let a = slice[0].0;
    let b = slice[slice.len() / 2].0;
    let c = slice[slice.len() - 1].0;
    if (a <= b) == (b <= c) {
        b
    } else if (b <= a) == (a <= c) {
        a
    } else {
        c
    }
}

/// Dutch-flag partition: `[..lt] < pivot`, `[lt..gt] == pivot`, `[gt..] > pivot`.
fn partition3(slice: &mut [(f64, u64)], pivot: f64) -> (usize, usize) {
    let (mut lt, mut i, mut gt) = (0, 0, slice.len());
    while i < gt {
        let v = slice[i].0;
        if v < pivot {
            slice.swap(lt, i);
            lt += 1;
            i += 1;
        } else if v > pivot {
            gt -= 1;
            slice.swap(i, gt);
        } else {
            i += 1;
        }
    }
    (lt, gt)
}

/// Median of the expanded multiset; an even total weight averages the two
/// middle order statistics.
pub fn weighted_median(items: &mut [(f64, u64)]) -> Option<f64> {
    let total: u64 = items.iter().map(|&(_, w)| w).sum();
    if total == 0 {
        return None;
    }
    let upper = weighted_select(items, total / 2);
    if total % 2 == 1 {
        Some(upper)
    } else {
        let lower = weighted_select(items, total / 2 - 1);
        Some(0.5 * (lower + upper))
    }
}
