//! Minimal fork-join helpers over contiguous index ranges.
//!
//! Work is always split the same way for a given `(len, workers)` pair and the
//! per-range results come back in range order, so reductions over them are
//! deterministic for a fixed worker count.

use alloc::vec::Vec;
use core::ops::Range;

/// Splits `0..len` into at most `workers` contiguous, nearly equal ranges.
pub fn split(len: usize, workers: usize) -> Vec<Range<usize>> {
    let workers = workers.max(1).min(len.max(1));
    let base = len / workers;
    let extra = len % workers;
    let mut out = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let size = base + usize::from(w < extra);
        out.push(start..start + size);
        start += size;
    }
    out
}

/// Splits `0..weights.len()` into at most `workers` contiguous ranges of roughly equal total weight.
pub fn split_weighted(weights: &[usize], workers: usize) -> Vec<Range<usize>> {
    let len = weights.len();
    let workers = workers.max(1).min(len.max(1));
    if workers == 1 {
        return alloc::vec![0..len];
    }
    let total: usize = weights.iter().sum();
    let mut out = Vec::with_capacity(workers);
    let mut start = 0;
    let mut acc = 0usize;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        let boundary = total * (out.len() + 1) / workers;
        if acc >= boundary && out.len() + 1 < workers {
            out.push(start..i + 1);
            start = i + 1;
        }
    }
    out.push(start..len);
    out
}

/// Runs `f` on every range, one range per thread, returning results in range order.
#[cfg(feature = "std")]
pub fn map_ranges<T, F>(ranges: &[Range<usize>], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    if ranges.len() <= 1 {
        return ranges.iter().cloned().map(f).collect();
    }
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = ranges[1..]
            .iter()
            .cloned()
            .map(|r| s.spawn(move || f(r)))
            .collect();
        let mut out = Vec::with_capacity(ranges.len());
        out.push(f(ranges[0].clone()));
        for h in handles {
            out.push(h.join().expect("worker thread panicked"));
        }
        out
    })
}

#[cfg(not(feature = "std"))]
pub fn map_ranges<T, F>(ranges: &[Range<usize>], f: F) -> Vec<T>
where
    F: Fn(Range<usize>) -> T,
{
    ranges.iter().cloned().map(f).collect()
}

/// Evaluates `f(i)` for `i in 0..len` on `workers` threads.
pub fn map_indices<T, F>(len: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let chunks = map_ranges(&split(len, workers), |r| r.map(&f).collect::<Vec<T>>());
    let mut out = Vec::with_capacity(len);
    for c in chunks {
        out.extend(c);
    }
    out
}

/// Hands each worker a disjoint block of `data` made of whole `unit`-sized items.
/// `f` receives the index of the first item in its block.
pub fn for_each_block_mut<T, F>(data: &mut [T], unit: usize, workers: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    assert!(unit > 0 && data.len().is_multiple_of(unit));
    let items = data.len() / unit;
    let ranges = split(items, workers);
    if ranges.len() <= 1 {
        f(0, data);
        return;
    }
    #[cfg(feature = "std")]
    {
        let f = &f;
        std::thread::scope(|s| {
            let mut rest = data;
            let mut blocks = Vec::with_capacity(ranges.len());
            for r in &ranges {
                let (head, tail) = rest.split_at_mut(r.len() * unit);
                blocks.push((r.start, head));
                rest = tail;
            }
            let mut iter = blocks.into_iter();
            let (first_start, first) = iter.next().expect("at least one block");
            let handles: Vec<_> = iter.map(|(start, block)| s.spawn(move || f(start, block))).collect();
            f(first_start, first);
            for h in handles {
                h.join().expect("worker thread panicked");
            }
        });
    }
    #[cfg(not(feature = "std"))]
    {
        let mut rest = data;
        for r in &ranges {
            let (head, tail) = rest.split_at_mut(r.len() * unit);
            f(r.start, head);
            rest = tail;
        }
    }
}

/// Runs `f(item, range)` with exclusive access to `items[k]` for `ranges[k]`,
/// one thread per pair, returning results in range order.
pub fn map_with<S, T, F>(items: &mut [S], ranges: &[Range<usize>], f: F) -> Vec<T>
where
    S: Send,
    T: Send,
    F: Fn(&mut S, Range<usize>) -> T + Sync,
{
    assert!(items.len() >= ranges.len());
    #[cfg(feature = "std")]
    if ranges.len() > 1 {
        let f = &f;
        return std::thread::scope(|s| {
            let mut pairs = items.iter_mut().zip(ranges.iter().cloned());
            let (first_item, first_range) = pairs.next().expect("non-empty");
            let handles: Vec<_> = pairs.map(|(item, r)| s.spawn(move || f(item, r))).collect();
            let mut out = Vec::with_capacity(ranges.len());
            out.push(f(first_item, first_range));
            for h in handles {
                out.push(h.join().expect("worker thread panicked"));
            }
            out
        });
    }
    items.iter_mut().zip(ranges.iter().cloned()).map(|(item, r)| f(item, r)).collect()
}
