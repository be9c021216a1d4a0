//! Order-preserving map over a slice, on the rayon pool when the `parallel`
//! feature is enabled and requested, sequentially otherwise.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_ordered<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map_ordered(&xs, true, |x| x * x);
        let b = map_ordered(&xs, false, |x| x * x);
        assert_eq!(a, b);
    }
}
