//! Worker-count control. Results are always collected in input order, so the
//! number of workers never changes an output.

#[cfg(feature = "parallel")]
use std::sync::Arc;

#[derive(Clone, Default)]
pub struct Workers {
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workers").field("threads", &self.threads()).finish()
    }
}

impl Workers {
    /// `0` means one worker per available core.
    pub fn new(count: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            if count == 0 {
                return Workers { pool: None };
            }
            let pool = rayon::ThreadPoolBuilder::new().num_threads(count).build().expect("failed to start worker pool");
            Workers { pool: Some(Arc::new(pool)) }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = count;
            Workers {}
        }
    }

    pub fn sequential() -> Self {
        Workers::new(1)
    }

    pub fn threads(&self) -> usize {
        #[cfg(feature = "parallel")]
        {
            match &self.pool {
                Some(p) => p.current_num_threads(),
                None => rayon::current_num_threads(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        1
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if items.len() < 2 || self.threads() == 1 {
                return items.iter().map(f).collect();
            }
            match &self.pool {
                Some(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                None => items.par_iter().map(&f).collect(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_for_any_worker_count() {
        let items: Vec<u64> = (0..1000).collect();
        let want: Vec<u64> = items.iter().map(|v| v * v).collect();
        for w in [0, 1, 2, 5] {
            assert_eq!(Workers::new(w).map(&items, |v| v * v), want);
        }
    }
}
