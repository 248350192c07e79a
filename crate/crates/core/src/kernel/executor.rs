//! Runs a batch of independent work items on the persistent worker pool, or
//! inline when built without the `parallel` feature.

use serde::{Deserialize, Serialize};

use super::KernelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Everything on the calling thread, whatever the worker count.
    Sequential,
    /// Persistent rayon pool. Falls back to sequential without the
    /// `parallel` feature.
    Rayon,
}

impl Default for Backend {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Backend::Rayon
        } else {
            Backend::Sequential
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sequential" | "seq" => Ok(Backend::Sequential),
            "rayon" | "parallel" => Ok(Backend::Rayon),
            other => Err(format!("unknown backend '{other}'")),
        }
    }
}

pub(crate) struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub(crate) fn new(backend: Backend, threads: usize) -> Result<Self, KernelError> {
        #[cfg(feature = "parallel")]
        {
            let pool = match backend {
                Backend::Rayon if threads > 1 => Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .thread_name(|i| format!("snn-worker-{i}"))
                        .build()
                        .map_err(|e| KernelError::Pool(e.to_string()))?,
                ),
                _ => None,
            };
            Ok(Self { pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = (backend, threads);
            Ok(Self {})
        }
    }

    pub(crate) fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    /// Calls `f` once per item and returns when all calls have finished.
    pub(crate) fn for_each<T, F>(&self, items: Vec<T>, f: F)
    where
        T: Send,
        F: Fn(T) + Sync,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            let f = &f;
            pool.scope(move |s| {
                let mut items = items.into_iter();
                let first = items.next();
                for item in items {
                    s.spawn(move |_| f(item));
                }
                if let Some(item) = first {
                    f(item);
                }
            });
            return;
        }
        items.into_iter().for_each(f);
    }
}
