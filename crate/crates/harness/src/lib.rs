//! Synthetic scene bench for scenepose: scene generation, hypothesis
//! generation, the compared methods, evaluation tables and artifact IO.

pub mod bench;
pub mod evaluate;
pub mod hypothesize;
pub mod io;
pub mod library;
pub mod methods;
pub mod scenario;

/// Caps the global worker pool at `SCENE_SEARCH_THREADS` when it is set.
/// Returns the worker count in effect.
pub fn init_threads() -> anyhow::Result<usize> {
    let requested = match std::env::var("SCENE_SEARCH_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| anyhow::anyhow!("SCENE_SEARCH_THREADS must be a positive integer, got {v:?}"))?),
        Err(_) => None,
    };
    if requested == Some(0) {
        anyhow::bail!("SCENE_SEARCH_THREADS must be positive");
    }
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = requested {
            // a second call finds the pool already built; keep the first setting
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(1)
    }
}
