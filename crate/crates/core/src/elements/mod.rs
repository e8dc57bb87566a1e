//! Reference elements for full and trimmed polynomial differential forms.

mod basis;
pub mod poly;
pub mod quadrature;
pub mod rational;

pub use basis::{
    check_sequence_step, full_space, is_supported, local_derivative_inclusion, make_basis, trimmed_space,
    DofDescriptor, ElementFamily, FamilyKind, ReferenceBasis,
};
pub use quadrature::{gauss_legendre, quadrature, QuadratureRule, MAX_ORDER};
pub use rational::RationalMatrix;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Process-wide cache of reference bases; construction is exact and costly
/// compared with reuse.
pub fn shared_basis(family: ElementFamily, dim: usize) -> crate::error::Result<Arc<ReferenceBasis>> {
    static CACHE: OnceLock<Mutex<HashMap<(ElementFamily, usize), Arc<ReferenceBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache").get(&(family, dim)) {
        return Ok(b.clone());
    }
    let b = Arc::new(make_basis(family, dim)?);
    cache
        .lock()
        .expect("basis cache")
        .entry((family, dim))
        .or_insert_with(|| b.clone());
    Ok(b)
}
