use crate::error::{Result, ValuationError};
use crate::scalar::Real;

/// Cosine of the angle between `a` and `b`, clamped to `[-1, 1]`.
pub fn cosine_similarity<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(ValuationError::LengthMismatch(a.len(), b.len()));
    }
    let dot = a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    let na = a.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let nb = b.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    if na == T::zero() || nb == T::zero() {
        return Err(ValuationError::ZeroNorm);
    }
    Ok((dot / (na * nb)).max(-T::one()).min(T::one()))
}
