//! Shared numeric kernels: quadrature, cosine transforms, conjugate
//! gradients, interpolation, and fits.

pub mod dct;
pub mod fit;
pub mod pcg;
pub mod pchip;
pub mod quad;
