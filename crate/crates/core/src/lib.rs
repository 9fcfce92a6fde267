//! Self-propelled particles with nematic alignment at three levels of
//! description: the stochastic particle model, the kinetic coefficient
//! machinery (GVM equilibria and the generalized collision invariant), and
//! the 1D macroscopic hyperbolic system with diffusion and reversal terms.

pub mod angle;
pub mod coefficients;
pub mod gci;
pub mod gvm;
pub mod hyperbolicity;
pub mod macro1d;
pub mod numerics;
pub mod particles;
