pub mod extrapolation;
pub mod ode;
pub mod quadrature;
