//! One module per subcommand. Every command takes the resolved settings and
//! fills a report; it never prints, so main can aggregate and stay
//! byte-deterministic.

pub mod ansatz;
pub mod counterexample;
pub mod isoparam;
pub mod ode;
pub mod residual;
pub mod submersion;
